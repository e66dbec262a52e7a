"""Short-time Fourier transform with a square-root Hann window.

Padding rule: the signal is reflect-padded by ``window_length // 2`` samples on
both ends, then zero-padded on the right so that exactly
``T = 1 + ceil(length / hop_length)`` frames fit. The inverse divides the
overlap-added frames by the summed squared window and drops the leading pad,
so ``istft(stft(w), length=w.length)`` reproduces ``w`` up to rounding.
"""
import dataclasses
import math
import typing

import numpy as np
import scipy.signal
from numpy.lib.stride_tricks import sliding_window_view

from ..helpers.exceptions import ConfigException, DataException
from ..utils import check_finite
from .waveform import Waveform

WINDOW_KINDS = ("sqrt_hann",)
ENVELOPE_FLOOR = 1e-10


class StftException(DataException):
    pass


@dataclasses.dataclass(frozen=True)
class StftConfig:
    window_length: int = 256
    hop_length: int = 64
    fft_size: int = 256
    window_kind: str = "sqrt_hann"

    def __post_init__(self):
        if self.window_length < 2 or self.hop_length < 1:
            raise ConfigException(f"Invalid STFT sizes {self}")
        if self.window_length % self.hop_length != 0:
            raise ConfigException(
                f"hop_length {self.hop_length} must divide window_length {self.window_length}"
            )
        if self.fft_size < self.window_length:
            raise ConfigException(
                f"fft_size {self.fft_size} must be >= window_length {self.window_length}"
            )
        if self.window_kind not in WINDOW_KINDS:
            raise ConfigException(f"Unsupported window kind '{self.window_kind}', expected one of {WINDOW_KINDS}")

    @property
    def n_freqs(self) -> int:
        return self.fft_size // 2 + 1

    @property
    def pad(self) -> int:
        return self.window_length // 2

    def window(self) -> np.ndarray:
        # periodic Hann, sqrt taken so analysis x synthesis gives a Hann overlap-add
        return np.sqrt(scipy.signal.get_window("hann", self.window_length, fftbins=True))

    @staticmethod
    def from_dict(d: typing.Dict[str, typing.Any]) -> "StftConfig":
        unknown = set(d) - {f.name for f in dataclasses.fields(StftConfig)}
        if unknown:
            raise ConfigException(f"Unknown STFT config keys {sorted(unknown)}")
        return StftConfig(**d)


def n_frames(length: int, cfg: StftConfig) -> int:
    return 1 + math.ceil(length / cfg.hop_length)


@dataclasses.dataclass(frozen=True, eq=False)
class Spectrogram:
    """Complex STFT of one channel, ``bins`` shaped [T, F]."""

    bins: np.ndarray
    config: StftConfig
    original_length: int
    sample_rate: int = 8000

    def __post_init__(self):
        bins = np.asarray(self.bins, dtype=np.complex128)
        if bins.ndim != 2 or bins.shape[1] != self.config.n_freqs:
            raise StftException(
                f"Spectrogram bins must be [T, {self.config.n_freqs}], got shape {bins.shape}"
            )
        check_finite("Spectrogram bins", bins, exception=DataException)
        bins.setflags(write=False)
        object.__setattr__(self, "bins", bins)

    @property
    def frames(self) -> int:
        return self.bins.shape[0]

    @property
    def freqs(self) -> int:
        return self.bins.shape[1]

    @property
    def shape(self) -> typing.Tuple[int, int]:
        return self.bins.shape

    def with_bins(self, bins: np.ndarray) -> "Spectrogram":
        return Spectrogram(bins, self.config, self.original_length, self.sample_rate)

    def zeros_like(self) -> "Spectrogram":
        return self.with_bins(np.zeros_like(self.bins))

    def __str__(self):
        return f"Spectrogram(frames={self.frames},freqs={self.freqs},length={self.original_length})"


def stft(w: typing.Union[Waveform, np.ndarray], cfg: StftConfig = StftConfig(), sample_rate: int = 8000) -> Spectrogram:
    if isinstance(w, Waveform):
        x = w.mono
        sample_rate = w.sample_rate
    else:
        x = np.asarray(w, dtype=np.float64)
        if x.ndim != 1:
            raise StftException(f"stft expects a single channel, got shape {x.shape}")
    length = x.shape[0]
    if length < cfg.window_length:
        raise StftException(f"input too short: {length} samples < window of {cfg.window_length}")

    T = n_frames(length, cfg)
    padded = np.pad(x, (cfg.pad, cfg.pad), mode="reflect")
    total = cfg.window_length + (T - 1) * cfg.hop_length
    padded = np.pad(padded, (0, total - padded.shape[0]))

    frames = sliding_window_view(padded, cfg.window_length)[:: cfg.hop_length] * cfg.window()
    bins = np.fft.rfft(frames, n=cfg.fft_size, axis=-1)
    return Spectrogram(bins, cfg, length, sample_rate)


def stft_channels(w: Waveform, cfg: StftConfig = StftConfig()) -> typing.List[Spectrogram]:
    return [stft(w.channel(c), cfg) for c in range(w.channels)]


def istft(spec: Spectrogram, cfg: typing.Optional[StftConfig] = None, length: typing.Optional[int] = None) -> Waveform:
    cfg = spec.config if cfg is None else cfg
    if cfg != spec.config:
        raise StftException(f"Spectrogram was computed with {spec.config}, not {cfg}")
    length = spec.original_length if length is None else int(length)
    T = spec.frames
    representable = (T - 1) * cfg.hop_length
    if length < 1 or length > representable:
        raise StftException(f"Cannot reconstruct {length} samples from {T} frames (at most {representable})")

    window = cfg.window()
    frames = np.fft.irfft(spec.bins, n=cfg.fft_size, axis=-1)[:, : cfg.window_length] * window
    total = cfg.window_length + (T - 1) * cfg.hop_length
    signal = np.zeros(total)
    envelope = np.zeros(total)
    for t in range(T):
        start = t * cfg.hop_length
        signal[start : start + cfg.window_length] += frames[t]
        envelope[start : start + cfg.window_length] += window * window

    covered = envelope > ENVELOPE_FLOOR
    signal[covered] /= envelope[covered]
    signal[~covered] = 0.0
    return Waveform(signal[cfg.pad : cfg.pad + length], spec.sample_rate)


def framewise_energy(spec: Spectrogram) -> np.ndarray:
    """Energy of each windowed frame recovered from the one-sided spectrum (Parseval)."""
    power = np.abs(spec.bins) ** 2
    weights = np.full(spec.freqs, 2.0)
    weights[0] = 1.0
    if spec.config.fft_size % 2 == 0:
        weights[-1] = 1.0
    return power @ weights / spec.config.fft_size
