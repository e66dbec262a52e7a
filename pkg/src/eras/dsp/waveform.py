import dataclasses
import typing

import numpy as np

from ..helpers.exceptions import DataException
from ..utils import check_finite


@dataclasses.dataclass(frozen=True, eq=False)
class Waveform:
    """Multi-channel time-domain signal, samples shaped [channels, length] in float64"""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim == 1:
            samples = samples[np.newaxis, :]
        if samples.ndim != 2:
            raise DataException(
                f"Waveform samples must be [channels, length], got shape {samples.shape}"
            )
        if samples.shape[0] < 1 or samples.shape[1] < 1:
            raise DataException(f"Waveform cannot be empty, got shape {samples.shape}")
        if int(self.sample_rate) <= 0:
            raise DataException(f"Invalid sample rate {self.sample_rate}")
        check_finite("Waveform samples", samples, exception=DataException)
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def channels(self) -> int:
        return self.samples.shape[0]

    @property
    def length(self) -> int:
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        return self.length / self.sample_rate

    @property
    def mono(self) -> np.ndarray:
        if self.channels != 1:
            raise DataException(f"Expected a single-channel waveform, got {self.channels} channels")
        return self.samples[0]

    def channel(self, index: int) -> "Waveform":
        return Waveform(self.samples[index], self.sample_rate)

    def with_samples(self, samples: np.ndarray) -> "Waveform":
        return Waveform(samples, self.sample_rate)

    def __str__(self):
        return f"Waveform(channels={self.channels},length={self.length},sample_rate={self.sample_rate})"


class NormalizedWaveform(typing.NamedTuple):
    waveform: Waveform
    scale: float


def normalize_by_std(w: Waveform) -> NormalizedWaveform:
    """Divide by the standard deviation over all samples; ``scale`` undoes it."""
    scale = float(np.std(w.samples))
    if not scale > 0.0:
        raise DataException(f"Cannot normalize {w}: degenerate input with zero variance")
    return NormalizedWaveform(w.with_samples(w.samples / scale), scale)


def stack_channels(waveforms: typing.Sequence[Waveform]) -> Waveform:
    if not waveforms:
        raise DataException("Cannot stack an empty list of waveforms")
    rates = {w.sample_rate for w in waveforms}
    if len(rates) != 1:
        raise DataException(f"Cannot stack waveforms with sample rates {sorted(rates)}")
    lengths = {w.length for w in waveforms}
    if len(lengths) != 1:
        raise DataException(f"Cannot stack waveforms with lengths {sorted(lengths)}")
    return Waveform(np.concatenate([w.samples for w in waveforms], axis=0), rates.pop())
