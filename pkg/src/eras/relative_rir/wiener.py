"""Time-domain least-squares (Wiener) filter from an estimate to a target channel.

Tap ``j`` applies shift ``s_j = j - anticausal_taps``:
``mapped[l] = Σ_j w[j] est[l - s_j]`` for ``0 <= l < L`` with ``est`` zero
outside the signal, so the Gram matrix is computed exactly (no circular or
stationary approximation).
"""
import dataclasses
import typing

import numpy as np
import scipy.signal

from ..dsp import Waveform
from ..helpers.exceptions import ConfigException
from .fcp import MappingException
from .solver import solve_hermitian


@dataclasses.dataclass(frozen=True)
class WienerConfig:
    filter_length: int = 512
    anticausal_taps: int = 0
    regularizer_eps: float = 1e-10

    def __post_init__(self):
        if self.filter_length < 1:
            raise ConfigException(f"Wiener filter_length must be >= 1, got {self.filter_length}")
        if not 0 <= self.anticausal_taps < self.filter_length:
            raise ConfigException(
                f"anticausal_taps must lie in [0, {self.filter_length}), got {self.anticausal_taps}"
            )
        if self.regularizer_eps < 0.0:
            raise ConfigException(f"Regularizer must be non-negative, got {self.regularizer_eps}")

    def shifts(self) -> np.ndarray:
        return np.arange(self.filter_length) - self.anticausal_taps


class WienerResult(typing.NamedTuple):
    mapped: typing.Union[Waveform, np.ndarray]
    filter: np.ndarray


def gram_matrix(est: np.ndarray, cfg: WienerConfig) -> np.ndarray:
    """``R[i, j] = Σ_{0<=l<L} est[l - s_i] est[l - s_j]`` via per-lag prefix sums."""
    L = est.shape[0]
    n = cfg.filter_length
    s = cfg.shifts()
    R = np.zeros((n, n))
    for d in range(min(n, L)):
        prefix = np.concatenate(([0.0], np.cumsum(est[d:] * est[: L - d])))
        j = np.arange(d, n)
        lo = np.maximum(0, -s[j])
        hi = np.minimum(L - d, L - s[j])
        hi = np.maximum(hi, lo)
        values = prefix[np.clip(hi, 0, L - d)] - prefix[np.clip(lo, 0, L - d)]
        R[j - d, j] = values
        R[j, j - d] = values
    return R


def cross_correlation(est: np.ndarray, target: np.ndarray, cfg: WienerConfig) -> np.ndarray:
    """``b[i] = Σ_l target[l] est[l - s_i]``."""
    L = est.shape[0]
    full = scipy.signal.correlate(target, est, mode="full", method="fft")
    lags = cfg.shifts() + L - 1
    valid = (lags >= 0) & (lags < full.shape[0])
    b = np.zeros(cfg.filter_length)
    b[valid] = full[lags[valid]]
    return b


def apply_filter(est: np.ndarray, taps: np.ndarray, anticausal_taps: int = 0) -> np.ndarray:
    L = est.shape[0]
    full = scipy.signal.fftconvolve(est, taps, mode="full")
    return full[anticausal_taps : anticausal_taps + L]


def wiener_map(
    est: typing.Union[Waveform, np.ndarray],
    target_mix: typing.Union[Waveform, np.ndarray],
    cfg: WienerConfig = WienerConfig(),
) -> WienerResult:
    if isinstance(est, Waveform) and isinstance(target_mix, Waveform) and est.sample_rate != target_mix.sample_rate:
        raise MappingException(f"Sample rates differ: {est.sample_rate} vs {target_mix.sample_rate}")
    e = est.mono if isinstance(est, Waveform) else np.asarray(est, dtype=np.float64)
    x = target_mix.mono if isinstance(target_mix, Waveform) else np.asarray(target_mix, dtype=np.float64)
    if e.shape != x.shape or e.ndim != 1:
        raise MappingException(f"Wiener mapping needs equal-length single channels, got {e.shape} and {x.shape}")

    if not np.any(e):
        if np.any(x):
            raise MappingException("cannot filter silence to a nonzero target")
        taps = np.zeros(cfg.filter_length)
    else:
        R = gram_matrix(e, cfg)
        b = cross_correlation(e, x, cfg)
        taps = solve_hermitian(R, b, cfg.regularizer_eps)

    mapped = apply_filter(e, taps, cfg.anticausal_taps)
    if isinstance(est, Waveform):
        return WienerResult(est.with_samples(mapped), taps)
    return WienerResult(mapped, taps)
