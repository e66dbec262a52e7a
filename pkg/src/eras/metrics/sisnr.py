import typing

import numpy as np

from ..dsp import Waveform
from ..helpers.exceptions import DataException
from ..relative_rir import WienerConfig, wiener_map

DB_CAP = 60.0


def _mono(x: typing.Union[Waveform, np.ndarray]) -> np.ndarray:
    return x.mono if isinstance(x, Waveform) else np.asarray(x, dtype=np.float64)


def _check_pair(ref: np.ndarray, est: np.ndarray):
    if ref.shape != est.shape or ref.ndim != 1:
        raise DataException(f"Reference {ref.shape} and estimate {est.shape} must be equal-length single channels")
    if not np.any(ref):
        raise DataException("Cannot score against a zero reference")


def energy_ratio_db(target: np.ndarray, residual: np.ndarray) -> float:
    """``10 log10(|target|² / |residual|²)`` capped at ±60 dB."""
    target_energy = float(np.dot(target, target))
    residual_energy = float(np.dot(residual, residual))
    if target_energy <= 0.0:
        return -DB_CAP
    if residual_energy <= target_energy * 10.0 ** (-DB_CAP / 10.0):
        return DB_CAP
    return float(np.clip(10.0 * np.log10(target_energy / residual_energy), -DB_CAP, DB_CAP))


def si_snr(ref: typing.Union[Waveform, np.ndarray], est: typing.Union[Waveform, np.ndarray]) -> float:
    """Scale-invariant SNR of ``est`` against ``ref`` in dB, no mean removal."""
    r, e = _mono(ref), _mono(est)
    _check_pair(r, e)
    target = (np.dot(e, r) / np.dot(r, r)) * r
    return energy_ratio_db(target, e - target)


def sdr_filtered(
    ref: typing.Union[Waveform, np.ndarray], est: typing.Union[Waveform, np.ndarray], taps: int = 512
) -> float:
    """SDR allowing a ``taps``-long causal FIR distortion of the reference.

    The least-squares filter of ``ref`` explaining ``est`` gives the target
    part; the rest of ``est`` is distortion.
    """
    r, e = _mono(ref), _mono(est)
    _check_pair(r, e)
    target = wiener_map(r, e, WienerConfig(filter_length=taps, regularizer_eps=0.0)).mapped
    return energy_ratio_db(target, e - target)


def si_snr_improvement(
    ref: typing.Union[Waveform, np.ndarray],
    est: typing.Union[Waveform, np.ndarray],
    mixture: typing.Union[Waveform, np.ndarray],
) -> float:
    return si_snr(ref, est) - si_snr(ref, mixture)
