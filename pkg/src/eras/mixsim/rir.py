import dataclasses
import typing

import numpy as np

from ..helpers.exceptions import ConfigException, DataException
from ..utils import check_finite

RT60_MIN = 0.05
RT60_MAX = 1.0


@dataclasses.dataclass(frozen=True, eq=False)
class Rir:
    taps: np.ndarray
    delay_to_direct: int
    sample_rate: int

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.float64)
        if taps.ndim != 1 or taps.shape[0] <= self.delay_to_direct:
            raise DataException(f"RIR of shape {taps.shape} cannot hold a direct tap at {self.delay_to_direct}")
        check_finite("RIR taps", taps, exception=DataException)
        nonzero = np.flatnonzero(taps)
        if nonzero.size and nonzero[0] != self.delay_to_direct:
            raise DataException(
                f"First nonzero RIR tap at {nonzero[0]}, expected the direct path at {self.delay_to_direct}"
            )
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)

    @property
    def length(self) -> int:
        return self.taps.shape[0]

    def direct(self) -> np.ndarray:
        return self.taps[: self.delay_to_direct + 1]

    def early(self, window_ms: float) -> np.ndarray:
        end = self.delay_to_direct + int(round(window_ms * 1e-3 * self.sample_rate)) + 1
        return self.taps[:end]

    @staticmethod
    def identity(length: int = 1, sample_rate: int = 8000) -> "Rir":
        taps = np.zeros(length)
        taps[0] = 1.0
        return Rir(taps, 0, sample_rate)


@dataclasses.dataclass(frozen=True)
class RirParams:
    rt60: float
    delay: int
    length: int = 4096
    drr_db: float = 3.0

    def __post_init__(self):
        if not RT60_MIN <= self.rt60 <= RT60_MAX:
            raise ConfigException(f"rt60 {self.rt60} s outside [{RT60_MIN}, {RT60_MAX}]")
        if self.delay < 0 or self.length < self.delay + 2:
            raise ConfigException(f"RIR length {self.length} too short for delay {self.delay}")


def decay_envelope(n: int, rt60: float, sample_rate: int) -> np.ndarray:
    """Amplitude envelope reaching -60 dB in energy after ``rt60`` seconds."""
    t = np.arange(1, n + 1) / sample_rate
    return np.exp(-3.0 * np.log(10.0) * t / rt60)


def synth_rir(params: RirParams, seed: int, sample_rate: int = 8000) -> Rir:
    """Unit direct tap at ``params.delay`` followed by an exponentially decaying noise tail.

    The tail energy is ``10 ** (-drr_db / 10)`` relative to the direct tap.
    """
    rng = np.random.default_rng(seed)
    n = params.length - params.delay - 1
    tail = rng.standard_normal(n) * decay_envelope(n, params.rt60, sample_rate)
    tail *= np.sqrt(10.0 ** (-params.drr_db / 10.0) / np.sum(tail * tail))

    taps = np.zeros(params.length)
    taps[params.delay] = 1.0
    taps[params.delay + 1 :] = tail
    return Rir(taps, params.delay, sample_rate)


def estimate_rt60(rir: Rir, fit_range_db: typing.Tuple[float, float] = (-5.0, -35.0)) -> float:
    """Schroeder backward integration of the tail with a line fit over ``fit_range_db``."""
    tail = rir.taps[rir.delay_to_direct + 1 :]
    edc = np.cumsum((tail * tail)[::-1])[::-1]
    edc_db = 10.0 * np.log10(np.maximum(edc / edc[0], 1e-300))
    upper, lower = fit_range_db
    fit = (edc_db <= upper) & (edc_db >= lower)
    if np.count_nonzero(fit) < 2:
        raise DataException(f"RIR tail does not span the {fit_range_db} dB fit range")
    t = np.flatnonzero(fit) / rir.sample_rate
    slope, _ = np.polyfit(t, edc_db[fit], 1)
    return -60.0 / slope
