import dataclasses
import typing

import numpy as np

from ..helpers.exceptions import DataException


@dataclasses.dataclass(frozen=True, eq=False)
class LambdaWeights:
    """Per-bin power normalizer ``λ[t, f]`` of the weighted least-squares filter fit."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DataException(f"λ must be [T, F], got shape {values.shape}")
        if not np.all(values > 0.0) or not np.all(np.isfinite(values)):
            raise DataException("λ must be finite and strictly positive")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> typing.Tuple[int, int]:
        return self.values.shape

    @property
    def inverse(self) -> np.ndarray:
        return 1.0 / self.values


def compute_lambda(mixture_specs: typing.Sequence, floor_coeff: float = 1e-4) -> LambdaWeights:
    """``mean_m |X_m|² + floor_coeff * max_{t,f} mean_m |X_m|²``."""
    if not mixture_specs:
        raise DataException("compute_lambda needs at least one mixture spectrogram")
    arrays = [np.asarray(getattr(s, "bins", s)) for s in mixture_specs]
    shapes = {a.shape for a in arrays}
    if len(shapes) != 1:
        raise DataException(f"Mixture spectrograms differ in shape: {sorted(shapes)}")
    if floor_coeff <= 0.0:
        raise DataException(f"λ floor coefficient must be positive, got {floor_coeff}")

    power = np.mean([np.abs(a) ** 2 for a in arrays], axis=0)
    peak = float(np.max(power))
    if not peak > 0.0:
        raise DataException("degenerate λ: all mixtures are identically zero")
    return LambdaWeights(power + floor_coeff * peak)
