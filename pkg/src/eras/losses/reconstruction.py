import typing

import numpy as np

from ..autograd import Tensor, as_complex, complex_sum, ops
from ..helpers.exceptions import DataException


class LossException(DataException):
    pass


def mixture_norm(norm_mix) -> float:
    """``Σ|Re X| + Σ|Im X| + Σ|X|`` of the normalizing mixture, as a constant."""
    values = as_complex(norm_mix).numpy()
    return float(np.sum(np.abs(values.real)) + np.sum(np.abs(values.imag)) + np.sum(np.abs(values)))


def signal_loss(ref, est, norm_mix) -> Tensor:
    """L1 distance of real parts, imaginary parts and magnitudes, over :func:`mixture_norm`."""
    ref, est = as_complex(ref), as_complex(est)
    if ref.shape != est.shape:
        raise LossException(f"Reference {ref.shape} and estimate {est.shape} differ in shape")
    denominator = mixture_norm(norm_mix)
    if not denominator > 0.0:
        raise LossException("Cannot normalize the signal loss by a zero-norm mixture")

    numerator = ops.add(
        ops.add(ops.l1_distance(ref.re, est.re), ops.l1_distance(ref.im, est.im)),
        ops.l1_distance(ref.magnitude(), est.magnitude()),
    )
    return ops.scale(numerator, 1.0 / denominator)


def ras_loss(mix_target, mapped: typing.Sequence, norm_mix) -> Tensor:
    """Reconstruction of the target mixture by the sum of the mapped sources."""
    if not mapped:
        raise LossException("RAS loss needs at least one mapped source")
    return signal_loss(mix_target, complex_sum([as_complex(m) for m in mapped]), norm_mix)

