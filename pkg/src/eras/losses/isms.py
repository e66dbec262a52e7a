import typing

from ..autograd import Tensor, as_complex, ops
from .reconstruction import LossException

MAG_FLOOR = 1e-8


def log_magnitude_spread(spec, mag_floor: float = MAG_FLOOR) -> Tensor:
    """``Σ_t var_f(log max(|S_t|, floor))`` with the population variance over frequency."""
    spec = as_complex(spec)
    if len(spec.shape) != 2:
        raise LossException(f"Expected a [T, F] spectrogram, got shape {spec.shape}")
    return ops.sum(ops.variance(ops.log(spec.magnitude(mag_floor)), axis=1))


def isms_loss(mapped: typing.Sequence, mix_at_m, mag_floor: float = MAG_FLOOR) -> Tensor:
    """Intra-source magnitude scattering of the mapped sources relative to the mixture."""
    if not mapped:
        raise LossException("ISMS loss needs at least one mapped source")
    denominator = float(log_magnitude_spread(as_complex(mix_at_m).detach(), mag_floor))
    if not denominator > 0.0:
        raise LossException("degenerate ISMS denominator: mixture log-magnitude is flat in every frame")

    numerator = log_magnitude_spread(mapped[0], mag_floor)
    for spec in mapped[1:]:
        numerator = ops.add(numerator, log_magnitude_spread(spec, mag_floor))
    return ops.scale(numerator, 1.0 / (len(mapped) * denominator))
