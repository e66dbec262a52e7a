"""Central finite-difference checks for reverse-mode gradients."""
import typing

import numpy as np

import eras.logging as logging

from .tape import Tape, Tensor

logger = logging.getLogger()


class GradCheckReport(typing.NamedTuple):
    max_rel_error: float
    checked: int
    skipped: int


def _evaluate(f: typing.Callable[[Tensor], Tensor], x: np.ndarray) -> float:
    return float(f(Tensor(x)))


def reverse_gradient(f: typing.Callable[[Tensor], Tensor], x: np.ndarray) -> np.ndarray:
    with Tape() as tape:
        xt = tape.watch(x)
        y = f(xt)
    return tape.gradient(y, [xt])[0]


def grad_check_report(
    f: typing.Callable[[Tensor], Tensor],
    x,
    h: float = 1e-5,
    nonsmooth_tol: typing.Optional[float] = None,
) -> GradCheckReport:
    """Compare the tape gradient of scalar ``f`` at ``x`` with central differences.

    The error is ``max|analytic - numeric| / max|numeric|`` over checked
    elements. With ``nonsmooth_tol`` set, elements whose left and right
    one-sided slopes disagree by more than ``nonsmooth_tol`` (relative) sit on a
    kink and are skipped.
    """
    x = np.array(x, dtype=np.float64)
    analytic = reverse_gradient(f, x)
    f0 = _evaluate(f, x) if nonsmooth_tol is not None else 0.0

    numeric = np.zeros_like(x)
    mask = np.ones(x.shape, dtype=bool)
    for i in np.ndindex(x.shape):
        original = x[i]
        x[i] = original + h
        fp = _evaluate(f, x)
        x[i] = original - h
        fm = _evaluate(f, x)
        x[i] = original
        numeric[i] = (fp - fm) / (2.0 * h)
        if nonsmooth_tol is not None:
            right, left = (fp - f0) / h, (f0 - fm) / h
            if np.abs(right - left) > nonsmooth_tol * max(np.abs(right), np.abs(left), 1.0):
                mask[i] = False

    skipped = int(np.size(mask) - np.count_nonzero(mask))
    if not mask.any():
        return GradCheckReport(0.0, 0, skipped)
    scale = max(float(np.max(np.abs(numeric[mask]))), 1e-300)
    error = float(np.max(np.abs(analytic[mask] - numeric[mask]))) / scale
    logger.debug(f"grad check: rel error {error:.3e} over {int(mask.sum())} element(s), {skipped} skipped")
    return GradCheckReport(error, int(mask.sum()), skipped)


def grad_check(
    f: typing.Callable[[Tensor], Tensor],
    x,
    h: float = 1e-5,
    nonsmooth_tol: typing.Optional[float] = None,
) -> float:
    return grad_check_report(f, x, h, nonsmooth_tol).max_rel_error
