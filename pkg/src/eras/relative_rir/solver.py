import typing

import numpy as np
import scipy.linalg

import eras.logging as logging

from ..workers import WorkerPool

logger = logging.getLogger()


def tikhonov_eps(A: np.ndarray, eps_rel: float) -> np.ndarray:
    """Diagonal loading ``eps_rel * trace(A) / n`` per matrix; 1.0 where the trace is zero."""
    n = A.shape[-1]
    trace = np.real(np.trace(A, axis1=-2, axis2=-1))
    eps = eps_rel * trace / n
    return np.where(trace > 0.0, eps, 1.0)


def _solve_one(A: np.ndarray, b: np.ndarray, eps: float, label: str) -> np.ndarray:
    if not np.any(A):
        return np.zeros_like(b)
    loaded = A + eps * np.eye(A.shape[0])
    try:
        factor = scipy.linalg.cho_factor(loaded, lower=True, check_finite=False)
        return scipy.linalg.cho_solve(factor, b, check_finite=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as e:
        logger.warning(f"Cholesky failed for {label} ({e}), falling back to eigendecomposition")

    w, V = scipy.linalg.eigh(loaded)
    keep = w > np.finfo(np.float64).eps * max(float(np.max(np.abs(w))), 1e-300) * A.shape[0]
    coeffs = (V.conj().T @ b)[keep] / w[keep]
    return V[:, keep] @ coeffs


def solve_hermitian(
    A: np.ndarray, b: np.ndarray, eps_rel: float = 1e-10, pool: typing.Optional[WorkerPool] = None
) -> np.ndarray:
    """Solve the loaded normal equations ``(A + eps I) x = b`` for Hermitian PSD ``A``.

    ``A`` is [n, n] or batched [B, n, n] with ``b`` [n] or [B, n]. Each system
    is factored by Cholesky; when that fails the pseudo-inverse from an
    eigendecomposition is used instead. An all-zero ``A`` yields ``x = 0``.
    """
    A = np.asarray(A)
    b = np.asarray(b)
    single = A.ndim == 2
    if single:
        A, b = A[np.newaxis], b[np.newaxis]
    if A.ndim != 3 or A.shape[1] != A.shape[2] or b.shape != A.shape[:2]:
        raise ValueError(f"solve_hermitian: incompatible shapes {A.shape} and {b.shape}")

    eps = tikhonov_eps(A, eps_rel)

    def solve(i: int) -> np.ndarray:
        return _solve_one(A[i], b[i], float(eps[i]), f"system {i}")

    indices = range(A.shape[0])
    rows = pool.map(solve, indices) if pool is not None else [solve(i) for i in indices]
    out = np.stack(rows).astype(np.result_type(A, b), copy=False)
    return out[0] if single else out
