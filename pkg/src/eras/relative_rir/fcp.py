"""Forward convolutive prediction.

For every frequency a time-invariant K-tap filter ``g`` maps the estimate to
the target by minimizing ``Σ_t |X_t - gᴴ S̃_t|² / λ_t``, where ``S̃_t`` stacks
the estimate frames ``[t - k_past, ..., t, ..., t + k_future]`` (zero outside
the signal). The weighted normal equations are

    A = Σ_t S̃_t S̃_tᴴ / λ_t,    b = Σ_t S̃_t X_t* / λ_t,    (A + εI) g = b

and the mapped estimate is ``gᴴ S̃_t``. Storing ``S̃`` as rows ``P[f, t, :]``
gives ``A = Pᵀ W conj(P)``, ``b = Pᵀ W conj(X)`` and ``mapped = P conj(g)``.
"""
import dataclasses
import json
import typing

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..autograd import ComplexTensor, as_complex, ops
from ..dsp import Spectrogram
from ..helpers.exceptions import ConfigException, DataException
from ..utils import check_finite
from ..workers import WorkerPool
from .solver import solve_hermitian, tikhonov_eps
from .weights import LambdaWeights


class MappingException(DataException):
    pass


@dataclasses.dataclass(frozen=True)
class FcpConfig:
    k_past: int = 19
    k_future: int = 1
    lambda_floor_coeff: float = 1e-4
    regularizer_eps: float = 1e-10
    detach_fcp_filters: bool = False

    def __post_init__(self):
        if self.k_past < 0 or self.k_future < 0:
            raise ConfigException(f"FCP taps must be non-negative, got {self.k_past}/{self.k_future}")
        if self.lambda_floor_coeff <= 0.0:
            raise ConfigException(f"λ floor coefficient must be positive, got {self.lambda_floor_coeff}")
        if self.regularizer_eps < 0.0:
            raise ConfigException(f"Regularizer must be non-negative, got {self.regularizer_eps}")

    @property
    def taps(self) -> int:
        return self.k_past + 1 + self.k_future


class FcpResult(typing.NamedTuple):
    mapped: Spectrogram
    filters: np.ndarray


def stack_frames(bins: np.ndarray, k_past: int, k_future: int) -> np.ndarray:
    """[T, F] -> [F, T, K] with ``out[f, t, k] = bins[t - k_past + k, f]``."""
    K = k_past + 1 + k_future
    padded = np.pad(bins, ((k_past, k_future), (0, 0)))
    return np.transpose(sliding_window_view(padded, K, axis=0), (1, 0, 2))


def _validate(est: np.ndarray, target: np.ndarray, lam: LambdaWeights):
    if est.shape != target.shape or est.shape != lam.shape:
        raise MappingException(
            f"FCP shapes differ: estimate {est.shape}, target {target.shape}, λ {lam.shape}"
        )
    check_finite("FCP estimate", est, exception=MappingException)
    check_finite("FCP target", target, exception=MappingException)


def normal_equations(
    est: np.ndarray, target: np.ndarray, lam: LambdaWeights, cfg: FcpConfig
) -> typing.Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(A [F, K, K], b [F, K], P [F, T, K])`` without the ε loading."""
    P = stack_frames(est, cfg.k_past, cfg.k_future)
    Pw = P * lam.inverse.T[:, :, np.newaxis]
    A = np.einsum("ftk,ftj->fkj", Pw, P.conj())
    b = np.einsum("ftk,ft->fk", Pw, target.T.conj())
    return A, b, P


def weighted_residual(est: np.ndarray, target: np.ndarray, lam: LambdaWeights, filters: np.ndarray, cfg: FcpConfig) -> np.ndarray:
    """Per-frequency objective ``Σ_t |X - gᴴ S̃|² / λ`` for given filters [F, K]."""
    P = stack_frames(est, cfg.k_past, cfg.k_future)
    mapped = np.einsum("ftk,fk->tf", P, filters.conj())
    return np.sum(np.abs(target - mapped) ** 2 * lam.inverse, axis=0)


def fcp_map(
    est: typing.Union[Spectrogram, np.ndarray],
    target_mix: typing.Union[Spectrogram, np.ndarray],
    lam: LambdaWeights,
    cfg: FcpConfig = FcpConfig(),
    pool: typing.Optional[WorkerPool] = None,
) -> FcpResult:
    est_bins = np.asarray(getattr(est, "bins", est), dtype=np.complex128)
    target_bins = np.asarray(getattr(target_mix, "bins", target_mix), dtype=np.complex128)
    _validate(est_bins, target_bins, lam)

    A, b, P = normal_equations(est_bins, target_bins, lam, cfg)
    filters = solve_hermitian(A, b, cfg.regularizer_eps, pool=pool)
    mapped = np.einsum("ftk,fk->tf", P, filters.conj())

    template = target_mix if isinstance(target_mix, Spectrogram) else est
    if isinstance(template, Spectrogram):
        return FcpResult(template.with_bins(mapped), filters)
    return FcpResult(mapped, filters)


def fcp_map_tensor(
    est,
    target_mix,
    lam: LambdaWeights,
    cfg: FcpConfig = FcpConfig(),
) -> ComplexTensor:
    """Differentiable :func:`fcp_map` over real/imaginary tensor pairs, [T, F] in and out.

    The Hermitian system is solved through its real embedding
    ``[[Ar, -Ai], [Ai, Ar]] [gr; gi] = [br; bi]``. The ε loading is computed
    from the forward values and held constant. With ``detach_fcp_filters`` the
    solved filter is a constant and gradients only flow through its
    application to the estimate.
    """
    est = as_complex(est)
    target = as_complex(target_mix)
    if est.shape != target.shape or est.shape != lam.shape:
        raise MappingException(f"FCP shapes differ: estimate {est.shape}, target {target.shape}, λ {lam.shape}")
    T, F = est.shape
    K = cfg.taps
    weights = lam.inverse.T[:, :, np.newaxis]

    Pr = ops.frame_stack(est.re, cfg.k_past, cfg.k_future)
    Pi = ops.frame_stack(est.im, cfg.k_past, cfg.k_future)
    PwrT = ops.transpose(ops.scale(Pr, weights), (0, 2, 1))
    PwiT = ops.transpose(ops.scale(Pi, weights), (0, 2, 1))
    Xr = ops.reshape(ops.transpose(target.re), (F, T, 1))
    Xi = ops.reshape(ops.transpose(target.im), (F, T, 1))

    Ar = ops.add(ops.matmul(PwrT, Pr), ops.matmul(PwiT, Pi))
    Ai = ops.sub(ops.matmul(PwiT, Pr), ops.matmul(PwrT, Pi))
    br = ops.add(ops.matmul(PwrT, Xr), ops.matmul(PwiT, Xi))
    bi = ops.sub(ops.matmul(PwiT, Xr), ops.matmul(PwrT, Xi))

    embedded = ops.concat([ops.concat([Ar, ops.neg(Ai)], axis=2), ops.concat([Ai, Ar], axis=2)], axis=1)
    eps = tikhonov_eps(Ar.values, cfg.regularizer_eps)
    loading = eps[:, np.newaxis, np.newaxis] * np.eye(2 * K)[np.newaxis]
    g = ops.linear_solve(ops.add(embedded, loading), ops.concat([br, bi], axis=1))
    if cfg.detach_fcp_filters:
        g = ops.stop_gradient(g)
    gr, gi = g[:, :K, :], g[:, K:, :]

    mr = ops.add(ops.matmul(Pr, gr), ops.matmul(Pi, gi))
    mi = ops.sub(ops.matmul(Pi, gr), ops.matmul(Pr, gi))
    return ComplexTensor(
        ops.transpose(ops.reshape(mr, (F, T))),
        ops.transpose(ops.reshape(mi, (F, T))),
    )


def filters_to_json(filters: np.ndarray, cfg: FcpConfig, label: str = "") -> str:
    """Serialize [F, K] complex filters, taps ordered from ``t - k_past`` to ``t + k_future``."""
    filters = np.asarray(filters)
    payload = {
        "label": label,
        "k_past": cfg.k_past,
        "k_future": cfg.k_future,
        "freqs": int(filters.shape[0]),
        "real": filters.real.tolist(),
        "imag": filters.imag.tolist(),
    }
    return json.dumps(payload, sort_keys=True)
