import dataclasses
import itertools
import typing

import numpy as np

import eras.logging as logging

from ..dsp import StftConfig, Waveform, istft, stft
from ..helpers.exceptions import DataException
from ..relative_rir import FcpConfig, compute_lambda, fcp_map
from .sisnr import sdr_filtered, si_snr, si_snr_improvement

logger = logging.getLogger()


@dataclasses.dataclass(frozen=True)
class EvalResult:
    si_snr: typing.List[float]
    si_snri: typing.List[float]
    sdr: typing.List[float]
    permutation: typing.Tuple[int, ...]
    si_snr_matrix: typing.List[typing.List[float]]

    @property
    def mean_si_snr(self) -> float:
        return float(np.mean(self.si_snr))

    @property
    def mean_si_snri(self) -> float:
        return float(np.mean(self.si_snri))

    @property
    def mean_sdr(self) -> float:
        return float(np.mean(self.sdr))

    def to_dict(self) -> typing.Dict[str, typing.Any]:
        return {
            "si_snr": list(self.si_snr),
            "si_snri": list(self.si_snri),
            "sdr": list(self.sdr),
            "permutation": list(self.permutation),
            "mean_si_snr": self.mean_si_snr,
            "mean_si_snri": self.mean_si_snri,
            "mean_sdr": self.mean_sdr,
        }


def best_permutation(scores: np.ndarray) -> typing.Tuple[int, ...]:
    """Permutation ``π`` maximizing ``mean_i scores[i, π(i)]``; ties keep the earliest ordering."""
    scores = np.asarray(scores)
    n = scores.shape[0]
    best, best_score = tuple(range(n)), -np.inf
    for permutation in itertools.permutations(range(n)):
        score = float(np.mean([scores[i, j] for i, j in enumerate(permutation)]))
        if score > best_score:
            best, best_score = tuple(permutation), score
    return best


def align(
    est: Waveform,
    ref: Waveform,
    lam,
    fcp_config: FcpConfig,
    stft_config: StftConfig,
) -> Waveform:
    """FCP-map ``est`` onto ``ref`` so both are time aligned."""
    result = fcp_map(stft(est, stft_config), stft(ref, stft_config), lam, fcp_config)
    return istft(result.mapped, stft_config, length=ref.length)


def aligned_eval(
    refs: typing.Sequence[Waveform],
    ests: typing.Sequence[Waveform],
    mixtures: typing.Sequence[Waveform],
    fcp_config: FcpConfig = FcpConfig(),
    stft_config: StftConfig = StftConfig(),
    sdr_taps: int = 512,
    reference_channel: int = 0,
) -> EvalResult:
    """Score separated signals against the reference-channel source images.

    Every estimate is FCP-mapped onto every reference (λ from the mixtures);
    the permutation with the best mean SI-SNR is kept and SDR is reported on
    the same aligned pairs. SI-SNRi is measured against the mixture at
    ``reference_channel``, the channel the references were recorded at.
    """
    if len(refs) != 2 or len(ests) != 2:
        raise DataException(f"Aligned evaluation expects two references and two estimates, got {len(refs)}/{len(ests)}")
    lam = compute_lambda([stft(m, stft_config) for m in mixtures], fcp_config.lambda_floor_coeff)

    n = len(refs)
    aligned = [[align(ests[j], refs[i], lam, fcp_config, stft_config) for j in range(n)] for i in range(n)]
    matrix = np.array([[si_snr(refs[i], aligned[i][j]) for j in range(n)] for i in range(n)])
    permutation = best_permutation(matrix)

    scores = [float(matrix[i, permutation[i]]) for i in range(n)]
    sdrs = [sdr_filtered(refs[i], aligned[i][permutation[i]], sdr_taps) for i in range(n)]
    mixture = mixtures[reference_channel]
    improvements = [si_snr_improvement(refs[i], aligned[i][permutation[i]], mixture) for i in range(n)]
    logger.debug(f"Aligned evaluation permutation {permutation} SI-SNR {scores}")
    return EvalResult(scores, improvements, sdrs, permutation, matrix.tolist())
