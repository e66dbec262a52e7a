import itertools
import typing

from ..autograd import Tensor, as_complex, ops
from .reconstruction import LossException, signal_loss


class IccResult(typing.NamedTuple):
    loss: Tensor
    permutation: typing.Tuple[int, ...]


def icc_loss(self_mapped: typing.Sequence, cross_mapped: typing.Sequence, norm_mix) -> IccResult:
    """Inter-channel consistency with the self-mapped sources as constant pseudo targets.

    ``min_π (1/N) Σ_n L(self[n], cross[π(n)])``; ties keep the identity ordering.
    """
    if len(self_mapped) != 2 or len(cross_mapped) != 2:
        raise LossException(
            f"ICC permutation search supports two sources, got {len(self_mapped)} and {len(cross_mapped)}"
        )
    targets = [as_complex(s).detach() for s in self_mapped]
    cross = [as_complex(c) for c in cross_mapped]
    n = len(targets)

    best: typing.Optional[IccResult] = None
    for permutation in itertools.permutations(range(n)):
        total = signal_loss(targets[0], cross[permutation[0]], norm_mix)
        for i in range(1, n):
            total = ops.add(total, signal_loss(targets[i], cross[permutation[i]], norm_mix))
        loss = ops.scale(total, 1.0 / n)
        if best is None or float(loss) < float(best.loss):
            best = IccResult(loss, tuple(permutation))
    return best
