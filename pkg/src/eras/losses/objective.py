"""Combined training objective.

Per direction ``m_r -> m`` the objective is

    alpha_cross * ras + beta * isms + gamma * icc + alpha_ref * ras_self

where ``ras`` reconstructs the mixture at ``m`` from the sources separated at
``m_r`` and mapped to ``m``, ``icc`` compares those with the sources separated
at ``m`` and mapped onto ``m`` itself, and ``ras_self`` reconstructs the input
mixture from the sources mapped back onto ``m_r``. All terms are normalized
by the input mixture at ``m_r``. The total sums every direction.
"""
import dataclasses
import typing

import numpy as np

import eras.logging as logging

from ..autograd import Tensor, as_complex, ops
from ..helpers.exceptions import ConfigException, NumericalException
from .icc import icc_loss
from .isms import MAG_FLOOR, isms_loss
from .reconstruction import LossException, ras_loss

logger = logging.getLogger()

CHANNEL_NAMES = ("L", "R")


def channel_name(m: int) -> str:
    return CHANNEL_NAMES[m] if m < len(CHANNEL_NAMES) else str(m)


@dataclasses.dataclass(frozen=True)
class LossWeights:
    beta: float = 0.3
    gamma: float = 0.0
    alpha_ref: float = 0.0
    alpha_cross: float = 1.0
    mag_floor: float = MAG_FLOOR

    def __post_init__(self):
        for name in ("beta", "gamma", "alpha_ref", "alpha_cross"):
            if getattr(self, name) < 0.0:
                raise ConfigException(f"Loss weight {name} must be non-negative, got {getattr(self, name)}")
        if self.alpha_ref >= 1.0:
            raise ConfigException(f"alpha_ref must stay below 1, got {self.alpha_ref}")
        if self.mag_floor <= 0.0:
            raise ConfigException(f"mag_floor must be positive, got {self.mag_floor}")

    @property
    def uses_self_mapping(self) -> bool:
        return self.gamma > 0.0 or self.alpha_ref > 0.0

    def to_dict(self) -> typing.Dict[str, float]:
        return dataclasses.asdict(self)

    @staticmethod
    def from_dict(d: typing.Dict[str, typing.Any]) -> "LossWeights":
        unknown = set(d) - {f.name for f in dataclasses.fields(LossWeights)}
        if unknown:
            raise ConfigException(f"Unknown loss weight keys {sorted(unknown)}")
        return LossWeights(**{k: float(v) for k, v in d.items()})


@dataclasses.dataclass(frozen=True, eq=False)
class DirectedTerm:
    """Everything the objective needs for one direction ``ref_channel -> target_channel``."""

    ref_channel: int
    target_channel: int
    target_mixture: typing.Any
    input_mixture: typing.Any
    cross_mapped: typing.Sequence[typing.Any]
    icc_self_mapped: typing.Optional[typing.Sequence[typing.Any]] = None
    ref_mapped: typing.Optional[typing.Sequence[typing.Any]] = None

    @property
    def label(self) -> str:
        return f"{channel_name(self.ref_channel)}->{channel_name(self.target_channel)}"


class DirectionLoss(typing.NamedTuple):
    ras: float
    isms: float
    icc: typing.Optional[float]
    ras_self: typing.Optional[float]
    total: float


class LossReport(typing.NamedTuple):
    total: float
    components: typing.Dict[str, float]
    permutations: typing.Dict[str, typing.Tuple[int, ...]]
    directions: typing.Dict[str, DirectionLoss]
    objective: Tensor

    def weighted_sum(self, weights: LossWeights) -> float:
        """Total rebuilt from the per-direction values."""
        total = 0.0
        for label, d in self.directions.items():
            total += weights.alpha_cross * d.ras + weights.beta * d.isms
            if d.icc is not None:
                total += weights.gamma * d.icc
            if d.ras_self is not None:
                total += weights.alpha_ref * d.ras_self
        return total


def _weighted(term: Tensor, weight: float) -> Tensor:
    return ops.scale(term, weight)


def _detached(items: typing.Sequence) -> list:
    return [as_complex(x).detach() for x in items]


def eras_loss(terms: typing.Sequence[DirectedTerm], weights: LossWeights) -> LossReport:
    """Evaluate every direction; terms with zero weight are computed off the tape for logging only."""
    if not terms:
        raise LossException("eras_loss needs at least one directed term")

    objective: typing.Optional[Tensor] = None
    components: typing.Dict[str, float] = {}
    permutations: typing.Dict[str, typing.Tuple[int, ...]] = {}
    directions: typing.Dict[str, DirectionLoss] = {}

    def accumulate(term: Tensor, weight: float):
        nonlocal objective
        if weight == 0.0:
            return
        weighted = _weighted(term, weight)
        objective = weighted if objective is None else ops.add(objective, weighted)

    for term in terms:
        label = term.label
        cross = term.cross_mapped

        ras = ras_loss(term.target_mixture, cross if weights.alpha_cross > 0.0 else _detached(cross), term.input_mixture)
        accumulate(ras, weights.alpha_cross)

        isms_input = cross if weights.beta > 0.0 else _detached(cross)
        isms = isms_loss(isms_input, term.target_mixture, weights.mag_floor)
        accumulate(isms, weights.beta)

        icc_value = None
        if term.icc_self_mapped is not None:
            icc_input = cross if weights.gamma > 0.0 else _detached(cross)
            icc = icc_loss(term.icc_self_mapped, icc_input, term.input_mixture)
            accumulate(icc.loss, weights.gamma)
            icc_value = float(icc.loss)
            permutations[label] = icc.permutation
            components[f"icc {label}"] = icc_value
        elif weights.gamma > 0.0:
            raise LossException(f"ICC weight {weights.gamma} set but direction {label} carries no self mappings")

        ras_self_value = None
        if term.ref_mapped is not None:
            ras_self = ras_loss(term.input_mixture, term.ref_mapped, term.input_mixture)
            accumulate(ras_self, weights.alpha_ref)
            ras_self_value = float(ras_self)
            components[f"ras_self {label}"] = ras_self_value
        elif weights.alpha_ref > 0.0:
            raise LossException(f"alpha_ref {weights.alpha_ref} set but direction {label} carries no reference mappings")

        components[f"ras {label}"] = float(ras)
        components[f"isms {label}"] = float(isms)
        direction_total = weights.alpha_cross * float(ras) + weights.beta * float(isms)
        if icc_value is not None:
            direction_total += weights.gamma * icc_value
        if ras_self_value is not None:
            direction_total += weights.alpha_ref * ras_self_value
        directions[label] = DirectionLoss(float(ras), float(isms), icc_value, ras_self_value, direction_total)

    if objective is None:
        objective = Tensor(0.0)
    report = LossReport(float(objective), components, permutations, directions, objective)
    expected = report.weighted_sum(weights)
    if np.isfinite(report.total) and not np.isclose(report.total, expected, rtol=1e-9, atol=1e-12):
        raise NumericalException(f"Loss total {report.total} disagrees with its weighted components {expected}")
    logger.debug(f"Loss total {report.total:.6f} components {components}")
    return report


def mean_report(reports: typing.Sequence[LossReport]) -> LossReport:
    """Average of per-example reports; permutations are taken from the first example."""
    if not reports:
        raise LossException("mean_report needs at least one report")
    n = len(reports)
    components = {k: sum(r.components[k] for r in reports) / n for k in reports[0].components}
    directions = {}
    for label, first in reports[0].directions.items():
        rows = [r.directions[label] for r in reports]
        icc = None if first.icc is None else sum(d.icc for d in rows) / n
        ras_self = None if first.ras_self is None else sum(d.ras_self for d in rows) / n
        directions[label] = DirectionLoss(
            sum(d.ras for d in rows) / n,
            sum(d.isms for d in rows) / n,
            icc,
            ras_self,
            sum(d.total for d in rows) / n,
        )
    total = sum(r.total for r in reports) / n
    return LossReport(total, components, dict(reports[0].permutations), directions, Tensor(total))
