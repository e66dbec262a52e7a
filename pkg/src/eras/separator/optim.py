import dataclasses
import typing

import numpy as np

import eras.logging as logging

from ..helpers.exceptions import ConfigException

logger = logging.getLogger()

Arrays = typing.Dict[str, np.ndarray]


@dataclasses.dataclass(frozen=True)
class AdamConfig:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    grad_clip_l2: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.beta1 < 1.0 or not 0.0 <= self.beta2 < 1.0:
            raise ConfigException(f"Adam moments must lie in [0, 1), got {self.beta1}/{self.beta2}")
        if self.eps <= 0.0 or self.grad_clip_l2 <= 0.0:
            raise ConfigException(f"Invalid Adam settings {self}")


@dataclasses.dataclass(frozen=True, eq=False)
class AdamState:
    step: int
    m: Arrays
    v: Arrays

    @staticmethod
    def zeros(params: Arrays) -> "AdamState":
        return AdamState(0, {k: np.zeros_like(p) for k, p in params.items()}, {k: np.zeros_like(p) for k, p in params.items()})


def global_norm(grads: Arrays) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


def clip_by_global_norm(grads: Arrays, max_norm: float) -> typing.Tuple[Arrays, float]:
    norm = global_norm(grads)
    if norm <= max_norm or norm == 0.0:
        return grads, norm
    factor = max_norm / norm
    return {k: g * factor for k, g in grads.items()}, norm


def adam_update(
    params: Arrays, grads: Arrays, state: AdamState, lr: float, config: AdamConfig = AdamConfig()
) -> typing.Tuple[Arrays, AdamState]:
    """One bias-corrected Adam step; inputs are left untouched."""
    step = state.step + 1
    m, v, updated = {}, {}, {}
    for name, p in params.items():
        g = grads[name]
        m[name] = config.beta1 * state.m[name] + (1.0 - config.beta1) * g
        v[name] = config.beta2 * state.v[name] + (1.0 - config.beta2) * g * g
        m_hat = m[name] / (1.0 - config.beta1**step)
        v_hat = v[name] / (1.0 - config.beta2**step)
        updated[name] = p - lr * m_hat / (np.sqrt(v_hat) + config.eps)
    return updated, AdamState(step, m, v)


@dataclasses.dataclass
class LearningRateSchedule:
    """Linear warmup from zero at a stage start, halving after ``patience`` epochs without improvement."""

    base_lr: float = 1e-3
    patience: int = 2
    warmup_steps: int = 0
    factor: float = 0.5
    halvings: int = 0
    best_loss: typing.Optional[float] = None
    bad_epochs: int = 0
    stage_step: int = 0

    def __post_init__(self):
        if self.base_lr <= 0.0 or self.patience < 1 or self.warmup_steps < 0 or not 0.0 < self.factor < 1.0:
            raise ConfigException(f"Invalid learning-rate schedule {self}")

    @property
    def peak_lr(self) -> float:
        return self.base_lr * self.factor**self.halvings

    def lr(self) -> float:
        if self.warmup_steps and self.stage_step < self.warmup_steps:
            return self.peak_lr * self.stage_step / self.warmup_steps
        return self.peak_lr

    def step(self) -> float:
        """Learning rate for the next update; advances the warmup counter."""
        lr = self.lr()
        self.stage_step += 1
        return lr

    def restart_warmup(self, warmup_steps: int):
        self.warmup_steps = warmup_steps
        self.stage_step = 0
        self.best_loss = None
        self.bad_epochs = 0

    def end_epoch(self, valid_loss: float) -> bool:
        """Record the epoch's validation loss; True when the rate was halved."""
        if self.best_loss is None or valid_loss < self.best_loss:
            self.best_loss = valid_loss
            self.bad_epochs = 0
            return False
        self.bad_epochs += 1
        if self.bad_epochs >= self.patience:
            self.halvings += 1
            self.bad_epochs = 0
            logger.info(f"Validation loss plateaued, learning rate halved to {self.peak_lr:.3e}")
            return True
        return False

    def to_dict(self) -> typing.Dict[str, typing.Any]:
        return dataclasses.asdict(self)

    @staticmethod
    def from_dict(d: typing.Dict[str, typing.Any]) -> "LearningRateSchedule":
        return LearningRateSchedule(**d)
