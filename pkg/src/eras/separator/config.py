import dataclasses
import os
import typing

import yaml

from ..dsp import StftConfig
from ..helpers.exceptions import ConfigException
from ..losses import LossWeights
from ..mixsim import SceneConfig
from ..relative_rir import FcpConfig

DEFAULT_CONFIG = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "resources", "train-default.yml")


@dataclasses.dataclass(frozen=True)
class StageConfig:
    epochs: int
    beta: float
    gamma: float
    alpha_ref: float = 0.0
    warmup_steps: int = 0
    enabled: bool = True

    def __post_init__(self):
        if self.epochs < 0 or self.warmup_steps < 0:
            raise ConfigException(f"Invalid stage schedule {self}")
        self.weights()

    def weights(self) -> LossWeights:
        return LossWeights(beta=self.beta, gamma=self.gamma, alpha_ref=self.alpha_ref)


@dataclasses.dataclass(frozen=True)
class DataConfig:
    train_scenes: int = 64
    valid_scenes: int = 16
    seed: int = 1000
    segment_seconds: typing.Optional[float] = None
    manifest: typing.Optional[str] = None
    valid_manifest: typing.Optional[str] = None
    scene: SceneConfig = SceneConfig()

    def __post_init__(self):
        if self.train_scenes < 1 or self.valid_scenes < 1:
            raise ConfigException(f"Need at least one training and one validation scene, got {self}")


@dataclasses.dataclass(frozen=True)
class TrainConfig:
    seed: int = 0
    lr: float = 1e-3
    lr_halving_patience: int = 2
    grad_clip_l2: float = 1.0
    batch_size: int = 4
    hidden: typing.Tuple[int, ...] = (128, 128)
    success_threshold_db: float = 3.0
    probation_epochs: int = 5
    stage1: StageConfig = StageConfig(epochs=5, beta=0.3, gamma=0.0)
    stage2: StageConfig = StageConfig(epochs=5, beta=0.0, gamma=0.1, warmup_steps=16)
    stft: StftConfig = StftConfig()
    fcp: FcpConfig = FcpConfig()
    data: DataConfig = DataConfig()

    def __post_init__(self):
        if self.lr <= 0.0 or self.grad_clip_l2 <= 0.0 or self.batch_size < 1 or self.lr_halving_patience < 1:
            raise ConfigException(f"Invalid optimizer settings lr={self.lr} clip={self.grad_clip_l2} batch={self.batch_size}")
        if self.probation_epochs < 1:
            raise ConfigException(f"probation_epochs must be >= 1, got {self.probation_epochs}")

    @property
    def total_epochs(self) -> int:
        return self.stage1.epochs + (self.stage2.epochs if self.stage2.enabled else 0)

    def replace(self, **changes) -> "TrainConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> typing.Dict[str, typing.Any]:
        return _to_plain(dataclasses.asdict(self))

    @staticmethod
    def from_dict(d: typing.Optional[typing.Dict[str, typing.Any]]) -> "TrainConfig":
        return dataclass_from_dict(TrainConfig, d or {}, "train")


def _to_plain(value):
    if isinstance(value, dict):
        return {k: _to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_plain(v) for v in value]
    return value


def dataclass_from_dict(cls, d: typing.Dict[str, typing.Any], section: str):
    """Build a (nested) frozen dataclass from plain data, rejecting unknown keys."""
    if not isinstance(d, dict):
        raise ConfigException(f"Section '{section}' must be a mapping, got {type(d).__name__}")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(d) - set(fields))
    if unknown:
        raise ConfigException(f"Unknown keys {unknown} in section '{section}'")

    hints = typing.get_type_hints(cls)
    kwargs = {}
    for name, value in d.items():
        hint = hints[name]
        if dataclasses.is_dataclass(hint):
            kwargs[name] = dataclass_from_dict(hint, value, f"{section}.{name}")
        elif isinstance(value, list):
            kwargs[name] = tuple(value)
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except TypeError as e:
        raise ConfigException(f"Invalid section '{section}'. Error '{e}'") from e


def load_train_config(path: typing.Optional[str] = None) -> TrainConfig:
    path = path or DEFAULT_CONFIG
    if not os.path.isfile(path):
        raise ConfigException(f"Training config '{path}' does not exist")
    with open(path, "r") as f:
        try:
            data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigException(f"Training config '{path}' is not valid YAML. Error '{e}'") from e
    return TrainConfig.from_dict(data)


def dump_train_config(config: TrainConfig) -> str:
    return yaml.safe_dump(config.to_dict(), sort_keys=True)


class Preset(object):
    """Fine-tuning variants started from the stage-1 model"""

    A1 = "A1"
    A2 = "A2"
    A3 = "A3"
    A4 = "A4"

    @staticmethod
    def get_presets() -> typing.List[typing.Dict[str, str]]:
        return [
            {"name": Preset.A1, "desc": "Stage 1 only (beta=0.3, gamma=0) for the whole run."},
            {"name": Preset.A2, "desc": "Fine-tune with beta=0, gamma=0."},
            {"name": Preset.A3, "desc": "Fine-tune with beta=0.3, gamma=0.1."},
            {"name": Preset.A4, "desc": "Fine-tune with beta=0, gamma=0.1."},
        ]


def apply_preset(config: TrainConfig, preset: str) -> TrainConfig:
    stage2 = config.stage2
    if preset == Preset.A1:
        stage1 = dataclasses.replace(config.stage1, epochs=config.total_epochs)
        return config.replace(stage1=stage1, stage2=dataclasses.replace(stage2, enabled=False))

    elif preset == Preset.A2:
        return config.replace(stage2=dataclasses.replace(stage2, beta=0.0, gamma=0.0, enabled=True))

    elif preset == Preset.A3:
        return config.replace(stage2=dataclasses.replace(stage2, beta=0.3, gamma=0.1, enabled=True))

    elif preset == Preset.A4:
        return config.replace(stage2=dataclasses.replace(stage2, beta=0.0, gamma=0.1, enabled=True))

    raise ConfigException(f"Invalid preset '{preset}', expected one of {[p['name'] for p in Preset.get_presets()]}")
