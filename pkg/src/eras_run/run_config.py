import dataclasses
import os
import typing

import yaml

import eras.logging as logging
from eras.helpers.exceptions import ConfigException

logger = logging.getLogger()

SNAPSHOT_FILENAME = "resolved-config.yml"
OUTPUT_DIR_ENV = "ERAS_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "out"


def default_output_dir() -> str:
    return os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Everything a command needs to run again: global options plus its resolved parameters."""

    command: str
    seed: int
    output_dir: str
    threads: int
    log_level: typing.Optional[str] = None
    params: typing.Dict[str, typing.Any] = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        if self.threads < 1:
            raise ConfigException(f"--threads must be >= 1, got {self.threads}")

    def to_dict(self) -> typing.Dict[str, typing.Any]:
        return dataclasses.asdict(self)

    def with_output_dir(self, output_dir: str) -> "RunConfig":
        return dataclasses.replace(self, output_dir=output_dir)

    def path(self, *parts: str) -> str:
        return os.path.join(self.output_dir, *parts)

    @staticmethod
    def from_dict(d: typing.Any, allowed_params: typing.Dict[str, typing.Sequence[str]]) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigException(f"Run config must be a mapping, got {type(d).__name__}")
        names = {f.name for f in dataclasses.fields(RunConfig)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise ConfigException(f"Unknown keys {unknown} in run config")
        command = d.get("command")
        if command not in allowed_params:
            raise ConfigException(f"Invalid command '{command}', expected one of {sorted(allowed_params)}")
        params = d.get("params") or {}
        unknown = sorted(set(params) - set(allowed_params[command]))
        if unknown:
            raise ConfigException(f"Unknown parameters {unknown} for command '{command}'")
        try:
            return RunConfig(
                command=command,
                seed=int(d["seed"]),
                output_dir=str(d["output_dir"]),
                threads=int(d.get("threads", 1)),
                log_level=d.get("log_level"),
                params=dict(params),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigException(f"Invalid run config. Error '{e}'") from e


def write_snapshot(config: RunConfig) -> str:
    os.makedirs(config.output_dir, exist_ok=True)
    path = config.path(SNAPSHOT_FILENAME)
    with open(path, "w") as f:
        yaml.safe_dump(config.to_dict(), f, sort_keys=True)
    logger.info(f"Resolved config written to {path}")
    return path


def read_snapshot(path: str, allowed_params: typing.Dict[str, typing.Sequence[str]]) -> RunConfig:
    if os.path.isdir(path):
        path = os.path.join(path, SNAPSHOT_FILENAME)
    if not os.path.isfile(path):
        raise ConfigException(f"Run config '{path}' does not exist")
    with open(path, "r") as f:
        try:
            data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigException(f"Run config '{path}' is not valid YAML. Error '{e}'") from e
    return RunConfig.from_dict(data, allowed_params)
