import logging
import logging.config
import os
import typing

import yaml


def _packaged(name: str) -> str:
    return os.path.join(os.path.dirname(os.path.abspath(__file__)), name)


def load_config_console():
    load_config(_packaged("logging-console.yml"))


def load_config_rotating_file():
    load_config(_packaged("logging.yml"))


def load_config(configfile: str):
    if configfile is None or not configfile:
        raise ValueError(f"Config file cannot be empty {configfile}")

    if not os.path.exists(configfile):
        raise ValueError(f"Failed to load logging settings from file {configfile}")

    with open(configfile, "r") as f:
        log_config = yaml.safe_load(f)

    for handler in log_config.get("handlers", {}).values():
        filename = handler.get("filename")
        if filename:
            os.makedirs(os.path.dirname(os.path.abspath(filename)), exist_ok=True)

    logging.config.dictConfig(log_config)


def set_level(level: typing.Optional[str]):
    """Override the root level, e.g. from the ``--log-level`` flag."""
    if not level:
        return
    logging.getLogger().setLevel(level.upper())


def getLogger(name=None):
    return logging.getLogger(name)
