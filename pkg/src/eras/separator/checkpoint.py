"""Training checkpoints as ``.npz`` containers.

Arrays are stored under ``param__<name>``, ``adam_m__<name>`` and
``adam_v__<name>``; everything else lives in a JSON string under ``metadata``.
"""
import json
import os
import typing
import zipfile

import numpy as np

import eras.logging as logging

from ..helpers.exceptions import DataException
from .optim import AdamState

logger = logging.getLogger()

FORMAT_VERSION = 1
PARAM_PREFIX = "param__"
ADAM_M_PREFIX = "adam_m__"
ADAM_V_PREFIX = "adam_v__"


class CheckpointException(DataException):
    pass


class Checkpoint(typing.NamedTuple):
    params: typing.Dict[str, np.ndarray]
    opt_state: AdamState
    metadata: typing.Dict[str, typing.Any]


def save_checkpoint(
    path: str,
    params: typing.Dict[str, np.ndarray],
    opt_state: AdamState,
    metadata: typing.Dict[str, typing.Any],
):
    arrays = {}
    for name, value in params.items():
        arrays[PARAM_PREFIX + name] = value
        arrays[ADAM_M_PREFIX + name] = opt_state.m[name]
        arrays[ADAM_V_PREFIX + name] = opt_state.v[name]
    meta = dict(metadata, format_version=FORMAT_VERSION, adam_step=opt_state.step)
    arrays["metadata"] = np.array(json.dumps(meta, sort_keys=True))

    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        np.savez(f, **arrays)
    os.replace(tmp, path)
    logger.debug(f"Checkpoint written to {path}")


def load_checkpoint(path: str) -> Checkpoint:
    if not os.path.isfile(path):
        raise CheckpointException(f"Checkpoint '{path}' does not exist")
    try:
        with np.load(path, allow_pickle=False) as data:
            arrays = {k: data[k] for k in data.files}
    except (OSError, ValueError, zipfile.BadZipFile, EOFError) as e:
        raise CheckpointException(
            f"Checkpoint '{path}' is corrupt or not a version {FORMAT_VERSION} checkpoint. Error '{e}'"
        ) from e

    if "metadata" not in arrays:
        raise CheckpointException(f"Checkpoint '{path}' has no metadata record (expected format version {FORMAT_VERSION})")
    try:
        metadata = json.loads(str(arrays.pop("metadata")))
    except json.JSONDecodeError as e:
        raise CheckpointException(f"Checkpoint '{path}' metadata is not valid JSON. Error '{e}'") from e

    version = metadata.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointException(
            f"Checkpoint '{path}' has format version {version}, this build reads version {FORMAT_VERSION}"
        )

    params = {k[len(PARAM_PREFIX) :]: v for k, v in arrays.items() if k.startswith(PARAM_PREFIX)}
    m = {k[len(ADAM_M_PREFIX) :]: v for k, v in arrays.items() if k.startswith(ADAM_M_PREFIX)}
    v = {k[len(ADAM_V_PREFIX) :]: v for k, v in arrays.items() if k.startswith(ADAM_V_PREFIX)}
    if set(params) != set(m) or set(params) != set(v):
        raise CheckpointException(f"Checkpoint '{path}' has inconsistent parameter and optimizer entries")
    return Checkpoint(params, AdamState(int(metadata.get("adam_step", 0)), m, v), metadata)
