"""Reverse-mode differentiation tape.

A :class:`Tape` is entered as a context manager; while it is active every
primitive whose inputs include a tensor watched by (or recorded on) that tape
appends a record ``(op, input indices, backward, shape)``. Tapes live on a
thread-local stack, so concurrent training runs never share one.
"""
import threading
import typing

import numpy as np

import eras.logging as logging

from ..helpers.exceptions import GradientException

logger = logging.getLogger()

_local = threading.local()

Backward = typing.Callable[[np.ndarray], typing.Sequence[typing.Optional[np.ndarray]]]


class Record(typing.NamedTuple):
    op: str
    inputs: typing.Tuple[int, ...]
    backward: typing.Optional[Backward]
    shape: typing.Tuple[int, ...]


def _stack() -> typing.List["Tape"]:
    if not hasattr(_local, "tapes"):
        _local.tapes = []
    return _local.tapes


def current_tape() -> typing.Optional["Tape"]:
    tapes = _stack()
    return tapes[-1] if tapes else None


class Tensor:
    """Real float64 array with optional provenance on a tape."""

    __slots__ = ("values", "tape", "index")

    def __init__(self, values, tape: typing.Optional["Tape"] = None, index: typing.Optional[int] = None):
        self.values = np.asarray(values, dtype=np.float64)
        self.tape = tape
        self.index = index

    @property
    def shape(self) -> typing.Tuple[int, ...]:
        return self.values.shape

    @property
    def ndim(self) -> int:
        return self.values.ndim

    @property
    def size(self) -> int:
        return self.values.size

    def is_tracked_by(self, tape: typing.Optional["Tape"]) -> bool:
        return tape is not None and self.tape is tape

    def numpy(self) -> np.ndarray:
        return self.values

    def item(self) -> float:
        return float(self.values)

    def __float__(self):
        return float(self.values)

    def __repr__(self):
        tracked = "" if self.tape is None else f",index={self.index}"
        return f"Tensor(shape={self.shape}{tracked})"


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


class Tape:
    def __init__(self):
        self._records: typing.List[typing.Optional[Record]] = []
        self._consumed = False

    def __enter__(self) -> "Tape":
        if self._consumed:
            raise GradientException("Cannot record on a consumed tape")
        _stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        tapes = _stack()
        if tapes and tapes[-1] is self:
            tapes.pop()
        else:
            raise GradientException("Tapes must be exited in the reverse order they were entered")

    def __len__(self):
        return len(self._records)

    @property
    def consumed(self) -> bool:
        return self._consumed

    def watch(self, values) -> Tensor:
        if self._consumed:
            raise GradientException("Cannot watch values on a consumed tape")
        values = values.values if isinstance(values, Tensor) else values
        self._records.append(None)
        return Tensor(np.array(values, dtype=np.float64), self, len(self._records) - 1)

    def record(self, op: str, inputs: typing.Sequence[Tensor], values: np.ndarray, backward: Backward) -> Tensor:
        if self._consumed:
            raise GradientException(f"Cannot record '{op}' on a consumed tape")
        indices = tuple(t.index if t.is_tracked_by(self) else -1 for t in inputs)
        self._records.append(Record(op, indices, backward, np.shape(values)))
        return Tensor(values, self, len(self._records) - 1)

    def gradient(self, target: Tensor, sources: typing.Sequence[Tensor]) -> typing.List[np.ndarray]:
        """Gradients of the scalar ``target`` with respect to each of ``sources``.

        The tape is consumed by this call: its records are released and later
        calls raise :class:`GradientException`.
        """
        if self._consumed:
            raise GradientException("Tape already consumed by a previous backward pass")
        if not target.is_tracked_by(self):
            raise GradientException("Backward requested for a target that was not recorded on this tape")
        if target.size != 1:
            raise GradientException(f"Backward requires a scalar target, got shape {target.shape}")

        wanted = {s.index: None for s in sources if s.is_tracked_by(self)}
        grads: typing.Dict[int, np.ndarray] = {target.index: np.ones(target.shape)}
        for i in range(target.index, -1, -1):
            g = grads.pop(i, None)
            if g is None:
                continue
            if i in wanted:
                wanted[i] = g
            record = self._records[i]
            if record is None:
                continue
            for index, gi in zip(record.inputs, record.backward(g)):
                if index < 0 or gi is None:
                    continue
                if index in grads:
                    grads[index] = grads[index] + gi
                else:
                    grads[index] = gi

        self._consumed = True
        self._records = []
        logger.debug(f"Backward pass done for {len(wanted)} source(s)")

        result = []
        for s in sources:
            g = wanted.get(s.index) if s.is_tracked_by(self) else None
            result.append(np.zeros(s.shape) if g is None else np.asarray(g, dtype=np.float64).reshape(s.shape))
        return result


def record(op: str, inputs: typing.Sequence[Tensor], values: np.ndarray, backward: Backward) -> Tensor:
    """Wrap ``values`` as the output of ``op``, recording it only when an input is tracked."""
    tape = current_tape()
    if tape is None or not any(t.is_tracked_by(tape) for t in inputs):
        return Tensor(values)
    return tape.record(op, inputs, values, backward)
