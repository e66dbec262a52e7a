"""Differentiable primitives.

Shapes are explicit: binary element-wise ops accept equal shapes or a 0-d
operand, anything else must go through :func:`broadcast_to`.
"""
import typing

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tape import Tensor, as_tensor, record

Axis = typing.Optional[typing.Union[int, typing.Tuple[int, ...]]]


def _check_elementwise(op: str, a: Tensor, b: Tensor):
    if a.shape != b.shape and a.ndim != 0 and b.ndim != 0:
        raise ValueError(f"{op}: shapes {a.shape} and {b.shape} differ, use broadcast_to explicitly")


def _reduce_to(g: np.ndarray, shape: typing.Tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    return np.asarray(np.sum(g)).reshape(shape)


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_elementwise("add", a, b)
    return record("add", (a, b), a.values + b.values, lambda g: (_reduce_to(g, a.shape), _reduce_to(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_elementwise("sub", a, b)
    return record("sub", (a, b), a.values - b.values, lambda g: (_reduce_to(g, a.shape), _reduce_to(-g, b.shape)))


def neg(a) -> Tensor:
    a = as_tensor(a)
    return record("neg", (a,), -a.values, lambda g: (-g,))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_elementwise("mul", a, b)
    av, bv = a.values, b.values
    return record(
        "mul", (a, b), av * bv, lambda g: (_reduce_to(g * bv, a.shape), _reduce_to(g * av, b.shape))
    )


def scale(a, c) -> Tensor:
    """Multiply by a constant scalar or array; ``c`` must broadcast to ``a``'s shape."""
    a = as_tensor(a)
    c = np.asarray(c.values if isinstance(c, Tensor) else c, dtype=np.float64)
    values = a.values * c
    if values.shape != a.shape:
        raise ValueError(f"scale: constant of shape {c.shape} would change shape {a.shape}")
    return record("scale", (a,), values, lambda g: (g * c,))


def reciprocal(a) -> Tensor:
    a = as_tensor(a)
    v = 1.0 / a.values
    return record("reciprocal", (a,), v, lambda g: (-g * v * v,))


def divide(a, b) -> Tensor:
    return mul(a, reciprocal(b))


def log(a) -> Tensor:
    a = as_tensor(a)
    av = a.values
    return record("log", (a,), np.log(av), lambda g: (g / av,))


def tanh(a) -> Tensor:
    a = as_tensor(a)
    v = np.tanh(a.values)
    return record("tanh", (a,), v, lambda g: (g * (1.0 - v * v),))


def abs(a) -> Tensor:  # noqa: A001
    a = as_tensor(a)
    sign = np.sign(a.values)
    return record("abs", (a,), np.abs(a.values), lambda g: (g * sign,))


def cabs(re, im, floor: float = 0.0) -> Tensor:
    """``max(sqrt(re² + im²), floor)``; bins at or below the floor get zero gradient."""
    re, im = as_tensor(re), as_tensor(im)
    if re.shape != im.shape:
        raise ValueError(f"cabs: real part {re.shape} and imaginary part {im.shape} differ")
    magnitude = np.hypot(re.values, im.values)
    live = magnitude > floor
    safe = np.where(live, magnitude, 1.0)
    rv, iv = re.values, im.values

    def backward(g):
        gs = np.where(live, g / safe, 0.0)
        return gs * rv, gs * iv

    return record("cabs", (re, im), np.maximum(magnitude, floor), backward)


def _expand(g: np.ndarray, shape: typing.Tuple[int, ...], axis: Axis) -> np.ndarray:
    if axis is None:
        return np.broadcast_to(g, shape)
    axes = (axis,) if isinstance(axis, int) else axis
    axes = tuple(ax % len(shape) for ax in axes)
    return np.broadcast_to(np.expand_dims(g, axes), shape)


def _count(shape: typing.Tuple[int, ...], axis: Axis) -> int:
    if axis is None:
        return int(np.prod(shape))
    axes = (axis,) if isinstance(axis, int) else axis
    return int(np.prod([shape[ax] for ax in axes]))


def sum(a, axis: Axis = None) -> Tensor:  # noqa: A001
    a = as_tensor(a)
    shape = a.shape
    return record("sum", (a,), np.sum(a.values, axis=axis), lambda g: (np.array(_expand(g, shape, axis)),))


def mean(a, axis: Axis = None) -> Tensor:
    a = as_tensor(a)
    shape = a.shape
    n = _count(shape, axis)
    return record("mean", (a,), np.mean(a.values, axis=axis), lambda g: (_expand(g, shape, axis) / n,))


def variance(a, axis: Axis = None) -> Tensor:
    """Population variance (divides by the element count)."""
    a = as_tensor(a)
    shape = a.shape
    n = _count(shape, axis)
    centered = a.values - np.mean(a.values, axis=axis, keepdims=True)
    values = np.mean(centered * centered, axis=axis)
    return record("variance", (a,), values, lambda g: (_expand(g, shape, axis) * 2.0 * centered / n,))


def l1_distance(a, b) -> Tensor:
    """``sum(|a - b|)`` over all elements."""
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise ValueError(f"l1_distance: shapes {a.shape} and {b.shape} differ")
    sign = np.sign(a.values - b.values)
    return record("l1_distance", (a, b), np.sum(np.abs(a.values - b.values)), lambda g: (g * sign, -g * sign))


def _swap(x: np.ndarray) -> np.ndarray:
    return np.swapaxes(x, -1, -2)


def matmul(a, b) -> Tensor:
    """Matrix product of rank-2 operands, or batched over a shared leading axis for rank 3."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim not in (2, 3) or a.ndim != b.ndim or a.shape[:-2] != b.shape[:-2] or a.shape[-1] != b.shape[-2]:
        raise ValueError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    av, bv = a.values, b.values
    return record("matmul", (a, b), av @ bv, lambda g: (g @ _swap(bv), _swap(av) @ g))


def linear_solve(A, b) -> Tensor:
    """Solve ``A x = b`` for square (optionally batched) ``A``.

    Adjoint: ``b̄ = A⁻ᵀ x̄`` and ``Ā = -b̄ xᵀ``.
    """
    A, b = as_tensor(A), as_tensor(b)
    if A.ndim not in (2, 3) or A.shape[-1] != A.shape[-2] or b.ndim != A.ndim or b.shape[:-1] != A.shape[:-1]:
        raise ValueError(f"linear_solve: incompatible shapes {A.shape} and {b.shape}")
    Av = A.values
    x = np.linalg.solve(Av, b.values)

    def backward(g):
        gb = np.linalg.solve(_swap(Av), g)
        return -gb @ _swap(x), gb

    return record("linear_solve", (A, b), x, backward)


def reshape(a, shape: typing.Tuple[int, ...]) -> Tensor:
    a = as_tensor(a)
    original = a.shape
    return record("reshape", (a,), a.values.reshape(shape), lambda g: (g.reshape(original),))


def transpose(a, axes: typing.Optional[typing.Sequence[int]] = None) -> Tensor:
    a = as_tensor(a)
    axes = tuple(reversed(range(a.ndim))) if axes is None else tuple(axes)
    inverse = tuple(np.argsort(axes))
    return record("transpose", (a,), np.transpose(a.values, axes), lambda g: (np.transpose(g, inverse),))


def concat(tensors: typing.Sequence, axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]
    values = np.concatenate([t.values for t in tensors], axis=axis)
    return record("concat", tensors, values, lambda g: tuple(np.split(g, splits, axis=axis)))


def getitem(a, index) -> Tensor:
    a = as_tensor(a)
    shape = a.shape

    def backward(g):
        out = np.zeros(shape)
        np.add.at(out, index, g)
        return (out,)

    return record("getitem", (a,), np.array(a.values[index]), backward)


def broadcast_to(a, shape: typing.Tuple[int, ...]) -> Tensor:
    a = as_tensor(a)
    original = a.shape
    lead = len(shape) - len(original)
    expanded = tuple(i for i, n in enumerate(original) if n == 1 and shape[lead + i] != 1)

    def backward(g):
        g = np.sum(g, axis=tuple(range(lead))) if lead else g
        if expanded:
            g = np.sum(g, axis=expanded, keepdims=True)
        return (g,)

    return record("broadcast_to", (a,), np.array(np.broadcast_to(a.values, shape)), backward)


def stop_gradient(a) -> Tensor:
    return Tensor(as_tensor(a).values)


def frame_stack(a, k_past: int, k_future: int) -> Tensor:
    """Stack neighbouring frames of ``a`` [T, F] into [F, T, K].

    ``out[f, t, k] = a[t - k_past + k, f]``, zero where that frame is out of range,
    i.e. taps are ordered from ``t - k_past`` to ``t + k_future``.
    """
    a = as_tensor(a)
    if a.ndim != 2:
        raise ValueError(f"frame_stack expects [T, F], got shape {a.shape}")
    T, F = a.shape
    K = k_past + 1 + k_future
    padded = np.pad(a.values, ((k_past, k_future), (0, 0)))
    values = np.transpose(sliding_window_view(padded, K, axis=0), (1, 0, 2)).copy()

    def backward(g):
        gp = np.zeros((T + K - 1, F))
        for k in range(K):
            gp[k : k + T] += g[:, :, k].T
        return (gp[k_past : k_past + T],)

    return record("frame_stack", (a,), values, backward)


def _binary(fn):
    return lambda self, other: fn(self, other)


def _reflected(fn):
    return lambda self, other: fn(other, self)


Tensor.__add__ = _binary(add)
Tensor.__radd__ = _reflected(add)
Tensor.__sub__ = _binary(sub)
Tensor.__rsub__ = _reflected(sub)
Tensor.__mul__ = _binary(mul)
Tensor.__rmul__ = _reflected(mul)
Tensor.__truediv__ = _binary(divide)
Tensor.__matmul__ = _binary(matmul)
Tensor.__neg__ = neg
Tensor.__getitem__ = getitem
