import dataclasses
import typing

import numpy as np

from . import ops
from .tape import Tensor, as_tensor


@dataclasses.dataclass(frozen=True)
class ComplexTensor:
    """Complex array carried as a pair of real tensors."""

    re: Tensor
    im: Tensor

    def __post_init__(self):
        object.__setattr__(self, "re", as_tensor(self.re))
        object.__setattr__(self, "im", as_tensor(self.im))
        if self.re.shape != self.im.shape:
            raise ValueError(f"Real part {self.re.shape} and imaginary part {self.im.shape} differ")

    @staticmethod
    def from_array(values) -> "ComplexTensor":
        values = np.asarray(values, dtype=np.complex128)
        return ComplexTensor(Tensor(values.real.copy()), Tensor(values.imag.copy()))

    @staticmethod
    def zeros(shape: typing.Tuple[int, ...]) -> "ComplexTensor":
        return ComplexTensor(Tensor(np.zeros(shape)), Tensor(np.zeros(shape)))

    @property
    def shape(self) -> typing.Tuple[int, ...]:
        return self.re.shape

    def numpy(self) -> np.ndarray:
        return self.re.values + 1j * self.im.values

    def __add__(self, other: "ComplexTensor") -> "ComplexTensor":
        return ComplexTensor(ops.add(self.re, other.re), ops.add(self.im, other.im))

    def __sub__(self, other: "ComplexTensor") -> "ComplexTensor":
        return ComplexTensor(ops.sub(self.re, other.re), ops.sub(self.im, other.im))

    def __mul__(self, other: "ComplexTensor") -> "ComplexTensor":
        return complex_mul(self, other)

    def __matmul__(self, other: "ComplexTensor") -> "ComplexTensor":
        return complex_matmul(self, other)

    def __getitem__(self, index) -> "ComplexTensor":
        return ComplexTensor(ops.getitem(self.re, index), ops.getitem(self.im, index))

    def conj(self) -> "ComplexTensor":
        return ComplexTensor(self.re, ops.neg(self.im))

    def scale(self, c) -> "ComplexTensor":
        return ComplexTensor(ops.scale(self.re, c), ops.scale(self.im, c))

    def reshape(self, shape: typing.Tuple[int, ...]) -> "ComplexTensor":
        return ComplexTensor(ops.reshape(self.re, shape), ops.reshape(self.im, shape))

    def transpose(self, axes: typing.Optional[typing.Sequence[int]] = None) -> "ComplexTensor":
        return ComplexTensor(ops.transpose(self.re, axes), ops.transpose(self.im, axes))

    def detach(self) -> "ComplexTensor":
        return ComplexTensor(ops.stop_gradient(self.re), ops.stop_gradient(self.im))

    def magnitude(self, floor: float = 0.0) -> Tensor:
        return ops.cabs(self.re, self.im, floor)


def as_complex(x) -> ComplexTensor:
    """Accept a :class:`ComplexTensor`, a spectrogram-like object with ``bins``, or a complex array."""
    if isinstance(x, ComplexTensor):
        return x
    bins = getattr(x, "bins", None)
    return ComplexTensor.from_array(x if bins is None else bins)


def complex_mul(a: ComplexTensor, b: ComplexTensor) -> ComplexTensor:
    """Element-wise ``(ar + i ai)(br + i bi)``."""
    re = ops.sub(ops.mul(a.re, b.re), ops.mul(a.im, b.im))
    im = ops.add(ops.mul(a.re, b.im), ops.mul(a.im, b.re))
    return ComplexTensor(re, im)


def complex_matmul(a: ComplexTensor, b: ComplexTensor) -> ComplexTensor:
    re = ops.sub(ops.matmul(a.re, b.re), ops.matmul(a.im, b.im))
    im = ops.add(ops.matmul(a.re, b.im), ops.matmul(a.im, b.re))
    return ComplexTensor(re, im)


def complex_sum(terms: typing.Sequence[ComplexTensor]) -> ComplexTensor:
    if not terms:
        raise ValueError("complex_sum of an empty sequence")
    total = terms[0]
    for term in terms[1:]:
        total = total + term
    return total
