from . import ops
from .complex import ComplexTensor, as_complex, complex_matmul, complex_mul, complex_sum
from .gradcheck import GradCheckReport, grad_check, grad_check_report, reverse_gradient
from .tape import Record, Tape, Tensor, as_tensor, current_tape

__all__ = [
    "ComplexTensor",
    "GradCheckReport",
    "Record",
    "Tape",
    "Tensor",
    "as_complex",
    "as_tensor",
    "complex_matmul",
    "complex_mul",
    "complex_sum",
    "current_tape",
    "grad_check",
    "grad_check_report",
    "ops",
    "reverse_gradient",
]
