from autodiff.tensor import Tape, Tensor
from autodiff.gradcheck import grad_check
from autodiff.precision import get_dtype, set_precision

__all__ = ["Tape", "Tensor", "grad_check", "get_dtype", "set_precision"]
