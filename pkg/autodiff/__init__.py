"""Minimal reverse-mode automatic differentiation on numpy."""

from autodiff.errors import AutodiffContractError, ConvConfigError, ShapeError, TargetIndexError
from autodiff.tensor import Function, Tensor, default_dtype, get_default_dtype, no_grad, tensor

__all__ = [
    "AutodiffContractError",
    "ConvConfigError",
    "Function",
    "ShapeError",
    "TargetIndexError",
    "Tensor",
    "default_dtype",
    "get_default_dtype",
    "no_grad",
    "tensor",
]
