"""Minimal dense-tensor core: forward ops, reverse-mode gradients, and a
finite-difference oracle for verifying them."""

from .tensor import Tensor, backward, no_grad
from . import ops  # noqa: F401  (binds operator implementations onto Tensor)
from .ops import (
    add,
    concat,
    conv2d,
    gelu,
    l1_loss,
    layer_norm,
    linear,
    matmul,
    mul,
    pad_reflect,
    reshape,
    roll2d,
    slice_axis,
    softmax_rows,
    sub,
    sum_all,
    take_rows,
    transpose,
)
from .gradcheck import finite_diff_grad, max_rel_error

__all__ = [
    "Tensor",
    "backward",
    "no_grad",
    "add",
    "sub",
    "mul",
    "matmul",
    "linear",
    "conv2d",
    "layer_norm",
    "softmax_rows",
    "gelu",
    "l1_loss",
    "sum_all",
    "reshape",
    "transpose",
    "concat",
    "slice_axis",
    "pad_reflect",
    "roll2d",
    "take_rows",
    "finite_diff_grad",
    "max_rel_error",
]
