"""Finite-difference gradient oracle.

Independent of the recorded-graph backward pass: every check rebuilds the
forward function from scratch around perturbed copies of the input.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .tensor import Tensor


def finite_diff_grad(f: Callable[[Tensor], Tensor], x: Tensor, h: float = 1e-4) -> Tensor:
    """Central differences (f(x + h e_i) - f(x - h e_i)) / (2h) per element."""
    if h <= 0:
        raise ValueError(f"step size must be positive, got {h}")
    base = x.data.astype(np.float64, copy=True)
    grad = np.zeros_like(base)
    flat = base.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        hi = f(Tensor(base.copy())).item()
        flat[i] = orig - h
        lo = f(Tensor(base.copy())).item()
        flat[i] = orig
        gflat[i] = (hi - lo) / (2.0 * h)
    return Tensor(grad)


def max_rel_error(analytic: np.ndarray, reference: np.ndarray) -> float:
    """max|a - r| / (max|r| + 1e-12): the ratio of infinity norms."""
    analytic = np.asarray(analytic, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    return float(np.abs(analytic - reference).max() / (np.abs(reference).max() + 1e-12))


def perturbed_value(
    f: Callable[[np.ndarray], float], base: np.ndarray, index: tuple, h: float
) -> float:
    """Central difference of a plain-array function at one coordinate."""
    hi = base.copy()
    hi[index] += h
    lo = base.copy()
    lo[index] -= h
    return (f(hi) - f(lo)) / (2.0 * h)
