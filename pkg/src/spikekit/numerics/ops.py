"""Primitive tensor operations with closed-form gradients.

Conventions:
    * matmul accepts equal-rank stacks of matrices (rank >= 2) whose
      leading dimensions match exactly; no implicit broadcasting there.
    * add / sub / mul broadcast like numpy; the backward pass sums the
      incoming gradient over broadcast axes.
    * conv2d is cross-correlation over a single (C, H, W) image.
    * softmax_rows normalises the last axis with max subtraction.
    * gelu is the exact erf form: 0.5 * x * (1 + erf(x / sqrt(2))).
    * l1_loss is mean absolute error with subgradient 0 at exact ties.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np
from scipy.special import erf

from ..errors import DimensionError
from .tensor import Tensor, make_result, _register_ops

_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _coerce(x, like: Optional[Tensor] = None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    dtype = like.data.dtype if like is not None else None
    return Tensor(np.asarray(x, dtype=dtype))


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient over the axes numpy broadcasting introduced."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# Elementwise arithmetic
# ---------------------------------------------------------------------------

def add(a, b) -> Tensor:
    a = _coerce(a)
    b = _coerce(b, like=a)
    out = a.data + b.data

    def bw(g: np.ndarray) -> None:
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(g, b.shape))

    return make_result(out, (a, b), bw)


def sub(a, b) -> Tensor:
    a = _coerce(a)
    b = _coerce(b, like=a)
    out = a.data - b.data

    def bw(g: np.ndarray) -> None:
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b.accumulate_grad(-_unbroadcast(g, b.shape))

    return make_result(out, (a, b), bw)


def mul(a, b) -> Tensor:
    a = _coerce(a)
    b = _coerce(b, like=a)
    out = a.data * b.data

    def bw(g: np.ndarray) -> None:
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(g * a.data, b.shape))

    return make_result(out, (a, b), bw)


# ---------------------------------------------------------------------------
# Linear algebra
# ---------------------------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product; rank > 2 operands are equal-shaped stacks."""
    a = _coerce(a)
    b = _coerce(b)
    if a.ndim < 2 or b.ndim < 2 or a.ndim != b.ndim:
        raise DimensionError(f"matmul needs equal-rank matrices, got {a.shape} and {b.shape}")
    if a.shape[:-2] != b.shape[:-2] or a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul shapes do not chain: {a.shape} x {b.shape}")
    out = np.matmul(a.data, b.data)

    def bw(g: np.ndarray) -> None:
        if a.requires_grad:
            a.accumulate_grad(np.matmul(g, np.swapaxes(b.data, -1, -2)))
        if b.requires_grad:
            b.accumulate_grad(np.matmul(np.swapaxes(a.data, -1, -2), g))

    return make_result(out, (a, b), bw)


def linear(x: Tensor, w: Tensor, b: Optional[Tensor] = None) -> Tensor:
    """x @ w (+ b) for a 2-D batch of rows."""
    if x.ndim != 2 or w.ndim != 2 or x.shape[1] != w.shape[0]:
        raise DimensionError(f"linear shapes do not chain: {x.shape} x {w.shape}")
    if b is not None and b.shape != (w.shape[1],):
        raise DimensionError(f"linear bias {b.shape} does not match output dim {w.shape[1]}")
    out = x.data @ w.data
    if b is not None:
        out = out + b.data

    def bw(g: np.ndarray) -> None:
        if x.requires_grad:
            x.accumulate_grad(g @ w.data.T)
        if w.requires_grad:
            w.accumulate_grad(x.data.T @ g)
        if b is not None and b.requires_grad:
            b.accumulate_grad(g.sum(axis=0))

    parents = (x, w) if b is None else (x, w, b)
    return make_result(out, parents, bw)


def conv2d(
    x: Tensor,
    w: Tensor,
    b: Optional[Tensor] = None,
    padding: int = 0,
    stride: int = 1,
) -> Tensor:
    """Cross-correlate a (C_in, H, W) image with (C_out, C_in, k, k) filters.

    k must be odd; padding (k-1)//2 with stride 1 keeps the spatial size.
    """
    if x.ndim != 3 or w.ndim != 4:
        raise DimensionError(f"conv2d expects (C,H,W) and (O,C,k,k), got {x.shape} and {w.shape}")
    c_out, c_in, kh, kw = w.shape
    if kh != kw or kh % 2 == 0:
        raise DimensionError(f"conv2d kernel must be odd and square, got {kh}x{kw}")
    if x.shape[0] != c_in:
        raise DimensionError(f"conv2d channel mismatch: input has {x.shape[0]}, filters expect {c_in}")
    if b is not None and b.shape != (c_out,):
        raise DimensionError(f"conv2d bias {b.shape} does not match {c_out} output channels")
    k, p, s = kh, padding, stride
    _, h, wid = x.shape
    h_out = (h + 2 * p - k) // s + 1
    w_out = (wid + 2 * p - k) // s + 1
    if h_out < 1 or w_out < 1:
        raise DimensionError(f"conv2d output would be empty for input {x.shape}, kernel {k}, padding {p}")

    xp = np.pad(x.data, ((0, 0), (p, p), (p, p))) if p else x.data
    out = np.zeros((c_out, h_out, w_out), dtype=np.result_type(x.data, w.data))
    for di in range(k):
        for dj in range(k):
            patch = xp[:, di : di + s * h_out : s, dj : dj + s * w_out : s]
            out += np.tensordot(w.data[:, :, di, dj], patch, axes=([1], [0]))
    if b is not None:
        out += b.data[:, None, None]

    def bw(g: np.ndarray) -> None:
        if b is not None and b.requires_grad:
            b.accumulate_grad(g.sum(axis=(1, 2)))
        if w.requires_grad:
            dw = np.zeros_like(w.data)
            for di in range(k):
                for dj in range(k):
                    patch = xp[:, di : di + s * h_out : s, dj : dj + s * w_out : s]
                    dw[:, :, di, dj] = np.tensordot(g, patch, axes=([1, 2], [1, 2]))
            w.accumulate_grad(dw)
        if x.requires_grad:
            dxp = np.zeros_like(xp)
            for di in range(k):
                for dj in range(k):
                    dxp[:, di : di + s * h_out : s, dj : dj + s * w_out : s] += np.tensordot(
                        w.data[:, :, di, dj], g, axes=([0], [0])
                    )
            dx = dxp[:, p : p + h, p : p + wid] if p else dxp
            x.accumulate_grad(dx)

    parents = (x, w) if b is None else (x, w, b)
    return make_result(out, parents, bw)


# ---------------------------------------------------------------------------
# Normalisation and nonlinearities
# ---------------------------------------------------------------------------

def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Per-row zero-mean unit-variance normalisation, then affine."""
    if x.ndim != 2:
        raise DimensionError(f"layer_norm expects (n, d) rows, got {x.shape}")
    d = x.shape[1]
    if gamma.shape != (d,) or beta.shape != (d,):
        raise DimensionError(f"layer_norm affine params must be shape ({d},)")
    if eps <= 0:
        raise ValueError(f"layer_norm eps must be positive, got {eps}")
    mu = x.data.mean(axis=1, keepdims=True)
    centred = x.data - mu
    var = (centred * centred).mean(axis=1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = centred * inv_std
    out = xhat * gamma.data + beta.data

    def bw(g: np.ndarray) -> None:
        if gamma.requires_grad:
            gamma.accumulate_grad((g * xhat).sum(axis=0))
        if beta.requires_grad:
            beta.accumulate_grad(g.sum(axis=0))
        if x.requires_grad:
            dxhat = g * gamma.data
            term1 = dxhat.mean(axis=1, keepdims=True)
            term2 = (dxhat * xhat).mean(axis=1, keepdims=True)
            x.accumulate_grad(inv_std * (dxhat - term1 - xhat * term2))

    return make_result(out, (x, gamma, beta), bw)


def softmax_rows(x: Tensor) -> Tensor:
    """Softmax over the last axis, computed with max subtraction."""
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=-1, keepdims=True)

    def bw(g: np.ndarray) -> None:
        if x.requires_grad:
            inner = (g * out).sum(axis=-1, keepdims=True)
            x.accumulate_grad(out * (g - inner))

    return make_result(out, (x,), bw)


def gelu(x: Tensor) -> Tensor:
    """Exact Gaussian error linear unit (erf form, not the tanh fit)."""
    cdf = 0.5 * (1.0 + erf(x.data * _INV_SQRT2))
    out = x.data * cdf

    def bw(g: np.ndarray) -> None:
        if x.requires_grad:
            pdf = np.exp(-0.5 * x.data * x.data) * _INV_SQRT2PI
            x.accumulate_grad(g * (cdf + x.data * pdf))

    return make_result(out, (x,), bw)


def l1_loss(pred: Tensor, target: Tensor) -> Tensor:
    """Mean absolute error; ties contribute zero subgradient."""
    if pred.shape != target.shape:
        raise DimensionError(f"l1_loss shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred.data - target.data
    out = np.abs(diff).mean()

    def bw(g: np.ndarray) -> None:
        scale = g.reshape(()) / diff.size
        signed = np.sign(diff) * scale
        if pred.requires_grad:
            pred.accumulate_grad(signed)
        if target.requires_grad:
            target.accumulate_grad(-signed)

    return make_result(np.asarray(out), (pred, target), bw)


def sum_all(x: Tensor) -> Tensor:
    out = np.asarray(x.data.sum())

    def bw(g: np.ndarray) -> None:
        if x.requires_grad:
            x.accumulate_grad(np.broadcast_to(g.reshape(()), x.shape).astype(x.data.dtype))

    return make_result(out, (x,), bw)


# ---------------------------------------------------------------------------
# Structural ops (exact inverses, gradient is pure data movement)
# ---------------------------------------------------------------------------

def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    out = x.data.reshape(tuple(shape))

    def bw(g: np.ndarray) -> None:
        if x.requires_grad:
            x.accumulate_grad(g.reshape(x.shape))

    return make_result(out, (x,), bw)


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    out = np.transpose(x.data, axes)
    inverse = tuple(np.argsort(axes))

    def bw(g: np.ndarray) -> None:
        if x.requires_grad:
            x.accumulate_grad(np.transpose(g, inverse))

    return make_result(out, (x,), bw)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [_coerce(t) for t in tensors]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bw(g: np.ndarray) -> None:
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                t.accumulate_grad(g[tuple(idx)])

    return make_result(out, tuple(tensors), bw)


def slice_axis(x: Tensor, axis: int, start: int, stop: int) -> Tensor:
    idx = [slice(None)] * x.ndim
    idx[axis] = slice(start, stop)
    idx = tuple(idx)
    out = x.data[idx]

    def bw(g: np.ndarray) -> None:
        if x.requires_grad:
            dx = np.zeros_like(x.data)
            dx[idx] = g
            x.accumulate_grad(dx)

    return make_result(out, (x,), bw)


def pad_reflect(x: Tensor, pad_h: int, pad_w: int) -> Tensor:
    """Reflect-pad the bottom/right of a (C, H, W) tensor."""
    if x.ndim != 3:
        raise DimensionError(f"pad_reflect expects (C, H, W), got {x.shape}")
    c, h, w = x.shape
    if pad_h >= h or pad_w >= w:
        raise DimensionError(f"reflect padding ({pad_h},{pad_w}) too large for {h}x{w}")
    rows = np.pad(np.arange(h), (0, pad_h), mode="reflect")
    cols = np.pad(np.arange(w), (0, pad_w), mode="reflect")
    out = x.data[:, rows[:, None], cols[None, :]]

    def bw(g: np.ndarray) -> None:
        if x.requires_grad:
            dx = np.zeros_like(x.data)
            np.add.at(
                dx,
                (np.arange(c)[:, None, None], rows[None, :, None], cols[None, None, :]),
                g,
            )
            x.accumulate_grad(dx)

    return make_result(out, (x,), bw)


def roll2d(x: Tensor, shift_h: int, shift_w: int) -> Tensor:
    """Cyclic roll over the last two axes."""
    out = np.roll(x.data, (shift_h, shift_w), axis=(-2, -1))

    def bw(g: np.ndarray) -> None:
        if x.requires_grad:
            x.accumulate_grad(np.roll(g, (-shift_h, -shift_w), axis=(-2, -1)))

    return make_result(out, (x,), bw)


def take_rows(table: Tensor, index: np.ndarray) -> Tensor:
    """Gather rows of a 2-D table by an integer index array."""
    index = np.asarray(index)
    out = table.data[index]

    def bw(g: np.ndarray) -> None:
        if table.requires_grad:
            dt = np.zeros_like(table.data)
            np.add.at(dt, index, g)
            table.accumulate_grad(dt)

    return make_result(out, (table,), bw)


def _const_like(value, like: Tensor) -> Tensor:
    return Tensor(np.asarray(value, dtype=like.data.dtype))


_register_ops({"add": add, "sub": sub, "mul": mul, "const_like": _const_like})
