"""Attention primitives: windowed multi-head self-attention with a
learned relative position bias, and the cross-frame attention that
queries the left segment against keys from the right to reweight the
middle segment's values."""

from __future__ import annotations

from functools import lru_cache
from typing import Optional

import numpy as np

from ..errors import DimensionError
from ..numerics import (
    Tensor,
    add,
    linear,
    matmul,
    mul,
    reshape,
    slice_axis,
    softmax_rows,
    take_rows,
    transpose,
)
from .params import relative_position_index
from .windows import WindowBatch


@lru_cache(maxsize=None)
def _cached_rel_index(m: int):
    idx = relative_position_index(m)
    idx.setflags(write=False)
    return idx


def _project(tokens: Tensor, w: Tensor, b: Optional[Tensor] = None) -> Tensor:
    """Apply a (C_in, C_out) projection to (n, N, C_in) tokens."""
    n, t, c = tokens.shape
    flat = reshape(tokens, (n * t, c))
    out = linear(flat, w, b)
    return reshape(out, (n, t, w.shape[1]))


def sw_msa(
    wb: WindowBatch,
    qkv_w: Tensor,
    qkv_b: Tensor,
    proj_w: Tensor,
    proj_b: Tensor,
    bias_table: Tensor,
    n_heads: int,
    mask: Optional[np.ndarray] = None,
    return_attn: bool = False,
):
    """Multi-head self-attention within each window.

    ``mask`` is an additive (n_windows, N, N) logit array applied before
    the softmax (cross-seam pairs of a shifted partition carry a large
    negative value, so they receive no attention mass).
    """
    n_win, n_tok, c = wb.tokens.shape
    if c % n_heads:
        raise DimensionError(f"channels {c} not divisible by {n_heads} heads")
    head_dim = c // n_heads

    qkv = _project(wb.tokens, qkv_w, qkv_b)               # (nW, N, 3C)
    qkv = reshape(qkv, (n_win, n_tok, 3, n_heads, head_dim))
    qkv = transpose(qkv, (2, 0, 3, 1, 4))                 # (3, nW, h, N, hd)

    def part(i):
        return reshape(slice_axis(qkv, 0, i, i + 1), (n_win, n_heads, n_tok, head_dim))

    q, k, v = part(0), part(1), part(2)
    logits = matmul(mul(q, head_dim**-0.5), transpose(k, (0, 1, 3, 2)))  # (nW, h, N, N)

    rel = take_rows(bias_table, _cached_rel_index(wb.window).reshape(-1))  # (N*N, h)
    rel = transpose(reshape(rel, (n_tok, n_tok, n_heads)), (2, 0, 1))      # (h, N, N)
    logits = add(logits, rel)
    if mask is not None:
        logits = add(logits, Tensor(mask[:, None, :, :].astype(logits.dtype)))

    attn = softmax_rows(logits)
    out = matmul(attn, v)                                 # (nW, h, N, hd)
    out = reshape(transpose(out, (0, 2, 1, 3)), (n_win, n_tok, c))
    out = _project(out, proj_w, proj_b)
    result = wb.with_tokens(out)
    if return_attn:
        return result, attn.data.copy()
    return result


def tsa(
    tokens_l: Tensor,
    tokens_m: Tensor,
    tokens_r: Tensor,
    pl: Tensor,
    pm: Tensor,
    pr: Tensor,
    proj_w: Tensor,
    proj_b: Tensor,
    return_attn: bool = False,
):
    """Cross-frame attention over aligned windows.

    Queries come from the left segment, keys from the right, values from
    the middle: A = softmax(Q K^T / sqrt(D)) with D the projected width,
    and the output is A V pushed through the output projection.
    Single-head, no positional bias.
    """
    if not (tokens_l.shape == tokens_m.shape == tokens_r.shape):
        raise DimensionError(
            f"segment token shapes differ: {tokens_l.shape}, {tokens_m.shape}, {tokens_r.shape}"
        )
    q = _project(tokens_l, pl)
    k = _project(tokens_r, pr)
    v = _project(tokens_m, pm)
    d = q.shape[-1]
    logits = mul(matmul(q, transpose(k, (0, 2, 1))), d**-0.5)  # (nW, N, N)
    attn = softmax_rows(logits)
    out = matmul(attn, v)
    out = _project(out, proj_w, proj_b)
    if return_attn:
        return out, attn.data.copy()
    return out
