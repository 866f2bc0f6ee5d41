"""Spatial window partitioning with cyclic shift and boundary masking.

A (C, H, W) feature map is reflect-padded on the bottom/right until
both spatial sizes are multiples of the window M, cyclically rolled by
-shift, and cut into non-overlapping M x M windows of flattened tokens.
``window_reverse`` inverts the partition exactly, including the crop.

For shifted partitions, windows along the wrap-around seam mix content
from opposite edges of the canvas; ``attention_mask`` marks those token
pairs with a large negative additive logit so softmax assigns them no
mass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numerics import Tensor, pad_reflect, reshape, roll2d, slice_axis, transpose

MASKED_LOGIT = -1e9


@dataclass
class WindowBatch:
    """Window tokens plus the geometry needed to invert the partition."""

    tokens: Tensor  # (n_windows, M*M, C)
    height: int     # original H
    width: int      # original W
    grid_h: int     # padded H (multiple of window)
    grid_w: int     # padded W (multiple of window)
    window: int
    shift: int

    @property
    def n_windows(self) -> int:
        return (self.grid_h // self.window) * (self.grid_w // self.window)

    def with_tokens(self, tokens: Tensor) -> "WindowBatch":
        return WindowBatch(
            tokens, self.height, self.width, self.grid_h, self.grid_w, self.window, self.shift
        )


def window_partition(x: Tensor, window: int, shift: int = 0) -> WindowBatch:
    """Cut (C, H, W) into (n_windows, M^2, C) tokens."""
    c, h, w = x.shape
    pad_h = (-h) % window
    pad_w = (-w) % window
    if pad_h or pad_w:
        x = pad_reflect(x, pad_h, pad_w)
    grid_h, grid_w = h + pad_h, w + pad_w
    if shift:
        x = roll2d(x, -shift, -shift)
    nh, nw = grid_h // window, grid_w // window
    x = reshape(x, (c, nh, window, nw, window))
    x = transpose(x, (1, 3, 2, 4, 0))  # (nh, nw, M, M, C)
    tokens = reshape(x, (nh * nw, window * window, c))
    return WindowBatch(tokens, h, w, grid_h, grid_w, window, shift)


def window_reverse(wb: WindowBatch) -> Tensor:
    """Invert window_partition back to a (C, H, W) tensor."""
    m = wb.window
    nh, nw = wb.grid_h // m, wb.grid_w // m
    c = wb.tokens.shape[-1]
    x = reshape(wb.tokens, (nh, nw, m, m, c))
    x = transpose(x, (4, 0, 2, 1, 3))  # (C, nh, M, nw, M)
    x = reshape(x, (c, wb.grid_h, wb.grid_w))
    if wb.shift:
        x = roll2d(x, wb.shift, wb.shift)
    if wb.grid_h != wb.height:
        x = slice_axis(x, 1, 0, wb.height)
    if wb.grid_w != wb.width:
        x = slice_axis(x, 2, 0, wb.width)
    return x


def attention_mask(grid_h: int, grid_w: int, window: int, shift: int, dtype=np.float64):
    """(n_windows, M^2, M^2) additive mask for a shifted partition.

    Region ids follow the standard three-slice scheme per axis; token
    pairs whose ids differ receive MASKED_LOGIT. Returns None when the
    shift is zero (nothing straddles a seam).
    """
    if shift == 0:
        return None
    ids = np.zeros((grid_h, grid_w))
    slices = (slice(0, -window), slice(-window, -shift), slice(-shift, None))
    region = 0
    for hs in slices:
        for ws in slices:
            ids[hs, ws] = region
            region += 1
    nh, nw = grid_h // window, grid_w // window
    wins = ids.reshape(nh, window, nw, window).transpose(0, 2, 1, 3).reshape(-1, window * window)
    diff = wins[:, None, :] - wins[:, :, None]
    return np.where(diff != 0, MASKED_LOGIT, 0.0).astype(dtype)
