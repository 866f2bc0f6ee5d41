"""The reconstruction network.

A spike stream is split chronologically into left / middle / right
segments. Each segment's binary frames pass through its own two-conv
feature extractor; the three C-channel maps are stacked and refined by
residual attention blocks whose attention stage updates only the middle
segment:

    x_l, x_m, x_r = LN(split(x))
    y_m = SW-MSA(x_m) + beta * TSA(x_l, x_m, x_r) + x_m   (residual from
                                                           the pre-LN x_m)
    y_m = MLP(LN(y_m)) + y_m        ("prenorm"; the "literal" variant
                                     computes MLP(LN(y_m) + y_m))
    out = concat(x_l, y_m, x_r)     (adjacent segments pass through)

Cross-segment mixing happens in the cross-frame attention and in each
residual block's trailing 3C-channel convolution. A global residual
adds the raw stacked features back before three convolutional heads
emit one image per segment; patch_size > 1 is undone by sub-pixel
upsampling in the heads.
"""

from __future__ import annotations

import numpy as np

from ..classic import ReconFrame
from ..codec import SpikeStream
from ..errors import ConfigMismatchError, DimensionError
from ..numerics import (
    Tensor,
    add,
    concat,
    conv2d,
    gelu,
    l1_loss,
    layer_norm,
    linear,
    mul,
    no_grad,
    reshape,
    slice_axis,
    transpose,
)
from .attention import sw_msa, tsa
from .config import ModelConfig
from .windows import attention_mask, window_partition, window_reverse

SEGMENTS = ("left", "mid", "right")


def to_tokens(grid: Tensor) -> Tensor:
    """(C, H, W) -> (H*W, C) row-major tokens."""
    c, h, w = grid.shape
    return reshape(transpose(grid, (1, 2, 0)), (h * w, c))


def to_grid(tokens: Tensor, h: int, w: int) -> Tensor:
    """(H*W, C) -> (C, H, W)."""
    c = tokens.shape[-1]
    return transpose(reshape(tokens, (h, w, c)), (2, 0, 1))


def extract_spike_features(stream: SpikeStream, cfg: ModelConfig, params) -> tuple[Tensor, Tensor, Tensor]:
    """Per-segment conv features of shape (C, H/patch, W/patch)."""
    if stream.t_len != cfg.t_total:
        raise ConfigMismatchError(
            f"stream has {stream.t_len} ticks but the model expects "
            f"{cfg.t_left}+{cfg.t_mid}+{cfg.t_right} = {cfg.t_total}"
        )
    if stream.height % cfg.patch_size or stream.width % cfg.patch_size:
        raise DimensionError(
            f"spatial dims {stream.height}x{stream.width} must be divisible by "
            f"patch_size {cfg.patch_size}"
        )
    dtype = params["feat.left.conv1.w"].dtype
    dense = stream.to_dense().astype(dtype)
    bounds = (0, cfg.t_left, cfg.t_left + cfg.t_mid, cfg.t_total)
    features = []
    for segment, lo, hi in zip(SEGMENTS, bounds[:-1], bounds[1:]):
        x = Tensor(dense[lo:hi])
        x = conv2d(
            x,
            params[f"feat.{segment}.conv1.w"],
            params[f"feat.{segment}.conv1.b"],
            padding=1,
            stride=cfg.patch_size,
        )
        x = gelu(x)
        x = conv2d(x, params[f"feat.{segment}.conv2.w"], params[f"feat.{segment}.conv2.b"], padding=1)
        features.append(x)
    return tuple(features)


def _mlp(tokens: Tensor, params, prefix: str) -> Tensor:
    hidden = gelu(linear(tokens, params[f"{prefix}.fc1.w"], params[f"{prefix}.fc1.b"]))
    return linear(hidden, params[f"{prefix}.fc2.w"], params[f"{prefix}.fc2.b"])


def sab_forward(x: Tensor, cfg: ModelConfig, params, prefix: str, shift: int) -> Tensor:
    """One attention block on a (3, C, H, W) feature stack."""
    if x.ndim != 4 or x.shape[0] != 3:
        raise DimensionError(f"expected (3, C, H, W), got {x.shape}")
    _, c, h, w = x.shape
    segments = [reshape(slice_axis(x, 0, i, i + 1), (c, h, w)) for i in range(3)]
    x_l, x_m, x_r = segments

    ln_g, ln_b = params[f"{prefix}.ln1.g"], params[f"{prefix}.ln1.b"]
    norm = [to_grid(layer_norm(to_tokens(s), ln_g, ln_b), h, w) for s in segments]

    wb_m = window_partition(norm[1], cfg.window, shift)
    mask = attention_mask(wb_m.grid_h, wb_m.grid_w, cfg.window, shift, dtype=np.float64)
    attended = sw_msa(
        wb_m,
        params[f"{prefix}.attn.qkv.w"],
        params[f"{prefix}.attn.qkv.b"],
        params[f"{prefix}.attn.proj.w"],
        params[f"{prefix}.attn.proj.b"],
        params[f"{prefix}.attn.bias_table"],
        cfg.n_heads,
        mask=mask,
    )
    y_m = add(window_reverse(attended), x_m)

    if cfg.use_tsa:
        wb_l = window_partition(norm[0], cfg.window, shift)
        wb_r = window_partition(norm[2], cfg.window, shift)
        cross = tsa(
            wb_l.tokens,
            wb_m.tokens,
            wb_r.tokens,
            params[f"{prefix}.tsa.pl"],
            params[f"{prefix}.tsa.pm"],
            params[f"{prefix}.tsa.pr"],
            params[f"{prefix}.tsa.proj.w"],
            params[f"{prefix}.tsa.proj.b"],
        )
        y_m = add(y_m, mul(window_reverse(wb_m.with_tokens(cross)), cfg.beta))

    tokens = to_tokens(y_m)
    normed = layer_norm(tokens, params[f"{prefix}.ln2.g"], params[f"{prefix}.ln2.b"])
    if cfg.mlp_form == "prenorm":
        tokens = add(_mlp(normed, params, f"{prefix}.mlp"), tokens)
    else:  # literal printed form: MLP(LN(y) + y), no outer residual
        tokens = _mlp(add(normed, tokens), params, f"{prefix}.mlp")
    y_m = to_grid(tokens, h, w)

    stack = [reshape(t, (1, c, h, w)) for t in (x_l, y_m, x_r)]
    return concat(stack, axis=0)


def rssb_forward(x: Tensor, cfg: ModelConfig, params, prefix: str) -> Tensor:
    """Attention blocks with alternating shift, trailing conv, residual."""
    _, c, h, w = x.shape
    y = x
    for k in range(cfg.n_sab_per_rssb):
        shift = 0 if k % 2 == 0 else cfg.shift
        y = sab_forward(y, cfg, params, f"{prefix}.sab{k}", shift)
    merged = reshape(y, (3 * c, h, w))
    merged = conv2d(merged, params[f"{prefix}.conv.w"], params[f"{prefix}.conv.b"], padding=1)
    out = add(merged, reshape(x, (3 * c, h, w)))
    return reshape(out, (3, c, h, w))


def _pixel_shuffle(x: Tensor, p: int, h: int, w: int) -> Tensor:
    """(p*p, h, w) -> (h*p, w*p) sub-pixel upsample."""
    if p == 1:
        return reshape(x, (h, w))
    x = reshape(x, (p, p, h, w))
    x = transpose(x, (2, 0, 3, 1))  # (h, p, w, p)
    return reshape(x, (h * p, w * p))


def model_forward(stream: SpikeStream, cfg: ModelConfig, params) -> tuple[Tensor, Tensor, Tensor]:
    """Raw (unclamped) per-segment reconstructions of shape (H, W)."""
    f_l, f_m, f_r = extract_spike_features(stream, cfg, params)
    c, h, w = f_l.shape
    f_s = concat([reshape(f, (1, c, h, w)) for f in (f_l, f_m, f_r)], axis=0)
    x = f_s
    for r in range(cfg.n_rssb):
        x = rssb_forward(x, cfg, params, f"rssb{r}")
    fused = add(x, f_s)

    outputs = []
    for i, segment in enumerate(SEGMENTS):
        feat = reshape(slice_axis(fused, 0, i, i + 1), (c, h, w))
        hidden = gelu(
            conv2d(feat, params[f"head.{segment}.conv1.w"], params[f"head.{segment}.conv1.b"], padding=1)
        )
        img = conv2d(
            hidden, params[f"head.{segment}.conv2.w"], params[f"head.{segment}.conv2.b"], padding=1
        )
        outputs.append(_pixel_shuffle(img, cfg.patch_size, h, w))
    return tuple(outputs)


def model_loss(
    preds: tuple[Tensor, Tensor, Tensor],
    gts: tuple[np.ndarray, np.ndarray, np.ndarray],
    lam: float,
) -> Tensor:
    """lam * (|I_l - G_l|_1 + |I_r - G_r|_1) + |I_m - G_m|_1, mean-reduced."""
    if lam < 0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    targets = [Tensor(np.asarray(g), dtype=preds[0].dtype) for g in gts]
    adjacent = add(l1_loss(preds[0], targets[0]), l1_loss(preds[2], targets[2]))
    return add(mul(adjacent, lam), l1_loss(preds[1], targets[1]))


def reconstruct(stream: SpikeStream, cfg: ModelConfig, params) -> tuple[ReconFrame, ReconFrame, ReconFrame]:
    """Inference path: forward pass with outputs clamped to [0, 1]."""
    with no_grad():
        preds = model_forward(stream, cfg, params)
    return tuple(ReconFrame(np.clip(p.data.astype(np.float64), 0.0, 1.0)) for p in preds)
