"""Parameter initialization.

Attention and MLP weights draw from a zero-mean normal with std 0.02,
convolution weights are fan-in scaled (He), biases start at zero, the
relative position bias table starts at zero, and layer-norm gains at
one. The draw order is fixed, so a (config, dtype) pair always yields
the same parameter set; ablation flags do not change it.
"""

from __future__ import annotations

import numpy as np

from ..numerics import Tensor
from .config import ModelConfig

ATTN_STD = 0.02


def relative_position_index(m: int) -> np.ndarray:
    """(M^2, M^2) lookup into the (2M-1)^2 relative position bias table."""
    coords = np.stack(np.meshgrid(np.arange(m), np.arange(m), indexing="ij"))
    flat = coords.reshape(2, -1)
    rel = flat[:, :, None] - flat[:, None, :]
    rel = rel.transpose(1, 2, 0) + (m - 1)
    return rel[:, :, 0] * (2 * m - 1) + rel[:, :, 1]


class ParamBuilder:
    def __init__(self, seed: int, dtype):
        self.rng = np.random.default_rng(seed)
        self.dtype = dtype
        self.params: dict[str, Tensor] = {}

    def _add(self, name: str, data: np.ndarray) -> None:
        self.params[name] = Tensor(data.astype(self.dtype), requires_grad=True)

    def normal(self, name: str, shape, std: float = ATTN_STD) -> None:
        self._add(name, self.rng.normal(0.0, std, size=shape))

    def conv(self, name: str, c_out: int, c_in: int, k: int) -> None:
        std = np.sqrt(2.0 / (c_in * k * k))
        self._add(f"{name}.w", self.rng.normal(0.0, std, size=(c_out, c_in, k, k)))
        self._add(f"{name}.b", np.zeros(c_out))

    def linear(self, name: str, d_in: int, d_out: int, bias: bool = True) -> None:
        self.normal(f"{name}.w", (d_in, d_out))
        if bias:
            self._add(f"{name}.b", np.zeros(d_out))

    def layer_norm(self, name: str, dim: int) -> None:
        self._add(f"{name}.g", np.ones(dim))
        self._add(f"{name}.b", np.zeros(dim))

    def zeros(self, name: str, shape) -> None:
        self._add(name, np.zeros(shape))


def init_parameters(cfg: ModelConfig, dtype=np.float32) -> dict[str, Tensor]:
    b = ParamBuilder(cfg.seed, dtype)
    c, m = cfg.channels, cfg.window

    for segment, t_seg in (("left", cfg.t_left), ("mid", cfg.t_mid), ("right", cfg.t_right)):
        b.conv(f"feat.{segment}.conv1", c, t_seg, 3)
        b.conv(f"feat.{segment}.conv2", c, c, 3)

    for r in range(cfg.n_rssb):
        for k in range(cfg.n_sab_per_rssb):
            p = f"rssb{r}.sab{k}"
            b.layer_norm(f"{p}.ln1", c)
            b.linear(f"{p}.attn.qkv", c, 3 * c)
            b.linear(f"{p}.attn.proj", c, c)
            b.zeros(f"{p}.attn.bias_table", ((2 * m - 1) ** 2, cfg.n_heads))
            b.normal(f"{p}.tsa.pl", (c, c))
            b.normal(f"{p}.tsa.pm", (c, c))
            b.normal(f"{p}.tsa.pr", (c, c))
            b.linear(f"{p}.tsa.proj", c, c)
            b.layer_norm(f"{p}.ln2", c)
            b.linear(f"{p}.mlp.fc1", c, cfg.mlp_ratio * c)
            b.linear(f"{p}.mlp.fc2", cfg.mlp_ratio * c, c)
        b.conv(f"rssb{r}.conv", 3 * c, 3 * c, 3)

    up = cfg.patch_size * cfg.patch_size
    for segment in ("left", "mid", "right"):
        b.conv(f"head.{segment}.conv1", c, c, 3)
        b.conv(f"head.{segment}.conv2", up, c, 3)

    return b.params


def parameter_count(params: dict[str, Tensor]) -> int:
    return sum(p.size for p in params.values())
