"""Model configuration: every architectural and training-relevant knob."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass


@dataclass(frozen=True)
class ModelConfig:
    """Hyperparameters of the reconstruction network.

    Defaults are the desk-scale configuration; ``full_scale_250x400`` /
    ``full_scale_1000x1000`` give the full-scale presets.
    """

    channels: int = 16          # C, feature channels per temporal segment
    n_rssb: int = 2             # residual attention blocks
    n_sab_per_rssb: int = 6     # attention blocks inside each residual block
    window: int = 5             # M, spatial attention window
    n_heads: int = 2            # heads of the windowed self-attention
    patch_size: int = 1         # spatial stride of the first feature conv
    t_left: int = 7             # ticks of the left temporal segment
    t_mid: int = 11             # ticks of the middle temporal segment
    t_right: int = 7            # ticks of the right temporal segment
    beta: float = 0.1           # scale of the cross-frame attention branch
    lam: float = 0.1            # weight of the adjacent-frame loss terms
    mlp_ratio: int = 4
    mlp_form: str = "prenorm"   # "prenorm": MLP(LN(y)) + y; "literal": MLP(LN(y) + y)
    use_tsa: bool = True        # structurally remove the cross-frame branch when False
    seed: int = 0

    def __post_init__(self):
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if self.channels < 1 or self.channels % self.n_heads:
            raise ValueError(
                f"channels ({self.channels}) must be positive and divisible by "
                f"n_heads ({self.n_heads})"
            )
        if min(self.n_rssb, self.n_sab_per_rssb, self.patch_size, self.mlp_ratio) < 1:
            raise ValueError("depths, patch_size and mlp_ratio must be >= 1")
        if min(self.t_left, self.t_mid, self.t_right) < 1:
            raise ValueError("temporal windows must be >= 1")
        if self.beta < 0 or self.lam < 0:
            raise ValueError("beta and lam must be >= 0")
        if self.mlp_form not in ("prenorm", "literal"):
            raise ValueError(f"mlp_form must be 'prenorm' or 'literal', got {self.mlp_form!r}")

    @property
    def t_total(self) -> int:
        return self.t_left + self.t_mid + self.t_right

    @property
    def shift(self) -> int:
        return self.window // 2

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ModelConfig":
        return cls(**json.loads(text))

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()

    @classmethod
    def full_scale_250x400(cls) -> "ModelConfig":
        return cls(channels=96, n_heads=2, patch_size=1, t_left=28, t_mid=41, t_right=28)

    @classmethod
    def full_scale_1000x1000(cls) -> "ModelConfig":
        return cls(channels=64, n_heads=1, patch_size=4, t_left=28, t_mid=41, t_right=28)
