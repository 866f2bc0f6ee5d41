"""Adam optimizer with bias correction and a step-decay schedule."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .numerics import Tensor


@dataclass
class AdamState:
    """Per-parameter first and second moments plus the step counter."""

    m: dict = field(repr=False)
    v: dict = field(repr=False)
    step: int = 0
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_adam(params: dict[str, Tensor], lr: float = 1e-4) -> AdamState:
    return AdamState(
        m={k: np.zeros_like(p.data) for k, p in params.items()},
        v={k: np.zeros_like(p.data) for k, p in params.items()},
        lr=lr,
    )


def zero_grads(params: dict[str, Tensor]) -> None:
    for p in params.values():
        p.zero_grad()


def adam_step(params: dict[str, Tensor], state: AdamState) -> None:
    """In-place update: p -= lr * m_hat / (sqrt(v_hat) + eps).

    Zero gradients leave parameters untouched; a missing gradient is a
    contract violation (the caller forgot backward, or excluded the
    parameter from the graph).
    """
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    for name in sorted(params):
        p = params[name]
        if p.grad is None:
            raise ContractError(f"parameter {name!r} has no gradient; run backward first")
        g = p.grad
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        update = (m / bc1) / (np.sqrt(v / bc2) + state.eps)
        p.data -= state.lr * update


def lr_at(epoch: int, lr0: float, decay_every: int) -> float:
    """lr0 halved once per completed decay interval."""
    if epoch < 0:
        raise ValueError(f"epoch must be >= 0, got {epoch}")
    if decay_every < 1:
        raise ValueError(f"decay_every must be >= 1, got {decay_every}")
    return lr0 * 0.5 ** (epoch // decay_every)
