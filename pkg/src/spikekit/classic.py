"""Classic spike-stream reconstruction estimators.

Both estimators invert the sensor law: a pixel of constant intensity I
fires every theta / (alpha * T * I) ticks, so

    TFI   I ~= theta / (alpha * T * isi)   from the inter-spike interval
              bracketing the reference tick,
    TFP   I ~= c * theta / (alpha * T * w) from the spike count c in a
              centered window of w ticks.

Windows are centered on the reference tick and clipped to the stream
(renormalizing by the clipped length); pixels whose bracketing interval
does not exist fall back to the nearest adjacent spike pair, and pixels
with fewer than two spikes in the whole stream yield 0. Estimates clamp
to [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .codec import SpikeStream
from .simulate import SensorParams


@dataclass(frozen=True)
class ReconFrame:
    """Real intensity estimates clamped to [0, 1]."""

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"expected (h, w) values, got shape {values.shape}")
        if not np.all(np.isfinite(values)) or values.min() < 0.0 or values.max() > 1.0:
            raise ValueError("reconstruction values must be finite and in [0, 1]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def _check_t_ref(stream: SpikeStream, t_ref: int) -> None:
    if not 0 <= t_ref < stream.t_len:
        raise IndexError(f"t_ref {t_ref} out of range for stream of {stream.t_len} ticks")


def tfi(stream: SpikeStream, t_ref: int, params: SensorParams) -> ReconFrame:
    """Texture from the inter-spike interval around tick t_ref."""
    _check_t_ref(stream, t_ref)
    dense = stream.to_dense()
    t_len = stream.t_len
    counts = dense.sum(axis=0)

    # Latest spike at or before t_ref, and the next strictly after it.
    before = dense[: t_ref + 1]
    has_prev = before.any(axis=0)
    t_prev = t_ref - np.argmax(before[::-1], axis=0)
    after = dense[t_ref + 1 :]
    if after.shape[0]:
        has_next = after.any(axis=0)
        t_next = t_ref + 1 + np.argmax(after, axis=0)
    else:
        has_next = np.zeros_like(has_prev)
        t_next = np.zeros_like(t_prev)

    # Fallback pairs: the first two spikes (t_ref before all spikes) and
    # the last two (t_ref after all spikes).
    first = np.argmax(dense, axis=0)
    rest = dense.copy()
    np.put_along_axis(rest, first[None], False, axis=0)
    second = np.argmax(rest, axis=0)
    last = t_len - 1 - np.argmax(dense[::-1], axis=0)
    rest_rev = dense.copy()
    np.put_along_axis(rest_rev, last[None], False, axis=0)
    second_last = t_len - 1 - np.argmax(rest_rev[::-1], axis=0)

    isi = np.where(
        has_prev & has_next,
        t_next - t_prev,
        np.where(has_prev, last - second_last, second - first),
    ).astype(np.float64)
    tick = stream.tick_duration
    with np.errstate(divide="ignore"):
        estimate = params.theta / (params.alpha * tick * isi)
    estimate = np.where(counts >= 2, estimate, 0.0)
    return ReconFrame(np.clip(estimate, 0.0, 1.0))


def tfp(stream: SpikeStream, t_ref: int, window: int, params: SensorParams) -> ReconFrame:
    """Texture from spike counts in a centered window of `window` ticks."""
    _check_t_ref(stream, t_ref)
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    lo = max(0, t_ref - window // 2)
    hi = min(stream.t_len, t_ref + (window + 1) // 2)
    w_eff = hi - lo
    counts = stream.to_dense()[lo:hi].sum(axis=0).astype(np.float64)
    estimate = counts * params.theta / (params.alpha * stream.tick_duration * w_eff)
    return ReconFrame(np.clip(estimate, 0.0, 1.0))
