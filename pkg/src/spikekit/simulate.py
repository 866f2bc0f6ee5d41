"""Integrate-and-fire spike camera simulator.

Each pixel accumulates charge ``A += alpha * I * frame_duration`` per
tick; when A reaches the threshold theta the pixel emits a 1 and theta
is subtracted (the sub-threshold residual is kept, so a constant input
of intensity I fires at rate alpha*I*T/theta). At most one spike is
emitted per tick; if exotic parameters push A past 2*theta the surplus
simply carries into the next tick.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .codec import SpikeStream


@dataclass(frozen=True)
class LuminanceSequence:
    """Normalized real-valued frames in [0, 1] driving the simulator."""

    frames: np.ndarray = field(repr=False)  # float64, shape (n_frames, height, width)
    frame_duration: float = 1.0

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 3 or frames.shape[0] < 1:
            raise ValueError(f"expected (n_frames, h, w) with n_frames >= 1, got {frames.shape}")
        if frames.min() < 0.0 or frames.max() > 1.0:
            raise ValueError("luminance values must lie in [0, 1]")
        if self.frame_duration <= 0:
            raise ValueError(f"frame_duration must be positive, got {self.frame_duration}")
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    def crop(self, x: int, y: int, w: int, h: int) -> "LuminanceSequence":
        if x < 0 or y < 0 or x + w > self.width or y + h > self.height:
            raise ValueError(f"crop {w}x{h}+{x}+{y} exceeds {self.width}x{self.height}")
        return LuminanceSequence(self.frames[:, y : y + h, x : x + w].copy(), self.frame_duration)

    def temporal_slice(self, start: int, stop: int) -> "LuminanceSequence":
        if not (0 <= start < stop <= self.n_frames):
            raise ValueError(f"slice [{start}, {stop}) out of range for {self.n_frames} frames")
        return LuminanceSequence(self.frames[start:stop].copy(), self.frame_duration)


@dataclass(frozen=True)
class SensorParams:
    """Photoelectric rate, firing threshold, and accumulator start state.

    initial_charge is either a uniform starting value in [0, theta) or
    the string "random" for a seeded per-pixel uniform draw.
    """

    alpha: float = 1.0
    theta: float = 2.0
    initial_charge: Union[float, str] = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.theta <= 0:
            raise ValueError(f"theta must be positive, got {self.theta}")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if isinstance(self.initial_charge, str):
            if self.initial_charge != "random":
                raise ValueError(f"initial_charge must be a number or 'random', got {self.initial_charge!r}")
        elif not 0.0 <= float(self.initial_charge) < self.theta:
            raise ValueError(
                f"initial_charge must lie in [0, theta={self.theta}), got {self.initial_charge}"
            )

    def starting_charge(self, height: int, width: int) -> np.ndarray:
        if self.initial_charge == "random":
            rng = np.random.default_rng(self.seed)
            return rng.uniform(0.0, self.theta, size=(height, width))
        return np.full((height, width), float(self.initial_charge))


def simulate_with_residual(lum: LuminanceSequence, params: SensorParams):
    """Run the sensor; return the stream and the final per-pixel charge."""
    charge = params.starting_charge(lum.height, lum.width)
    gain = params.alpha * lum.frame_duration
    bits = np.empty((lum.n_frames, lum.height, lum.width), dtype=bool)
    for t in range(lum.n_frames):
        charge += gain * lum.frames[t]
        fired = charge >= params.theta
        charge[fired] -= params.theta
        bits[t] = fired
    stream = SpikeStream.from_dense(bits, tick_duration=lum.frame_duration)
    return stream, charge


def simulate(lum: LuminanceSequence, params: SensorParams) -> SpikeStream:
    return simulate_with_residual(lum, params)[0]


def spike_rate(stream: SpikeStream, i: int, j: int) -> float:
    """Spike count at pixel (i, j) divided by the stream length."""
    if not (0 <= i < stream.height and 0 <= j < stream.width):
        raise IndexError(f"pixel ({i}, {j}) out of range for {stream.height}x{stream.width}")
    dense = stream.to_dense()
    return float(dense[:, i, j].sum()) / stream.t_len


def synthetic_scene(
    kind: str, width: int, height: int, n_frames: int, speed: float = 1.0
) -> LuminanceSequence:
    """Deterministic analytic test scenes.

    gradient    pixel (i, j) = j / (width - 1), constant in time.
    moving_bar  bright vertical bar on a dark field, translating by
                floor(t * speed) px per frame with wraparound.
    checker     pixel checkerboard of values 0.25 / 0.75, translating
                horizontally by floor(t * speed).
    """
    if width < 1 or height < 1 or n_frames < 1:
        raise ValueError(f"scene dims must be >= 1, got {width}x{height}x{n_frames}")
    frames = np.zeros((n_frames, height, width))
    if kind == "gradient":
        if width < 2:
            raise ValueError("gradient scene needs width >= 2")
        frames[:] = np.arange(width) / (width - 1)
    elif kind == "moving_bar":
        background, bar_value = 0.1, 1.0
        bar_width = max(1, width // 8)
        frames[:] = background
        cols = np.arange(width)
        for t in range(n_frames):
            start = int(np.floor(t * speed)) % width
            inside = (cols - start) % width < bar_width
            frames[t, :, inside] = bar_value
    elif kind == "checker":
        dark, light = 0.25, 0.75
        i = np.arange(height)[:, None]
        j = np.arange(width)[None, :]
        for t in range(n_frames):
            shift = int(np.floor(t * speed))
            frames[t] = np.where((i + j + shift) % 2 == 0, light, dark)
    else:
        raise ValueError(f"unknown scene kind {kind!r} (gradient|moving_bar|checker)")
    return LuminanceSequence(frames)
