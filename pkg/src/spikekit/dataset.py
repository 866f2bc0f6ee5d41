"""Paired spike-stream / ground-truth dataset construction.

Each sample is a simulated stream covering t_left + t_mid + t_right
consecutive ticks, paired with the luminance frames at the temporal
midpoint of each segment (index start + (len - 1) // 2). Sources are
tiled into non-overlapping temporal chunks; spatial crops come from a
seeded generator, so a (sources, crop, windows, seed) tuple always
rebuilds the identical sample list.

On disk a sample is one ``.spks`` file plus three graymap ground
truths; a manifest lists one sample per line as tab-separated fields:

    stream_path  gt_left  gt_mid  gt_right  source_id  t_start  x  y
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .codec import SpikeStream, load_spks, save_spks
from .errors import InsufficientFramesError
from .pgm import read_pgm, write_pgm
from .simulate import LuminanceSequence, SensorParams, simulate


@dataclass(frozen=True)
class Provenance:
    source: str
    t_start: int
    x: int
    y: int


@dataclass(frozen=True)
class DatasetSample:
    stream: SpikeStream
    gt_left: np.ndarray = field(repr=False)
    gt_mid: np.ndarray = field(repr=False)
    gt_right: np.ndarray = field(repr=False)
    provenance: Provenance = Provenance("unknown", 0, 0, 0)

    def __post_init__(self):
        shape = (self.stream.height, self.stream.width)
        for name in ("gt_left", "gt_mid", "gt_right"):
            gt = np.asarray(getattr(self, name), dtype=np.float64)
            if gt.shape != shape:
                raise ValueError(f"{name} shape {gt.shape} does not match stream {shape}")
            object.__setattr__(self, name, gt)

    @property
    def gts(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.gt_left, self.gt_mid, self.gt_right)


def segment_midpoints(windows: tuple[int, int, int]) -> tuple[int, int, int]:
    """Ground-truth tick of each segment within a stacked sample."""
    t_l, t_m, t_r = windows
    return (
        (t_l - 1) // 2,
        t_l + (t_m - 1) // 2,
        t_l + t_m + (t_r - 1) // 2,
    )


def build_dataset(
    sources: Sequence[LuminanceSequence],
    crop: Optional[tuple[int, int]] = None,
    windows: tuple[int, int, int] = (28, 41, 28),
    params: SensorParams = SensorParams(),
    seed: int = 0,
    count: Optional[int] = None,
    source_ids: Optional[Sequence[str]] = None,
) -> list[DatasetSample]:
    """Cut sources into samples: crop (seeded), simulate, attach GTs."""
    if not sources:
        raise ValueError("no source sequences given")
    if any(w < 1 for w in windows):
        raise ValueError(f"window lengths must be >= 1, got {windows}")
    if source_ids is None:
        source_ids = [f"source{k}" for k in range(len(sources))]
    t_total = sum(windows)
    for sid, src in zip(source_ids, sources):
        if src.n_frames < t_total:
            raise InsufficientFramesError(
                f"{sid}: windows {windows[0]}/{windows[1]}/{windows[2]} require "
                f"{t_total} frames, source has {src.n_frames}"
            )
    rng = np.random.default_rng(seed)
    mid_l, mid_m, mid_r = segment_midpoints(windows)
    samples: list[DatasetSample] = []
    for sid, src in zip(source_ids, sources):
        cw, ch = crop if crop is not None else (src.width, src.height)
        if cw > src.width or ch > src.height:
            raise ValueError(f"{sid}: crop {cw}x{ch} exceeds source {src.width}x{src.height}")
        for t_start in range(0, src.n_frames - t_total + 1, t_total):
            x = int(rng.integers(0, src.width - cw + 1))
            y = int(rng.integers(0, src.height - ch + 1))
            piece = src.temporal_slice(t_start, t_start + t_total).crop(x, y, cw, ch)
            stream = simulate(piece, params)
            samples.append(
                DatasetSample(
                    stream=stream,
                    gt_left=piece.frames[mid_l],
                    gt_mid=piece.frames[mid_m],
                    gt_right=piece.frames[mid_r],
                    provenance=Provenance(sid, t_start, x, y),
                )
            )
    if count is not None:
        if count > len(samples):
            raise InsufficientFramesError(
                f"requested {count} samples but sources only yield {len(samples)}"
            )
        samples = samples[:count]
    return samples


def save_samples(samples: Sequence[DatasetSample], out_dir) -> str:
    """Write sample files plus a manifest; returns the manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    lines = []
    for k, sample in enumerate(samples):
        stem = f"sample_{k:04d}"
        paths = {
            "stream": f"{stem}.spks",
            "gt_left": f"{stem}_gt_left.pgm",
            "gt_mid": f"{stem}_gt_mid.pgm",
            "gt_right": f"{stem}_gt_right.pgm",
        }
        save_spks(sample.stream, os.path.join(out_dir, paths["stream"]))
        write_pgm(sample.gt_left, os.path.join(out_dir, paths["gt_left"]))
        write_pgm(sample.gt_mid, os.path.join(out_dir, paths["gt_mid"]))
        write_pgm(sample.gt_right, os.path.join(out_dir, paths["gt_right"]))
        p = sample.provenance
        lines.append(
            "\t".join(
                [
                    paths["stream"],
                    paths["gt_left"],
                    paths["gt_mid"],
                    paths["gt_right"],
                    p.source,
                    str(p.t_start),
                    str(p.x),
                    str(p.y),
                ]
            )
        )
    manifest = os.path.join(out_dir, "manifest.txt")
    with open(manifest, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + ("\n" if lines else ""))
    return manifest


def load_manifest(manifest_path) -> list[DatasetSample]:
    """Load every sample listed in a manifest (paths relative to it)."""
    base = os.path.dirname(os.path.abspath(manifest_path))
    samples = []
    with open(manifest_path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 8:
                raise ValueError(f"{manifest_path}:{line_no}: expected 8 tab-separated fields")
            stream = load_spks(os.path.join(base, fields[0]))
            gts = [read_pgm(os.path.join(base, p)) for p in fields[1:4]]
            samples.append(
                DatasetSample(
                    stream=stream,
                    gt_left=gts[0],
                    gt_mid=gts[1],
                    gt_right=gts[2],
                    provenance=Provenance(fields[4], int(fields[5]), int(fields[6]), int(fields[7])),
                )
            )
    return samples
