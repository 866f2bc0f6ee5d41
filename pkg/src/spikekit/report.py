"""Report rendering: delimited metrics tables plus matplotlib figures.

Every writer targets a file path; nothing opens an interactive backend.
"""

from __future__ import annotations

import csv
import os
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

METRIC_COLUMNS = (
    "sample",
    "psnr_left",
    "psnr_mid",
    "psnr_right",
    "ssim_left",
    "ssim_mid",
    "ssim_right",
)


def write_metrics_csv(rows: Sequence[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=METRIC_COLUMNS)
        writer.writeheader()
        for row in rows:
            out = dict(row)
            for key in METRIC_COLUMNS[1:]:
                out[key] = f"{row[key]:.6f}"
            writer.writerow(out)


def format_metrics_table(rows: Sequence[dict]) -> str:
    header = f"{'sample':<12}" + "".join(f"{c:>11}" for c in METRIC_COLUMNS[1:])
    lines = [header, "-" * len(header)]
    for row in rows:
        lines.append(
            f"{str(row['sample']):<12}"
            + "".join(f"{row[c]:>11.4f}" for c in METRIC_COLUMNS[1:])
        )
    return "\n".join(lines)


def plot_loss_curve(history: Sequence[tuple[int, float, float]], path) -> None:
    """history rows are (epoch, mean_loss, lr)."""
    epochs = [h[0] for h in history]
    losses = [h[1] for h in history]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(epochs, losses, lw=1.2)
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean training loss")
    ax.set_yscale("log")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_metric_bars(rows: Sequence[dict], path) -> None:
    """Grouped per-sample PSNR bars with SSIM on a twin axis."""
    samples = [r for r in rows if r["sample"] != "mean"]
    if not samples:
        return
    idx = np.arange(len(samples))
    width = 0.27
    fig, ax = plt.subplots(figsize=(max(6.0, 0.8 * len(samples) + 3), 3.5))
    for k, segment in enumerate(("left", "mid", "right")):
        ax.bar(idx + (k - 1) * width, [r[f"psnr_{segment}"] for r in samples], width, label=segment)
    ax.set_xticks(idx)
    ax.set_xticklabels([str(r["sample"]) for r in samples], rotation=45, ha="right")
    ax.set_ylabel("PSNR (dB)")
    ax2 = ax.twinx()
    ax2.plot(idx, [r["ssim_mid"] for r in samples], "k.--", label="ssim (mid)")
    ax2.set_ylabel("SSIM")
    ax2.set_ylim(0.0, 1.05)
    ax.legend(loc="lower left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_reconstruction(
    panels: Sequence[tuple[str, np.ndarray]], path, suptitle: Optional[str] = None
) -> None:
    """Side-by-side grayscale panels (e.g. ground truth vs estimate)."""
    fig, axes = plt.subplots(1, len(panels), figsize=(2.6 * len(panels), 3))
    if len(panels) == 1:
        axes = [axes]
    for ax, (title, image) in zip(axes, panels):
        ax.imshow(image, cmap="gray", vmin=0.0, vmax=1.0, interpolation="nearest")
        ax.set_title(title, fontsize=9)
        ax.axis("off")
    if suptitle:
        fig.suptitle(suptitle, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_eval_report(rows: Sequence[dict], out_dir, prefix: str = "eval") -> list[str]:
    """CSV plus figures; returns the created file paths."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{prefix}_metrics.csv")
    write_metrics_csv(rows, csv_path)
    bars_path = os.path.join(out_dir, f"{prefix}_metrics.png")
    plot_metric_bars(rows, bars_path)
    return [csv_path, bars_path]
