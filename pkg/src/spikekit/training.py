"""Training loop, checkpoint lifecycle, and evaluation.

Training is bitwise reproducible for a fixed (seed, config, dataset):
parameters initialize from the model seed, each epoch's sample order
comes from a generator seeded with (run seed, epoch), and the loop holds
no other random state. Resuming from a checkpoint written at an epoch
boundary therefore replays the un-resumed run exactly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .classic import tfi, tfp
from .dataset import DatasetSample, segment_midpoints
from .errors import ConfigMismatchError, NumericalError
from .metrics import psnr, ssim
from .numerics import Tensor, backward, mul, add
from .optim import AdamState, adam_step, init_adam, lr_at, zero_grads
from .report import (
    format_metrics_table,
    plot_loss_curve,
    plot_reconstruction,
    render_eval_report,
)
from .simulate import SensorParams
from .swinsf import (
    Checkpoint,
    ModelConfig,
    init_parameters,
    load_checkpoint,
    model_forward,
    model_loss,
    reconstruct,
    save_checkpoint,
)

SEGMENTS = ("left", "mid", "right")


@dataclass(frozen=True)
class TrainRunConfig:
    """Desk-scale defaults; the full-scale protocol (900 epochs, decay
    every 300, batch 4) remains selectable."""

    epochs: int = 300
    lr0: float = 1e-4
    decay_every: int = 100
    batch_size: int = 1
    seed: int = 0
    checkpoint_every: int = 100
    manifest: Optional[str] = None

    def __post_init__(self):
        if self.epochs < 1 or self.decay_every < 1 or self.batch_size < 1:
            raise ValueError("epochs, decay_every and batch_size must be >= 1")
        if self.checkpoint_every < 1:
            raise ValueError("checkpoint_every must be >= 1")


@dataclass
class TrainResult:
    config: ModelConfig
    params: dict = field(repr=False)
    opt_state: AdamState = field(repr=False)
    history: list = field(default_factory=list)  # (epoch, mean_loss, lr)
    eval_rows: list = field(default_factory=list)
    checkpoint_path: Optional[str] = None
    log_lines: list = field(default_factory=list)


def _sample_loss(sample: DatasetSample, cfg: ModelConfig, params) -> Tensor:
    preds = model_forward(sample.stream, cfg, params)
    return model_loss(preds, sample.gts, cfg.lam)


def train(
    model_cfg: ModelConfig,
    run_cfg: TrainRunConfig,
    samples: Sequence[DatasetSample],
    holdout: Optional[Sequence[DatasetSample]] = None,
    out_dir: Optional[str] = None,
    resume_from: Optional[str] = None,
    log_fn: Optional[Callable[[str], None]] = None,
) -> TrainResult:
    """Optimize the network on `samples`; evaluate on `holdout` (or the
    training set when no holdout is given)."""
    if not samples:
        raise ValueError("training dataset is empty")
    for s in samples:
        if s.stream.t_len != model_cfg.t_total:
            raise ConfigMismatchError(
                f"sample stream has {s.stream.t_len} ticks but the model expects {model_cfg.t_total}"
            )

    start_epoch = 0
    if resume_from is not None:
        ck = load_checkpoint(resume_from)
        if ck.config != model_cfg:
            raise ConfigMismatchError(
                f"checkpoint fingerprint {ck.config.fingerprint()[:12]} does not match "
                f"requested config {model_cfg.fingerprint()[:12]}"
            )
        if ck.adam_m is None or ck.adam_v is None:
            raise ValueError(f"{resume_from} carries no optimizer state; cannot resume")
        params = ck.param_tensors(np.float32)
        state = init_adam(params, lr=run_cfg.lr0)
        state.m = {k: v.copy() for k, v in ck.adam_m.items()}
        state.v = {k: v.copy() for k, v in ck.adam_v.items()}
        state.step = ck.step
        start_epoch = ck.epoch
    else:
        params = init_parameters(model_cfg, dtype=np.float32)
        state = init_adam(params, lr=run_cfg.lr0)

    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    result = TrainResult(config=model_cfg, params=params, opt_state=state)

    def log(line: str) -> None:
        result.log_lines.append(line)
        if log_fn is not None:
            log_fn(line)

    n = len(samples)
    for epoch in range(start_epoch, run_cfg.epochs):
        state.lr = lr_at(epoch, run_cfg.lr0, run_cfg.decay_every)
        order = np.random.default_rng((run_cfg.seed, epoch)).permutation(n)
        epoch_losses = []
        for lo in range(0, n, run_cfg.batch_size):
            batch = [samples[i] for i in order[lo : lo + run_cfg.batch_size]]
            zero_grads(params)
            loss = _sample_loss(batch[0], model_cfg, params)
            for extra in batch[1:]:
                loss = add(loss, _sample_loss(extra, model_cfg, params))
            if len(batch) > 1:
                loss = mul(loss, 1.0 / len(batch))
            value = loss.item()
            if not np.isfinite(value):
                raise NumericalError(f"non-finite loss {value} at epoch {epoch}")
            backward(loss)
            adam_step(params, state)
            epoch_losses.append(value)
        mean_loss = float(np.mean(epoch_losses))
        result.history.append((epoch, mean_loss, state.lr))
        log(f"epoch={epoch} mean_loss={mean_loss:.8f} lr={state.lr:.2e}")
        if out_dir and (epoch + 1) % run_cfg.checkpoint_every == 0 and (epoch + 1) < run_cfg.epochs:
            path = os.path.join(out_dir, f"ckpt_epoch{epoch + 1:05d}.swsf")
            _save_training_checkpoint(path, model_cfg, params, state, epoch + 1)
            log(f"checkpoint={path}")

    eval_set = holdout if holdout else samples
    tag = "holdout" if holdout else "train-set"
    result.eval_rows = evaluate_model(model_cfg, params, eval_set)
    log(f"final evaluation on {tag} ({len(eval_set)} samples):")
    for line in format_metrics_table(result.eval_rows).splitlines():
        log(line)

    if out_dir:
        final = os.path.join(out_dir, "ckpt_final.swsf")
        _save_training_checkpoint(final, model_cfg, params, state, run_cfg.epochs)
        result.checkpoint_path = final
        with open(os.path.join(out_dir, "train_log.txt"), "w", encoding="utf-8") as f:
            f.write("\n".join(result.log_lines) + "\n")
        plot_loss_curve(result.history, os.path.join(out_dir, "loss_curve.png"))
        render_eval_report(result.eval_rows, out_dir, prefix="final_eval")
    return result


def _save_training_checkpoint(path, cfg, params, state: AdamState, epoch: int) -> None:
    save_checkpoint(
        path, cfg, params, adam_m=state.m, adam_v=state.v, step=state.step, epoch=epoch
    )


def _metric_row(sample_id, frames, gts) -> dict:
    row = {"sample": sample_id}
    for segment, frame, gt in zip(SEGMENTS, frames, gts):
        row[f"psnr_{segment}"] = psnr(frame, gt)
        row[f"ssim_{segment}"] = ssim(frame, gt)
    return row


def _append_mean_row(rows: list[dict]) -> list[dict]:
    if rows:
        mean = {"sample": "mean"}
        for key in rows[0]:
            if key != "sample":
                mean[key] = float(np.mean([r[key] for r in rows]))
        rows.append(mean)
    return rows


def evaluate_model(cfg: ModelConfig, params, samples: Sequence[DatasetSample]) -> list[dict]:
    """Per-sample and mean PSNR/SSIM of the network on paired samples."""
    if isinstance(next(iter(params.values())), np.ndarray):
        params = {k: Tensor(v, requires_grad=False) for k, v in params.items()}
    rows = []
    for k, sample in enumerate(samples):
        if sample.stream.t_len != cfg.t_total:
            raise ConfigMismatchError(
                f"sample {k} has {sample.stream.t_len} ticks but the checkpoint expects {cfg.t_total}"
            )
        frames = reconstruct(sample.stream, cfg, params)
        rows.append(_metric_row(k, [f.values for f in frames], sample.gts))
    return _append_mean_row(rows)


def evaluate_checkpoint(ck: Checkpoint, samples: Sequence[DatasetSample]) -> list[dict]:
    return evaluate_model(ck.config, ck.params, samples)


def evaluate_classic(
    method: str,
    samples: Sequence[DatasetSample],
    sensor: SensorParams,
    windows: tuple[int, int, int],
    tfp_window: Optional[int] = None,
) -> list[dict]:
    """TFI/TFP baselines at each segment's ground-truth tick.

    The TFP window defaults to the enclosing segment's length.
    """
    if method not in ("tfi", "tfp"):
        raise ValueError(f"method must be 'tfi' or 'tfp', got {method!r}")
    t_total = sum(windows)
    t_refs = segment_midpoints(windows)
    rows = []
    for k, sample in enumerate(samples):
        if sample.stream.t_len != t_total:
            raise ConfigMismatchError(
                f"sample {k} has {sample.stream.t_len} ticks but windows {windows} sum to {t_total}"
            )
        frames = []
        for t_ref, seg_len in zip(t_refs, windows):
            if method == "tfi":
                frames.append(tfi(sample.stream, t_ref, sensor).values)
            else:
                frames.append(tfp(sample.stream, t_ref, tfp_window or seg_len, sensor).values)
        rows.append(_metric_row(k, frames, sample.gts))
    return _append_mean_row(rows)


def write_eval_outputs(
    rows: Sequence[dict],
    out_dir: str,
    samples: Optional[Sequence[DatasetSample]] = None,
    preview: Optional[tuple] = None,
) -> list[str]:
    """Render the delimited table and figures for an evaluation run."""
    files = render_eval_report(rows, out_dir)
    if preview is not None:
        path = os.path.join(out_dir, "eval_preview.png")
        plot_reconstruction(preview, path)
        files.append(path)
    return files
