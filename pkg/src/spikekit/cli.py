"""Command-line surface.

Subcommands: simulate, reconstruct, build-dataset, train, eval, inspect.
Flags may come from a ``key = value`` config file (``--config``); values
given on the command line take precedence. Exit codes: 0 success,
1 usage error, 2 data/format error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .classic import tfi, tfp
from .codec import load_spks, read_raw_dat, save_spks
from .dataset import build_dataset, load_manifest, save_samples
from .errors import NumericalError, SpikeKitError
from .pgm import read_pgm, write_pgm
from .report import format_metrics_table
from .simulate import LuminanceSequence, SensorParams, simulate, synthetic_scene
from .swinsf import ModelConfig, load_checkpoint
from .training import (
    TrainRunConfig,
    evaluate_checkpoint,
    evaluate_classic,
    train,
    write_eval_outputs,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# Shared input helpers
# ---------------------------------------------------------------------------

def parse_scene_spec(spec: str) -> LuminanceSequence:
    """kind:WxHxN[:speed], e.g. moving_bar:32x32x64:1.5"""
    parts = spec.split(":")
    if len(parts) not in (2, 3):
        raise UsageError(f"bad synthetic spec {spec!r}, expected kind:WxHxN[:speed]")
    kind = parts[0]
    dims = parts[1].split("x")
    if len(dims) != 3:
        raise UsageError(f"bad dimensions in {spec!r}, expected WxHxN")
    try:
        w, h, n = (int(d) for d in dims)
        speed = float(parts[2]) if len(parts) == 3 else 1.0
    except ValueError as exc:
        raise UsageError(f"bad synthetic spec {spec!r}: {exc}") from None
    return synthetic_scene(kind, w, h, n, speed=speed)


def parse_windows(text: str) -> tuple[int, int, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise UsageError(f"bad windows {text!r}, expected l,m,r")
    try:
        windows = tuple(int(p) for p in parts)
    except ValueError:
        raise UsageError(f"bad windows {text!r}, expected three integers") from None
    return windows


def parse_size(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise UsageError(f"bad size {text!r}, expected WxH")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise UsageError(f"bad size {text!r}, expected integers") from None


def load_luminance_dir(path: str) -> LuminanceSequence:
    """A directory of graymap frames, ordered by filename."""
    names = sorted(n for n in os.listdir(path) if n.lower().endswith(".pgm"))
    if not names:
        raise SpikeKitError(f"{path}: no .pgm frames found")
    frames = np.stack([read_pgm(os.path.join(path, n)) for n in names])
    return LuminanceSequence(frames)


def load_config_file(path: str) -> dict[str, str]:
    """Line-oriented ``key = value`` pairs; '#' starts a comment."""
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise UsageError(f"{path}:{line_no}: expected 'key = value'")
            key, value = (part.strip() for part in stripped.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


def merge_config(args: argparse.Namespace, parser_defaults: dict) -> None:
    """Fill flags still at their parser default from the config file."""
    if not getattr(args, "config", None):
        return
    file_values = load_config_file(args.config)
    for key, raw in file_values.items():
        if not hasattr(args, key):
            raise UsageError(f"{args.config}: unknown config key {key!r}")
        if getattr(args, key) != parser_defaults.get(key):
            continue  # explicit command-line value wins
        default = parser_defaults.get(key)
        if isinstance(default, bool):
            value = raw.lower() in ("1", "true", "yes", "on")
        elif isinstance(default, int):
            value = int(raw)
        elif isinstance(default, float):
            value = float(raw)
        else:
            value = raw
        setattr(args, key, value)


def sensor_from_args(args) -> SensorParams:
    initial = args.initial_charge
    if initial != "random":
        initial = float(initial)
    return SensorParams(alpha=args.alpha, theta=args.theta, initial_charge=initial, seed=args.seed)


def _add_sensor_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--theta", type=float, default=2.0, help="firing threshold")
    p.add_argument("--alpha", type=float, default=1.0, help="photoelectric rate")
    p.add_argument(
        "--initial-charge", default="0.0",
        help="starting accumulator value in [0, theta), or 'random'",
    )
    p.add_argument("--seed", type=int, default=0)


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--channels", type=int, default=16)
    p.add_argument("--n-rssb", type=int, default=2)
    p.add_argument("--n-sab", type=int, default=6)
    p.add_argument("--window-m", type=int, default=5)
    p.add_argument("--heads", type=int, default=2)
    p.add_argument("--patch-size", type=int, default=1)
    p.add_argument("--t-windows", default="7,11,7", help="temporal windows l,m,r")
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--lambda", dest="lam", type=float, default=0.1)
    p.add_argument("--mlp-form", choices=("prenorm", "literal"), default="prenorm")
    p.add_argument("--model-seed", type=int, default=0)


def model_config_from_args(args) -> ModelConfig:
    t_l, t_m, t_r = parse_windows(args.t_windows)
    return ModelConfig(
        channels=args.channels,
        n_rssb=args.n_rssb,
        n_sab_per_rssb=args.n_sab,
        window=args.window_m,
        n_heads=args.heads,
        patch_size=args.patch_size,
        t_left=t_l,
        t_mid=t_m,
        t_right=t_r,
        beta=args.beta,
        lam=args.lam,
        mlp_form=args.mlp_form,
        seed=args.model_seed,
    )


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    if args.synthetic:
        lum = parse_scene_spec(args.synthetic)
    elif args.input:
        lum = load_luminance_dir(args.input)
    else:
        raise UsageError("simulate needs --input DIR or --synthetic SPEC")
    params = sensor_from_args(args)
    stream = simulate(lum, params)
    save_spks(stream, args.out)
    print(f"wrote {args.out}: {stream.width}x{stream.height}x{stream.t_len}")
    print(f"mean spike rate: {stream.mean_rate():.6f}")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    if args.raw_size:
        w, h = parse_size(args.raw_size)
        with open(args.stream, "rb") as f:
            stream = read_raw_dat(f, width=w, height=h, bit_order=args.bit_order)
    else:
        stream = load_spks(args.stream)
    t_ref = args.t_ref if args.t_ref is not None else stream.t_len // 2

    if args.method in ("tfi", "tfp"):
        params = sensor_from_args(args)
        if args.method == "tfi":
            frame = tfi(stream, t_ref, params)
        else:
            frame = tfp(stream, t_ref, args.window, params)
        write_pgm(frame.values, args.out)
        print(f"wrote {args.out} ({args.method}, t_ref={t_ref})")
        return EXIT_OK

    if not args.checkpoint:
        raise UsageError("--method swinsf needs --checkpoint")
    ck = load_checkpoint(args.checkpoint)
    from .numerics import Tensor
    from .swinsf import reconstruct as model_reconstruct

    params = {k: Tensor(v) for k, v in ck.params.items()}
    frames = model_reconstruct(stream, ck.config, params)
    stem, ext = os.path.splitext(args.out)
    ext = ext or ".pgm"
    for segment, frame in zip(("left", "mid", "right"), frames):
        path = f"{stem}_{segment}{ext}"
        write_pgm(frame.values, path)
        print(f"wrote {path}")
    return EXIT_OK


def cmd_build_dataset(args) -> int:
    sources: list[LuminanceSequence] = []
    ids: list[str] = []
    if args.source:
        entries = sorted(os.listdir(args.source))
        subdirs = [e for e in entries if os.path.isdir(os.path.join(args.source, e))]
        if subdirs:
            for name in subdirs:
                sources.append(load_luminance_dir(os.path.join(args.source, name)))
                ids.append(name)
        else:
            sources.append(load_luminance_dir(args.source))
            ids.append(os.path.basename(os.path.normpath(args.source)))
    for k, spec in enumerate(args.synthetic or []):
        sources.append(parse_scene_spec(spec))
        ids.append(f"synthetic{k}:{spec}")
    if not sources:
        raise UsageError("build-dataset needs --source DIR and/or --synthetic SPEC")

    crop = parse_size(args.crop) if args.crop else None
    windows = parse_windows(args.windows)
    samples = build_dataset(
        sources,
        crop=crop,
        windows=windows,
        params=sensor_from_args(args),
        seed=args.seed,
        count=args.count,
        source_ids=ids,
    )
    manifest = save_samples(samples, args.out)
    print(f"wrote {len(samples)} samples to {args.out}")
    print(f"manifest: {manifest}")
    return EXIT_OK


def cmd_train(args) -> int:
    if not args.manifest or not args.out_dir:
        raise UsageError("train needs --manifest and --out-dir (flags or config file)")
    model_cfg = model_config_from_args(args)
    run_cfg = TrainRunConfig(
        epochs=args.epochs,
        lr0=args.lr,
        decay_every=args.decay_every,
        batch_size=args.batch_size,
        seed=args.seed,
        checkpoint_every=args.checkpoint_every,
        manifest=args.manifest,
    )
    samples = load_manifest(args.manifest)
    holdout = None
    if args.holdout > 0:
        if args.holdout >= len(samples):
            raise UsageError(
                f"--holdout {args.holdout} leaves no training samples (dataset has {len(samples)})"
            )
        samples, holdout = samples[: -args.holdout], samples[-args.holdout :]
    result = train(
        model_cfg,
        run_cfg,
        samples,
        holdout=holdout,
        out_dir=args.out_dir,
        resume_from=args.resume,
        log_fn=print,
    )
    if result.checkpoint_path:
        print(f"final checkpoint: {result.checkpoint_path}")
    return EXIT_OK


def cmd_eval(args) -> int:
    if not args.manifest:
        raise UsageError("eval needs --manifest (flag or config file)")
    samples = load_manifest(args.manifest)
    if args.method == "swinsf":
        if not args.checkpoint:
            raise UsageError("eval --method swinsf needs --checkpoint")
        ck = load_checkpoint(args.checkpoint)
        rows = evaluate_checkpoint(ck, samples)
    else:
        rows = evaluate_classic(
            args.method,
            samples,
            sensor_from_args(args),
            parse_windows(args.windows),
            tfp_window=args.window,
        )
    print(format_metrics_table(rows))
    if args.out_dir:
        preview = None
        if samples:
            first = samples[0]
            if args.method == "swinsf":
                from .numerics import Tensor
                from .swinsf import reconstruct as model_reconstruct

                params = {k: Tensor(v) for k, v in ck.params.items()}
                mid = model_reconstruct(first.stream, ck.config, params)[1].values
            elif args.method == "tfi":
                mid = tfi(first.stream, first.stream.t_len // 2, sensor_from_args(args)).values
            else:
                mid = tfp(
                    first.stream,
                    first.stream.t_len // 2,
                    args.window or first.stream.t_len,
                    sensor_from_args(args),
                ).values
            preview = [("ground truth (mid)", first.gt_mid), (f"{args.method} (mid)", mid)]
        files = write_eval_outputs(rows, args.out_dir, preview=preview)
        for f in files:
            print(f"wrote {f}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    stream = load_spks(args.stream)
    dense = stream.to_dense()
    print(f"{args.stream}: {stream.width}x{stream.height}, {stream.t_len} frames")
    print(f"tick duration: {stream.tick_duration}")
    print(f"global spike density: {dense.mean():.6f}")
    per_frame = dense.mean(axis=(1, 2))
    for t, d in enumerate(per_frame):
        print(f"frame {t}: density {d:.6f}")
    if args.frame is not None:
        if not 0 <= args.frame < stream.t_len:
            raise SpikeKitError(f"--frame {args.frame} out of range [0, {stream.t_len})")
        print(f"frame {args.frame} bitmap:")
        for row in dense[args.frame]:
            print("".join("#" if v else "." for v in row))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser assembly
# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="spikekit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"spikekit {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("simulate", parents=[], help="simulate a spike stream", prog="spikekit simulate")
    p.add_argument("--input", help="directory of .pgm luminance frames")
    p.add_argument("--synthetic", help="scene spec kind:WxHxN[:speed]")
    p.add_argument("--out", required=True, help="output .spks path")
    _add_sensor_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct", help="reconstruct images from a stream", prog="spikekit reconstruct")
    p.add_argument("--method", choices=("tfi", "tfp", "swinsf"), required=True)
    p.add_argument("--stream", required=True, help=".spks file (or raw .dat with --raw-size)")
    p.add_argument("--raw-size", help="treat --stream as headerless raw WxH")
    p.add_argument("--bit-order", choices=("lsb", "msb"), default="lsb")
    p.add_argument("--t-ref", type=int, default=None, help="reference tick (default: middle)")
    p.add_argument("--window", type=int, default=32, help="tfp window length in ticks")
    p.add_argument("--checkpoint", help="checkpoint for --method swinsf")
    p.add_argument("--out", required=True, help="output image path (.pgm)")
    _add_sensor_flags(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("build-dataset", help="build paired training samples", prog="spikekit build-dataset")
    p.add_argument("--source", help="directory of frame sequences (or one sequence)")
    p.add_argument("--synthetic", action="append", help="scene spec, repeatable")
    p.add_argument("--crop", help="crop WxH (default: full frame)")
    p.add_argument("--windows", default="28,41,28", help="temporal windows l,m,r")
    p.add_argument("--count", type=int, default=None, help="number of samples to keep")
    p.add_argument("--out", required=True, help="output directory")
    _add_sensor_flags(p)
    p.set_defaults(func=cmd_build_dataset)

    p = sub.add_parser("train", help="train the reconstruction network", prog="spikekit train")
    p.add_argument("--config", help="key = value config file; flags override it")
    p.add_argument("--manifest", help="dataset manifest")
    p.add_argument("--out-dir", help="checkpoints, logs, figures")
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--decay-every", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--checkpoint-every", type=int, default=100)
    p.add_argument("--holdout", type=int, default=0, help="trailing samples held out for eval")
    p.add_argument("--resume", help="checkpoint to resume from")
    _add_model_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a reconstructor on a dataset", prog="spikekit eval")
    p.add_argument("--config", help="key = value config file; flags override it")
    p.add_argument("--manifest", help="dataset manifest")
    p.add_argument("--method", choices=("swinsf", "tfi", "tfp"), default="swinsf")
    p.add_argument("--checkpoint", help="checkpoint for --method swinsf")
    p.add_argument("--windows", default="28,41,28", help="temporal windows used at build time")
    p.add_argument("--window", type=int, default=None, help="tfp window override")
    p.add_argument("--out-dir", help="write CSV + figures here")
    _add_sensor_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("inspect", help="print stream statistics", prog="spikekit inspect")
    p.add_argument("--stream", required=True)
    p.add_argument("--frame", type=int, default=None, help="dump one frame as a text bitmap")
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help exits 0, usage errors exit 1
        return int(exc.code or 0)
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    defaults = {
        action.dest: action.default
        for action in parser._subparsers._group_actions[0].choices[args.command]._actions
    }
    try:
        merge_config(args, defaults)
        return args.func(args)
    except UsageError as exc:
        print(f"spikekit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"spikekit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (SpikeKitError, OSError) as exc:
        print(f"spikekit: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"spikekit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
