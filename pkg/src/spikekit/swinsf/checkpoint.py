"""Checkpoint container ("SWSF" v1).

Layout, all integers little-endian:

    4   magic b"SWSF"
    2   version (u16) == 1
    4   config JSON length (u32)
    ... config JSON (utf-8, sorted keys)
    32  sha256 of the config JSON (the config fingerprint)
    4   tensor count (u32)
    per tensor:
        2       name length (u16), then the utf-8 name
        1       rank (u8)
        4*rank  dims (u32 each)
        4*n     float32 little-endian values, row-major

Model parameters use their plain names; optimizer state rides along as
"opt.m.<name>" / "opt.v.<name>" plus the scalars "opt.step" and
"train.epoch". Loading recomputes and verifies the fingerprint.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from typing import BinaryIO, Optional

import numpy as np

from ..errors import BadMagicError, FormatError, TruncatedPayloadError, VersionMismatchError
from ..numerics import Tensor
from .config import ModelConfig

MAGIC = b"SWSF"
VERSION = 1


@dataclass
class Checkpoint:
    config: ModelConfig
    params: dict = field(repr=False)  # name -> np.ndarray (float32)
    adam_m: Optional[dict] = field(default=None, repr=False)
    adam_v: Optional[dict] = field(default=None, repr=False)
    step: int = 0
    epoch: int = 0

    def param_tensors(self, dtype=np.float32) -> dict[str, Tensor]:
        return {k: Tensor(v.astype(dtype), requires_grad=True) for k, v in self.params.items()}


def _read_exact(source: BinaryIO, n: int, what: str) -> bytes:
    raw = source.read(n)
    if len(raw) < n:
        raise TruncatedPayloadError(f"checkpoint truncated while reading {what}")
    return raw


def _write_tensor(sink: BinaryIO, name: str, arr: np.ndarray) -> None:
    encoded = name.encode("utf-8")
    arr32 = np.ascontiguousarray(arr, dtype="<f4")
    sink.write(struct.pack("<H", len(encoded)))
    sink.write(encoded)
    sink.write(struct.pack("<B", arr32.ndim))
    for dim in arr32.shape:
        sink.write(struct.pack("<I", dim))
    sink.write(arr32.tobytes())


def _read_tensor(source: BinaryIO) -> tuple[str, np.ndarray]:
    (name_len,) = struct.unpack("<H", _read_exact(source, 2, "tensor name length"))
    name = _read_exact(source, name_len, "tensor name").decode("utf-8")
    (rank,) = struct.unpack("<B", _read_exact(source, 1, "tensor rank"))
    shape = tuple(
        struct.unpack("<I", _read_exact(source, 4, "tensor dim"))[0] for _ in range(rank)
    )
    count = int(np.prod(shape)) if shape else 1
    data = np.frombuffer(_read_exact(source, 4 * count, f"tensor {name!r} data"), dtype="<f4")
    return name, data.reshape(shape).copy()


def write_checkpoint(
    sink: BinaryIO,
    cfg: ModelConfig,
    params: dict[str, Tensor],
    adam_m: Optional[dict] = None,
    adam_v: Optional[dict] = None,
    step: int = 0,
    epoch: int = 0,
) -> None:
    cfg_json = cfg.to_json().encode("utf-8")
    sink.write(MAGIC)
    sink.write(struct.pack("<H", VERSION))
    sink.write(struct.pack("<I", len(cfg_json)))
    sink.write(cfg_json)
    sink.write(hashlib.sha256(cfg_json).digest())

    entries: list[tuple[str, np.ndarray]] = [(k, params[k].data) for k in sorted(params)]
    if adam_m is not None and adam_v is not None:
        entries += [(f"opt.m.{k}", adam_m[k]) for k in sorted(adam_m)]
        entries += [(f"opt.v.{k}", adam_v[k]) for k in sorted(adam_v)]
        entries.append(("opt.step", np.asarray(float(step))))
    entries.append(("train.epoch", np.asarray(float(epoch))))
    sink.write(struct.pack("<I", len(entries)))
    for name, arr in entries:
        _write_tensor(sink, name, arr)


def read_checkpoint(source: BinaryIO) -> Checkpoint:
    magic = _read_exact(source, 4, "magic")
    if magic != MAGIC:
        raise BadMagicError(f"bad checkpoint magic {magic!r}, expected {MAGIC!r}")
    (version,) = struct.unpack("<H", _read_exact(source, 2, "version"))
    if version != VERSION:
        raise VersionMismatchError(f"unsupported checkpoint version {version}")
    (cfg_len,) = struct.unpack("<I", _read_exact(source, 4, "config length"))
    cfg_json = _read_exact(source, cfg_len, "config")
    digest = _read_exact(source, 32, "config fingerprint")
    if hashlib.sha256(cfg_json).digest() != digest:
        raise FormatError("config fingerprint mismatch: checkpoint is corrupt")
    cfg = ModelConfig.from_json(cfg_json.decode("utf-8"))

    (count,) = struct.unpack("<I", _read_exact(source, 4, "tensor count"))
    params: dict[str, np.ndarray] = {}
    adam_m: dict[str, np.ndarray] = {}
    adam_v: dict[str, np.ndarray] = {}
    step = 0
    epoch = 0
    for _ in range(count):
        name, arr = _read_tensor(source)
        if name.startswith("opt.m."):
            adam_m[name[6:]] = arr
        elif name.startswith("opt.v."):
            adam_v[name[6:]] = arr
        elif name == "opt.step":
            step = int(arr.reshape(()))
        elif name == "train.epoch":
            epoch = int(arr.reshape(()))
        else:
            params[name] = arr
    return Checkpoint(
        config=cfg,
        params=params,
        adam_m=adam_m or None,
        adam_v=adam_v or None,
        step=step,
        epoch=epoch,
    )


def save_checkpoint(path, cfg, params, **kwargs) -> None:
    with open(path, "wb") as f:
        write_checkpoint(f, cfg, params, **kwargs)


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as f:
        return read_checkpoint(f)
