"""Bit-packed spike streams and their file formats.

A spike stream is T binary frames of H x W pixels. Frames are packed
row-major, 8 pixels per byte, least-significant-bit first, so pixel
(i, j) of a frame lives at bit ``(i*W + j) % 8`` of byte
``(i*W + j) // 8``. Trailing pad bits of each frame are zero.

Container format ("SPKS" v1, all integers little-endian):

    offset  size  field
    0       4     magic  b"SPKS"
    4       2     version (u16) == 1
    6       4     width  (u32)
    10      4     height (u32)
    14      4     t_len  (u32)
    18      8     tick_duration (f64), seconds per frame
    26      ...   t_len frames of ceil(width*height/8) packed bytes

Raw headerless camera dumps (.dat) carry the same per-frame packing but
no header; dimensions and the bit order within each byte must be
supplied by the caller.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import BinaryIO, Literal

import numpy as np

from .errors import (
    BadMagicError,
    FormatError,
    TruncatedPayloadError,
    VersionMismatchError,
)

MAGIC = b"SPKS"
VERSION = 1
_HEADER = struct.Struct("<4sHIIId")


def bytes_per_frame(width: int, height: int) -> int:
    return (width * height + 7) // 8


@dataclass(frozen=True)
class StreamHeader:
    width: int
    height: int
    t_len: int
    tick_duration: float = 1.0

    def pack(self) -> bytes:
        return _HEADER.pack(MAGIC, VERSION, self.width, self.height, self.t_len, self.tick_duration)

    @classmethod
    def unpack(cls, raw: bytes) -> "StreamHeader":
        if len(raw) < _HEADER.size:
            raise TruncatedPayloadError(
                f"header truncated: got {len(raw)} bytes, need {_HEADER.size}"
            )
        magic, version, width, height, t_len, tick = _HEADER.unpack(raw[: _HEADER.size])
        if magic != MAGIC:
            raise BadMagicError(f"bad magic {magic!r}, expected {MAGIC!r}")
        if version != VERSION:
            raise VersionMismatchError(f"unsupported version {version}, expected {VERSION}")
        return cls(width, height, t_len, tick)


@dataclass(frozen=True)
class SpikeStream:
    """Immutable bit-packed binary frame sequence."""

    width: int
    height: int
    t_len: int
    frames: np.ndarray = field(repr=False)  # uint8, shape (t_len, bytes_per_frame)
    tick_duration: float = 1.0

    def __post_init__(self):
        if self.width < 1 or self.height < 1 or self.t_len < 0:
            raise ValueError(f"invalid stream dims {self.width}x{self.height}x{self.t_len}")
        bpf = bytes_per_frame(self.width, self.height)
        frames = np.ascontiguousarray(self.frames, dtype=np.uint8)
        if frames.shape != (self.t_len, bpf):
            raise FormatError(
                f"frame buffer shape {frames.shape} does not match "
                f"{self.t_len} frames of {bpf} bytes"
            )
        tail_bits = (self.width * self.height) % 8
        if tail_bits and self.t_len and np.any(frames[:, -1] & ~np.uint8((1 << tail_bits) - 1)):
            raise FormatError("trailing pad bits of a frame are not zero")
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)

    @classmethod
    def from_dense(cls, bits: np.ndarray, tick_duration: float = 1.0) -> "SpikeStream":
        """Pack a (t_len, height, width) boolean/0-1 array."""
        bits = np.asarray(bits)
        if bits.ndim != 3:
            raise ValueError(f"expected (t, h, w) array, got shape {bits.shape}")
        t, h, w = bits.shape
        packed = np.packbits(bits.astype(bool).reshape(t, h * w), axis=1, bitorder="little")
        return cls(width=w, height=h, t_len=t, frames=packed, tick_duration=tick_duration)

    def to_dense(self) -> np.ndarray:
        """Unpack to a (t_len, height, width) boolean array."""
        flat = np.unpackbits(self.frames, axis=1, count=self.width * self.height, bitorder="little")
        return flat.reshape(self.t_len, self.height, self.width).astype(bool)

    def get_spike(self, t: int, i: int, j: int) -> int:
        """Return the bit at frame t, row i, column j."""
        if not (0 <= t < self.t_len and 0 <= i < self.height and 0 <= j < self.width):
            raise IndexError(
                f"index (t={t}, i={i}, j={j}) out of range for "
                f"{self.t_len}x{self.height}x{self.width}"
            )
        pos = i * self.width + j
        return int(self.frames[t, pos >> 3] >> (pos & 7)) & 1

    def spike_count(self) -> int:
        return int(self.to_dense().sum())

    def mean_rate(self) -> float:
        total = self.t_len * self.height * self.width
        return self.spike_count() / total if total else 0.0

    def segment(self, start: int, stop: int) -> "SpikeStream":
        """Contiguous temporal slice [start, stop)."""
        if not (0 <= start <= stop <= self.t_len):
            raise IndexError(f"segment [{start}, {stop}) out of range for t_len {self.t_len}")
        return SpikeStream(
            self.width, self.height, stop - start, self.frames[start:stop].copy(), self.tick_duration
        )


def write_spks(stream: SpikeStream, sink: BinaryIO) -> None:
    """Serialise a stream; write then read is the identity, byte-exact."""
    header = StreamHeader(stream.width, stream.height, stream.t_len, stream.tick_duration)
    sink.write(header.pack())
    sink.write(stream.frames.tobytes())


def read_spks(source: BinaryIO) -> SpikeStream:
    header = StreamHeader.unpack(source.read(_HEADER.size))
    bpf = bytes_per_frame(header.width, header.height)
    expected = header.t_len * bpf
    payload = source.read(expected)
    if len(payload) < expected:
        raise TruncatedPayloadError(
            f"payload truncated: got {len(payload)} bytes, expected {expected}"
        )
    frames = np.frombuffer(payload, dtype=np.uint8).reshape(header.t_len, bpf).copy()
    return SpikeStream(header.width, header.height, header.t_len, frames, header.tick_duration)


def save_spks(stream: SpikeStream, path) -> None:
    with open(path, "wb") as f:
        write_spks(stream, f)


def load_spks(path) -> SpikeStream:
    with open(path, "rb") as f:
        return read_spks(f)


def read_raw_dat(
    source: BinaryIO,
    width: int,
    height: int,
    bit_order: Literal["lsb", "msb"] = "lsb",
    tick_duration: float = 1.0,
) -> SpikeStream:
    """Read a headerless raw dump; t_len is inferred from the byte count.

    Real cameras do not document their per-byte bit order, so it is a
    flag: "lsb" matches the internal packing, "msb" reverses each byte.
    """
    if bit_order not in ("lsb", "msb"):
        raise ValueError(f"bit_order must be 'lsb' or 'msb', got {bit_order!r}")
    raw = source.read()
    bpf = bytes_per_frame(width, height)
    if len(raw) % bpf:
        raise FormatError(
            f"raw dump of {len(raw)} bytes is not a whole number of "
            f"{bpf}-byte {width}x{height} frames"
        )
    t_len = len(raw) // bpf
    frames = np.frombuffer(raw, dtype=np.uint8).reshape(t_len, bpf).copy()
    if bit_order == "msb":
        bits = np.unpackbits(frames, axis=1, bitorder="big")[:, : width * height]
        frames = np.packbits(bits, axis=1, bitorder="little")
    else:
        tail = (width * height) % 8
        if tail:
            frames[:, -1] &= np.uint8((1 << tail) - 1)
    return SpikeStream(width, height, t_len, frames, tick_duration)
