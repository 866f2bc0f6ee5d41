"""Codec tests: packing law, container round trips, raw-dump reader.

The unpacked oracle below re-derives every bit with plain integer
arithmetic, independent of numpy's packbits path.
"""

import io

import numpy as np
import pytest

from spikekit.codec import (
    SpikeStream,
    StreamHeader,
    bytes_per_frame,
    read_raw_dat,
    read_spks,
    save_spks,
    load_spks,
    write_spks,
)
from spikekit.errors import (
    BadMagicError,
    FormatError,
    TruncatedPayloadError,
    VersionMismatchError,
)


def unpacked_oracle(stream):
    """Bit-by-bit unpacking using only python integer ops."""
    out = np.zeros((stream.t_len, stream.height, stream.width), dtype=bool)
    for t in range(stream.t_len):
        for i in range(stream.height):
            for j in range(stream.width):
                pos = i * stream.width + j
                byte = int(stream.frames[t, pos // 8])
                out[t, i, j] = (byte >> (pos % 8)) & 1
    return out


def random_stream(rng, t=3, h=5, w=7):
    return SpikeStream.from_dense(rng.random((t, h, w)) < 0.4)


class TestPacking:
    def test_all_zero_stream(self):
        s = SpikeStream.from_dense(np.zeros((2, 3, 4), dtype=bool))
        for t in range(2):
            for i in range(3):
                for j in range(4):
                    assert s.get_spike(t, i, j) == 0

    def test_single_bit_at_origin(self):
        bits = np.zeros((1, 2, 3), dtype=bool)
        bits[0, 0, 0] = True
        s = SpikeStream.from_dense(bits)
        assert s.get_spike(0, 0, 0) == 1
        assert s.get_spike(0, 0, 1) == 0

    def test_lsb_first_byte_value(self):
        # 1x1x8 frame with pixels [1,0,0,0,0,0,0,0] -> payload byte 0x01
        bits = np.zeros((1, 1, 8), dtype=bool)
        bits[0, 0, 0] = True
        s = SpikeStream.from_dense(bits)
        assert s.frames.tobytes() == b"\x01"

    @pytest.mark.parametrize("seed", range(4))
    def test_get_spike_agrees_with_oracle(self, seed):
        rng = np.random.default_rng(seed)
        s = random_stream(rng)
        oracle = unpacked_oracle(s)
        for t in range(s.t_len):
            for i in range(s.height):
                for j in range(s.width):
                    assert s.get_spike(t, i, j) == int(oracle[t, i, j])

    def test_dense_roundtrip_and_mean(self):
        rng = np.random.default_rng(9)
        bits = rng.random((4, 6, 5)) < 0.3
        s = SpikeStream.from_dense(bits)
        np.testing.assert_array_equal(s.to_dense(), bits)
        oracle = unpacked_oracle(s)
        assert s.mean_rate() == oracle.sum() / oracle.size

    def test_out_of_range_indices(self):
        s = SpikeStream.from_dense(np.zeros((2, 2, 2), dtype=bool))
        with pytest.raises(IndexError):
            s.get_spike(2, 0, 0)
        with pytest.raises(IndexError):
            s.get_spike(0, 0, 2)

    def test_nonzero_pad_bits_rejected(self):
        frames = np.full((1, bytes_per_frame(3, 1)), 0xFF, dtype=np.uint8)
        with pytest.raises(FormatError, match="pad bits"):
            SpikeStream(width=3, height=1, t_len=1, frames=frames)


class TestContainer:
    def test_roundtrip_identity(self):
        rng = np.random.default_rng(10)
        s = random_stream(rng, t=3, h=5, w=7)
        buf = io.BytesIO()
        write_spks(s, buf)
        buf.seek(0)
        back = read_spks(buf)
        assert (back.width, back.height, back.t_len) == (s.width, s.height, s.t_len)
        assert back.tick_duration == s.tick_duration
        np.testing.assert_array_equal(back.frames, s.frames)

    def test_roundtrip_is_byte_exact(self):
        rng = np.random.default_rng(11)
        s = random_stream(rng)
        buf = io.BytesIO()
        write_spks(s, buf)
        first = buf.getvalue()
        buf2 = io.BytesIO()
        write_spks(read_spks(io.BytesIO(first)), buf2)
        assert buf2.getvalue() == first

    @pytest.mark.parametrize("seed", range(8))
    def test_randomised_roundtrips(self, seed):
        rng = np.random.default_rng(200 + seed)
        t, h, w = (int(rng.integers(1, 6)) for _ in range(3))
        s = SpikeStream.from_dense(rng.random((t, h, w)) < rng.random())
        buf = io.BytesIO()
        write_spks(s, buf)
        buf.seek(0)
        np.testing.assert_array_equal(read_spks(buf).to_dense(), s.to_dense())

    def test_bad_magic(self):
        with pytest.raises(BadMagicError):
            read_spks(io.BytesIO(b"NOPE" + b"\x00" * 30))

    def test_version_mismatch(self):
        s = SpikeStream.from_dense(np.zeros((1, 1, 1), dtype=bool))
        buf = io.BytesIO()
        write_spks(s, buf)
        raw = bytearray(buf.getvalue())
        raw[4] = 9  # bump the version field
        with pytest.raises(VersionMismatchError):
            read_spks(io.BytesIO(bytes(raw)))

    def test_truncated_payload(self):
        rng = np.random.default_rng(12)
        s = random_stream(rng)
        buf = io.BytesIO()
        write_spks(s, buf)
        with pytest.raises(TruncatedPayloadError):
            read_spks(io.BytesIO(buf.getvalue()[:-1]))

    def test_truncated_header(self):
        with pytest.raises(TruncatedPayloadError):
            read_spks(io.BytesIO(b"SPKS\x01"))

    def test_file_helpers(self, tmp_path):
        rng = np.random.default_rng(13)
        s = random_stream(rng)
        path = tmp_path / "s.spks"
        save_spks(s, path)
        np.testing.assert_array_equal(load_spks(path).frames, s.frames)


class TestRawDat:
    def test_frame_count_from_length(self):
        # 250x400 frames pack to exactly 12500 bytes each.
        assert bytes_per_frame(250, 400) == 12500
        n = 3
        raw = io.BytesIO(bytes(n * 12500))
        s = read_raw_dat(raw, width=250, height=400)
        assert s.t_len == n

    def test_non_divisible_length_rejected(self):
        with pytest.raises(FormatError, match="whole number"):
            read_raw_dat(io.BytesIO(bytes(12501)), width=250, height=400)

    def test_lsb_vs_msb_differ_on_0x01(self):
        lsb = read_raw_dat(io.BytesIO(b"\x01"), width=8, height=1, bit_order="lsb")
        msb = read_raw_dat(io.BytesIO(b"\x01"), width=8, height=1, bit_order="msb")
        assert lsb.get_spike(0, 0, 0) == 1 and lsb.get_spike(0, 0, 7) == 0
        assert msb.get_spike(0, 0, 0) == 0 and msb.get_spike(0, 0, 7) == 1

    def test_raw_then_container_roundtrip(self):
        rng = np.random.default_rng(14)
        raw_bytes = rng.integers(0, 256, size=4 * bytes_per_frame(16, 4), dtype=np.uint8).tobytes()
        s = read_raw_dat(io.BytesIO(raw_bytes), width=16, height=4)
        buf = io.BytesIO()
        write_spks(s, buf)
        buf.seek(0)
        np.testing.assert_array_equal(read_spks(buf).to_dense(), s.to_dense())

    def test_msb_pad_bits_masked(self):
        # 3 pixels per frame: only the top 3 bits of each byte matter in msb order.
        s = read_raw_dat(io.BytesIO(b"\xff"), width=3, height=1, bit_order="msb")
        assert [s.get_spike(0, 0, j) for j in range(3)] == [1, 1, 1]

    def test_bad_bit_order(self):
        with pytest.raises(ValueError):
            read_raw_dat(io.BytesIO(b""), width=1, height=1, bit_order="mixed")


class TestHeader:
    def test_pack_unpack(self):
        h = StreamHeader(7, 9, 11, 0.25)
        assert StreamHeader.unpack(h.pack()) == h
        assert len(h.pack()) == 26
