"""Window partition/reverse and shift-mask tests.

The index oracle recomputes every token position from the cyclic-roll
formula; the mask oracle re-derives reachability from original
coordinates rather than region ids.
"""

import numpy as np
import pytest

from spikekit.numerics import Tensor
from spikekit.swinsf.windows import (
    MASKED_LOGIT,
    attention_mask,
    window_partition,
    window_reverse,
)


@pytest.mark.parametrize("shape", [(3, 10, 10), (2, 7, 9), (1, 5, 5), (4, 16, 20)])
@pytest.mark.parametrize("shift", [0, 2])
def test_reverse_is_exact_inverse(shape, shift):
    rng = np.random.default_rng(hash(shape) % 2**32)
    x = rng.normal(size=shape)
    wb = window_partition(Tensor(x), window=5, shift=shift)
    back = window_reverse(wb)
    np.testing.assert_array_equal(back.data, x)


def test_single_window_input():
    m = 5
    x = np.random.default_rng(0).normal(size=(1, m, m))
    wb = window_partition(Tensor(x), window=m, shift=0)
    assert wb.tokens.shape == (1, m * m, 1)
    assert wb.n_windows == 1


def test_partition_geometry_with_padding():
    wb = window_partition(Tensor(np.zeros((2, 7, 9))), window=5, shift=0)
    assert (wb.grid_h, wb.grid_w) == (10, 10)
    assert wb.tokens.shape == (4, 25, 2)


@pytest.mark.parametrize("shift", [0, 2])
def test_labeled_grid_matches_index_oracle(shift):
    m, h, w = 5, 10, 15
    grid = np.arange(h * w, dtype=np.float64).reshape(1, h, w)
    wb = window_partition(Tensor(grid), window=m, shift=shift)
    tokens = wb.tokens.data[:, :, 0]
    nw = w // m
    for win in range(wb.n_windows):
        bi, bj = divmod(win, nw)
        for pos in range(m * m):
            pi, pj = divmod(pos, m)
            src_i = (bi * m + pi + shift) % h
            src_j = (bj * m + pj + shift) % w
            assert tokens[win, pos] == grid[0, src_i, src_j]


class TestAttentionMask:
    def test_no_mask_without_shift(self):
        assert attention_mask(10, 10, 5, 0) is None

    def test_mask_shape(self):
        mask = attention_mask(10, 15, 5, 2)
        assert mask.shape == (6, 25, 25)
        assert set(np.unique(mask)) <= {0.0, MASKED_LOGIT}

    def test_interior_windows_unmasked(self):
        # With a 20x20 grid and M=5, windows not touching the last
        # row/column block see one contiguous region.
        mask = attention_mask(20, 20, 5, 2)
        assert np.all(mask[0] == 0.0)
        assert np.all(mask[1] == 0.0)

    @pytest.mark.parametrize("hw", [(10, 10), (15, 10), (10, 15)])
    def test_mask_matches_reachability_oracle(self, hw):
        h, w = hw
        m, s = 5, 2
        mask = attention_mask(h, w, m, s)
        nw = w // m

        def wrapped(rolled, size):
            # Content at rolled index >= size - s came from the far edge.
            return rolled >= size - s

        for win in range(mask.shape[0]):
            bi, bj = divmod(win, nw)
            for p1 in range(m * m):
                for p2 in range(m * m):
                    r1, c1 = bi * m + p1 // m, bj * m + p1 % m
                    r2, c2 = bi * m + p2 // m, bj * m + p2 % m
                    same_side = wrapped(r1, h) == wrapped(r2, h) and wrapped(c1, w) == wrapped(c2, w)
                    if same_side:
                        assert mask[win, p1, p2] == 0.0
                    else:
                        assert mask[win, p1, p2] == MASKED_LOGIT
