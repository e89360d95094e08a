import numpy as np
import pytest

from ngsr.config import COSINE, DOT
from ngsr.ngram import (
    NGramParams,
    cyclic_shift,
    cyclic_unshift,
    ngram_context,
    seq_refl_win_pad,
    sliding_wsa,
    unigram_embed,
    window_merge,
    window_partition,
    windowwise_add,
)
from ngsr.reference import seq_refl_win_pad_naive, sliding_wsa_naive

F32 = np.float32


def make_params(rng, d, n=2, mode=COSINE, zero_bias=False):
    c = d // 2
    mul = 0.0 if zero_bias else 0.1
    return NGramParams(
        unigram_w=rng.standard_normal((c, 2, 4, 4)).astype(F32) * 0.2,
        qkv_w=rng.standard_normal((c, 3 * c)).astype(F32) * 0.2,
        qkv_b=rng.standard_normal(3 * c).astype(F32) * mul,
        out_w=rng.standard_normal((c, c)).astype(F32) * 0.2,
        out_b=rng.standard_normal(c).astype(F32) * mul,
        tau=np.array([0.5], dtype=F32),
        merge_w=rng.standard_normal((d, d)).astype(F32) * 0.2,
        merge_b=rng.standard_normal(d).astype(F32) * mul,
        n=n,
        mode=mode,
    )


class TestWindows:
    def test_partition_shape(self):
        x = np.zeros((16 * 16, 5), dtype=F32)
        grid = window_partition(x, 16, 16, 8)
        assert grid.windows.shape == (4, 64, 5)
        assert (grid.w_h, grid.w_w) == (2, 2)

    def test_round_trip_bitwise(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((24 * 16, 7)).astype(F32)
        assert np.array_equal(window_merge(window_partition(x, 24, 16, 8)), x)

    def test_degenerate_single_window(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((64, 3)).astype(F32)
        grid = window_partition(x, 8, 8, 8)
        assert grid.windows.shape == (1, 64, 3)
        assert np.array_equal(grid.windows[0], x)

    def test_window_block_placement(self):
        h = w = 4
        m = 2
        x = np.arange(h * w, dtype=F32).reshape(h * w, 1)
        grid = window_partition(x, h, w, m)
        # window (a, b) holds rows aM..aM+M-1, cols bM..bM+M-1, row-major
        assert grid.windows[0, :, 0].tolist() == [0, 1, 4, 5]
        assert grid.windows[1, :, 0].tolist() == [2, 3, 6, 7]
        assert grid.windows[2, :, 0].tolist() == [8, 9, 12, 13]

    def test_rejects_indivisible(self):
        with pytest.raises(ValueError):
            window_partition(np.zeros((12 * 12, 2), dtype=F32), 12, 12, 8)


class TestCyclicShift:
    def test_zero_shift_identity(self):
        x = np.arange(8, dtype=F32).reshape(2, 2, 2)
        assert cyclic_shift(x, 0) is x

    def test_shift_unshift_bitwise(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((9, 7, 3)).astype(F32)
        assert np.array_equal(cyclic_unshift(cyclic_shift(x, 3), 3), x)

    def test_manual_roll(self):
        x = np.array([[1, 2], [3, 4]], dtype=F32).reshape(2, 2, 1)
        out = cyclic_shift(x, 1)[:, :, 0]
        assert out.tolist() == [[4, 3], [2, 1]]


class TestSeqReflWinPad:
    def test_n1_identity(self):
        rng = np.random.default_rng(3)
        u = rng.standard_normal((3, 4, 4)).astype(F32)
        assert np.array_equal(seq_refl_win_pad(u, 1, "forward"), u)
        assert np.array_equal(seq_refl_win_pad(u, 1, "backward"), u)

    def test_manual_enumeration_forward(self):
        u = np.arange(1, 10, dtype=F32).reshape(1, 3, 3)
        out = seq_refl_win_pad(u, 2, "forward")[0]
        expected = [[1, 2, 3, 2], [4, 5, 6, 5], [7, 8, 9, 8], [4, 5, 6, 5]]
        assert out.tolist() == expected

    def test_backward_is_flipped_forward(self):
        rng = np.random.default_rng(4)
        for n in (2, 3):
            u = rng.standard_normal((2, 5, 6)).astype(F32)
            flip = lambda a: a[:, ::-1, ::-1]
            fwd_of_flip = seq_refl_win_pad(flip(u), n, "forward")
            assert np.array_equal(seq_refl_win_pad(u, n, "backward"), flip(fwd_of_flip))

    def test_no_foreign_values(self):
        rng = np.random.default_rng(5)
        u = rng.standard_normal((1, 4, 5)).astype(F32)
        src = set(u.ravel().tolist())
        for direction in ("forward", "backward"):
            padded = seq_refl_win_pad(u, 3, direction)
            assert set(padded.ravel().tolist()) <= src

    def test_matches_index_reference(self):
        rng = np.random.default_rng(6)
        u = rng.standard_normal((2, 4, 4)).astype(F32)
        for direction in ("forward", "backward"):
            got = seq_refl_win_pad(u, 3, direction)
            want = seq_refl_win_pad_naive(u, 3, direction).astype(F32)
            assert np.array_equal(got, want)

    def test_rejects_small_grid(self):
        with pytest.raises(ValueError, match="smaller"):
            seq_refl_win_pad(np.zeros((1, 1, 3), dtype=F32), 2, "forward")


class TestUnigramEmbed:
    def test_output_shape(self):
        rng = np.random.default_rng(7)
        d, m = 64, 8
        x = rng.standard_normal((32 * 32, d)).astype(F32)
        w = rng.standard_normal((d // 2, 2, m, m)).astype(F32)
        assert unigram_embed(x, w, 32, 32, m).shape == (32, 4, 4)

    def test_zero_input_zero_embedding(self):
        d, m = 8, 4
        x = np.zeros((m * m, d), dtype=F32)
        w = np.ones((d // 2, 2, m, m), dtype=F32)
        assert np.all(unigram_embed(x, w, m, m, m) == 0)

    def test_uniform_weights_average_channel_pairs(self):
        rng = np.random.default_rng(8)
        d, m = 6, 4
        x = rng.standard_normal((m * m, d)).astype(F32)
        w = np.full((d // 2, 2, m, m), 1.0 / (2 * m * m), dtype=F32)
        out = unigram_embed(x, w, m, m, m)
        assert out.shape == (3, 1, 1)
        for g in range(3):
            want = x[:, 2 * g:2 * g + 2].mean()
            assert abs(out[g, 0, 0] - want) <= 1e-6

    def test_rejects_odd_channels(self):
        x = np.zeros((16, 5), dtype=F32)
        with pytest.raises(ValueError, match="even"):
            unigram_embed(x, np.zeros((2, 2, 4, 4), dtype=F32), 4, 4, 4)


class TestSlidingWsa:
    def test_n1_single_token_value_path(self):
        rng = np.random.default_rng(9)
        c = 6
        p = make_params(rng, 2 * c, n=1)
        u = rng.standard_normal((c, 3, 3)).astype(F32)
        out = sliding_wsa(u, p, 1)
        # softmax over one element is 1: output = out_proj(v_proj(token))
        for a in range(3):
            for b in range(3):
                y = u[:, a, b] @ p.qkv_w + p.qkv_b
                want = y[2 * c:] @ p.out_w + p.out_b
                assert np.max(np.abs(out[a, b] - want)) <= 1e-5

    def test_constant_field_constant_output(self):
        rng = np.random.default_rng(10)
        c = 4
        p = make_params(rng, 2 * c)
        u = np.tile(rng.standard_normal((c, 1, 1)).astype(F32), (1, 4, 5))
        out = sliding_wsa(seq_refl_win_pad(u, 2, "forward"), p, 2)
        assert np.max(np.abs(out - out[0, 0])) <= 1e-5

    @pytest.mark.parametrize("mode", [COSINE, DOT])
    @pytest.mark.parametrize("n", [2, 3])
    def test_matches_gather_oracle(self, mode, n):
        for case in range(10):
            rng = np.random.default_rng(11 + 13 * case)
            c = int(rng.integers(2, 9))
            p = make_params(rng, 2 * c, n=n, mode=mode)
            gh, gw = int(rng.integers(n, 7)), int(rng.integers(n, 7))
            u = rng.standard_normal((c, gh + n - 1, gw + n - 1)).astype(F32)
            got = sliding_wsa(u, p, n)
            want = sliding_wsa_naive(u, p, n)
            assert np.max(np.abs(got.astype(np.float64) - want)) <= 1e-5


class TestNgramContext:
    def test_output_shape(self):
        rng = np.random.default_rng(12)
        d, m = 64, 8
        p = make_params(rng, d)
        p.unigram_w = rng.standard_normal((d // 2, 2, m, m)).astype(F32) * 0.1
        x = rng.standard_normal((64 * 64, d)).astype(F32)
        assert ngram_context(x, p, 64, 64, m).shape == (d, 8, 8)

    def test_zero_input_zero_context(self):
        rng = np.random.default_rng(13)
        d, m = 8, 4
        p = make_params(rng, d, zero_bias=True)
        x = np.zeros((16 * 16, d), dtype=F32)
        assert np.max(np.abs(ngram_context(x, p, 16, 16, m))) == 0.0

    def test_constant_field_constant_context(self):
        rng = np.random.default_rng(14)
        d, m = 8, 4
        p = make_params(rng, d)
        x = np.tile(rng.standard_normal((1, d)).astype(F32), (16 * 16, 1))
        z = ngram_context(x, p, 16, 16, m)
        assert np.max(np.abs(z - z[:, :1, :1])) <= 1e-5

    def test_forward_backward_identical_for_n1(self):
        rng = np.random.default_rng(15)
        d, m = 8, 4
        p = make_params(rng, d, n=1)
        x = rng.standard_normal((8 * 8, d)).astype(F32)
        u = unigram_embed(x, p.unigram_w, 8, 8, m)
        fwd = sliding_wsa(seq_refl_win_pad(u, 1, "forward"), p, 1)
        bwd = sliding_wsa(seq_refl_win_pad(u, 1, "backward"), p, 1)
        assert np.array_equal(fwd, bwd)

    def test_pure_function(self):
        rng = np.random.default_rng(16)
        d, m = 8, 4
        p = make_params(rng, d)
        x = rng.standard_normal((16 * 16, d)).astype(F32)
        assert np.array_equal(ngram_context(x, p, 16, 16, m), ngram_context(x, p, 16, 16, m))


class TestWindowwiseAdd:
    def test_zero_windows_take_context_value(self):
        grid = window_partition(np.zeros((16, 3), dtype=F32), 4, 4, 2)
        z = np.arange(12, dtype=F32).reshape(3, 2, 2)
        out = windowwise_add(grid, z)
        for a in range(2):
            for b in range(2):
                win = out.windows[a * 2 + b]
                assert np.all(win == z[:, a, b])

    def test_zero_context_identity(self):
        rng = np.random.default_rng(17)
        grid = window_partition(rng.standard_normal((16, 3)).astype(F32), 4, 4, 2)
        out = windowwise_add(grid, np.zeros((3, 2, 2), dtype=F32))
        assert np.array_equal(out.windows, grid.windows)

    def test_adds_context_exactly_per_window(self):
        rng = np.random.default_rng(18)
        grid = window_partition(rng.standard_normal((64, 5)).astype(F32), 8, 8, 4)
        z = rng.standard_normal((5, 2, 2)).astype(F32)
        out = windowwise_add(grid, z)
        for a in range(2):
            for b in range(2):
                want = grid.windows[a * 2 + b] + z[:, a, b][None, :]
                assert np.array_equal(out.windows[a * 2 + b], want)

    def test_rejects_extent_mismatch(self):
        grid = window_partition(np.zeros((16, 3), dtype=F32), 4, 4, 2)
        with pytest.raises(ValueError, match="does not match"):
            windowwise_add(grid, np.zeros((3, 3, 2), dtype=F32))
