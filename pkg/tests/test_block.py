import numpy as np
import pytest

from ngsr.block import (
    MASK_FILL,
    NstbParams,
    _multihead_attention,
    cosine_similarity,
    nstb_forward,
    relative_position_index,
    scaled_cosine_wsa,
    shift_attention_mask,
)
from ngsr.config import COSINE, DOT
from ngsr.ngram import NGramParams
from ngsr.reference import _region_label, window_attention_naive

F32 = np.float32


def make_ngram_params(rng, d, m, n=2, mode=COSINE, zero=False):
    c = d // 2
    scale = 0.0 if zero else 0.2
    return NGramParams(
        unigram_w=rng.standard_normal((c, 2, m, m)).astype(F32) * scale,
        qkv_w=rng.standard_normal((c, 3 * c)).astype(F32) * scale,
        qkv_b=np.zeros(3 * c, dtype=F32),
        out_w=rng.standard_normal((c, c)).astype(F32) * scale,
        out_b=np.zeros(c, dtype=F32),
        tau=np.array([0.5], dtype=F32),
        merge_w=rng.standard_normal((d, d)).astype(F32) * scale,
        merge_b=np.zeros(d, dtype=F32),
        n=n,
        mode=mode,
    )


def make_block_params(rng, d, m, heads=1, mode=COSINE, zero_out=False, ffn_hidden=None):
    f = ffn_hidden or 2 * d
    wa = heads * (d // heads)
    return NstbParams(
        ngram=make_ngram_params(rng, d, m, mode=mode, zero=zero_out),
        qkv_w=rng.standard_normal((d, 3 * wa)).astype(F32) * 0.2,
        qkv_b=rng.standard_normal(3 * wa).astype(F32) * 0.05,
        out_w=np.zeros((wa, d), dtype=F32) if zero_out else rng.standard_normal((wa, d)).astype(F32) * 0.2,
        out_b=np.zeros(d, dtype=F32),
        bias_table=rng.standard_normal(((2 * m - 1) ** 2, heads)).astype(F32) * 0.05,
        tau=rng.uniform(0.1, 1.0, heads).astype(F32),
        ffn_w1=rng.standard_normal((d, f)).astype(F32) * 0.2,
        ffn_b1=np.zeros(f, dtype=F32),
        ffn_w2=np.zeros((f, d), dtype=F32) if zero_out else rng.standard_normal((f, d)).astype(F32) * 0.2,
        ffn_b2=np.zeros(d, dtype=F32),
        norm1_g=np.ones(d, dtype=F32),
        norm1_b=np.zeros(d, dtype=F32),
        norm2_g=np.ones(d, dtype=F32),
        norm2_b=np.zeros(d, dtype=F32),
        heads=heads,
        mode=mode,
    )


class TestCosineSimilarity:
    def test_self_similarity(self):
        q = np.array([[3.0, 4.0]], dtype=F32)
        assert abs(cosine_similarity(q, q)[0, 0] - 1.0) <= 1e-6

    def test_orthogonality(self):
        q = np.array([[1.0, 0.0]], dtype=F32)
        k = np.array([[0.0, 1.0]], dtype=F32)
        assert abs(cosine_similarity(q, k)[0, 0]) <= 1e-6

    def test_scale_invariance(self):
        q = np.array([[1.0, 1.0]], dtype=F32)
        k = np.array([[1.0, -1.0]], dtype=F32)
        assert abs(cosine_similarity(q, k * 5)[0, 0]) <= 1e-6
        k2 = np.array([[2.0, 1.0]], dtype=F32)
        assert abs(cosine_similarity(q, k2)[0, 0] - cosine_similarity(q, 7 * k2)[0, 0]) <= 1e-6

    def test_range_and_zero_rows(self):
        rng = np.random.default_rng(0)
        q = rng.standard_normal((10, 8)).astype(F32)
        k = rng.standard_normal((10, 8)).astype(F32)
        c = cosine_similarity(q, k)
        assert np.all(c >= -1 - 1e-6) and np.all(c <= 1 + 1e-6)
        z = np.zeros((2, 8), dtype=F32)
        assert np.isfinite(cosine_similarity(z, k)).all()
        assert np.all(cosine_similarity(z, k) == 0)


class TestRelativePositionIndex:
    def test_m1(self):
        idx = relative_position_index(1)
        assert idx.shape == (1, 1) and idx[0, 0] == 0

    def test_diagonal_constant(self):
        idx = relative_position_index(4)
        assert len(set(np.diag(idx).tolist())) == 1

    def test_m2_exhaustive(self):
        m = 2
        idx = relative_position_index(m)
        coords = [(i, j) for i in range(m) for j in range(m)]
        for a in range(4):
            for b in range(4):
                dy = coords[a][0] - coords[b][0]
                dx = coords[a][1] - coords[b][1]
                assert idx[a, b] == (dy + m - 1) * (2 * m - 1) + (dx + m - 1)

    def test_value_range(self):
        m = 8
        idx = relative_position_index(m)
        assert idx.min() >= 0 and idx.max() < (2 * m - 1) ** 2

    def test_equal_displacement_shares_bias_row(self):
        idx = relative_position_index(8)
        # token pairs (i, i+1) in the same row all share one displacement
        rows = [idx[i, i + 1] for i in range(7)]
        assert len(set(rows)) == 1


class TestScaledCosineWsa:
    def test_single_token_is_projected_value(self):
        rng = np.random.default_rng(1)
        d = 6
        p = make_block_params(rng, d, 1, heads=1)
        x = rng.standard_normal((1, d)).astype(F32)
        out = scaled_cosine_wsa(x, p, 1)
        y = x[0] @ p.qkv_w + p.qkv_b
        want = y[2 * d:] @ p.out_w + p.out_b
        assert np.max(np.abs(out[0] - want)) <= 1e-5

    def test_identical_tokens_uniform_weights(self):
        rng = np.random.default_rng(2)
        d, m = 8, 2
        p = make_block_params(rng, d, m, heads=2)
        p.bias_table = np.full_like(p.bias_table, 0.3)
        x = np.tile(rng.standard_normal((1, d)).astype(F32), (m * m, 1))
        _, weights = _multihead_attention(x[None], p, m, None, return_weights=True)
        assert np.max(np.abs(weights - 1.0 / (m * m))) <= 1e-6

    def test_matches_definition_oracle_4_tokens(self):
        for mode in (COSINE, DOT):
            rng = np.random.default_rng(3)
            d, m = 8, 2
            p = make_block_params(rng, d, m, heads=2, mode=mode)
            x = rng.standard_normal((m * m, d)).astype(F32)
            got = scaled_cosine_wsa(x, p, m)
            want = window_attention_naive(x, p, m)
            assert np.max(np.abs(got.astype(np.float64) - want)) <= 1e-6

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(4)
        d, m = 16, 4
        p = make_block_params(rng, d, m, heads=4)
        x = rng.standard_normal((m * m, d)).astype(F32)
        _, weights = _multihead_attention(x[None], p, m, None, return_weights=True)
        assert np.max(np.abs(weights.sum(axis=-1) - 1.0)) <= 1e-6

    def test_tau_clamped_at_read(self):
        rng = np.random.default_rng(5)
        d, m = 8, 2
        p = make_block_params(rng, d, m, heads=1)
        x = rng.standard_normal((m * m, d)).astype(F32)
        p.tau = np.array([-3.0], dtype=F32)
        adversarial = scaled_cosine_wsa(x, p, m)
        p.tau = np.array([0.01], dtype=F32)
        clamped = scaled_cosine_wsa(x, p, m)
        assert np.isfinite(adversarial).all()
        assert np.array_equal(adversarial, clamped)


class TestShiftMask:
    def test_zero_shift_all_zero(self):
        mask = shift_attention_mask(16, 16, 8, 0)
        assert mask.shape == (4, 64, 64)
        assert np.all(mask == 0)

    def test_masked_pairs_cross_region_only(self):
        h = w = 16
        m, s = 8, 4
        mask = shift_attention_mask(h, w, m, s)
        for a in range(2):
            for b in range(2):
                win = mask[a * 2 + b]
                for t1 in range(m * m):
                    for t2 in range(m * m):
                        p1 = (a * m + t1 // m, b * m + t1 % m)
                        p2 = (a * m + t2 // m, b * m + t2 % m)
                        same = _region_label(*p1, h, w, m, s) == _region_label(*p2, h, w, m, s)
                        assert win[t1, t2] == (0.0 if same else F32(MASK_FILL))

    def test_shifted_attention_equals_region_split_oracle(self):
        rng = np.random.default_rng(6)
        h = w = 16
        m, s = 8, 4
        d = 8
        p = make_block_params(rng, d, m, heads=2)
        mask = shift_attention_mask(h, w, m, s)
        grid = rng.standard_normal((h, w, d)).astype(F32)
        for a in range(2):
            for b in range(2):
                win = np.stack([grid[a * m + t // m, b * m + t % m] for t in range(m * m)])
                region = [_region_label(a * m + t // m, b * m + t % m, h, w, m, s) for t in range(m * m)]
                got = scaled_cosine_wsa(win, p, m, mask[a * 2 + b])
                want = window_attention_naive(win, p, m, region)
                assert np.max(np.abs(got.astype(np.float64) - want)) <= 1e-5


class TestNstbForward:
    def test_shape_preserved(self):
        rng = np.random.default_rng(7)
        d, m = 8, 4
        p = make_block_params(rng, d, m, heads=2)
        for h, w in ((8, 8), (8, 16), (16, 12)):
            x = rng.standard_normal((h * w, d)).astype(F32)
            assert nstb_forward(x, p, h, w, m).shape == (h * w, d)

    def test_shifted_differs_from_unshifted(self):
        rng = np.random.default_rng(8)
        d, m = 8, 4
        p = make_block_params(rng, d, m, heads=2)
        x = rng.standard_normal((16 * 16, d)).astype(F32)
        plain = nstb_forward(x, p, 16, 16, m, shifted=False, shift=2)
        shifted = nstb_forward(x, p, 16, 16, m, shifted=True, shift=2)
        assert not np.allclose(plain, shifted)

    def test_zero_projections_give_identity(self):
        rng = np.random.default_rng(9)
        d, m = 8, 4
        p = make_block_params(rng, d, m, heads=2, zero_out=True)
        x = rng.standard_normal((8 * 8, d)).astype(F32)
        out = nstb_forward(x, p, 8, 8, m)
        # both branches emit zero vectors; LN of a zero vector with beta=0 is zero
        assert np.max(np.abs(out - x)) <= 1e-6

    def test_deterministic(self):
        rng = np.random.default_rng(10)
        d, m = 8, 4
        p = make_block_params(rng, d, m, heads=2)
        x = rng.standard_normal((8 * 8, d)).astype(F32)
        assert np.array_equal(nstb_forward(x, p, 8, 8, m, shifted=True, shift=2),
                              nstb_forward(x, p, 8, 8, m, shifted=True, shift=2))
