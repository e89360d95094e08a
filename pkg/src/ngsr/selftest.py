"""Built-in oracle suites for the ``selftest`` command.

Each suite compares the vectorized engine against the naive reference
implementations on seeded random cases and reports per-suite pass/fail
counts. A fixed seed yields an identical case list run to run.
"""

from __future__ import annotations

import numpy as np

from .block import NstbParams, scaled_cosine_wsa, shift_attention_mask
from .config import COSINE, DOT, ModelConfig, micro_config
from .model import ngswin_forward_raw
from .ngram import NGramParams, seq_refl_win_pad, sliding_wsa
from .ops import F32, conv2d
from .reference import (
    conv2d_naive,
    micro_forward_naive,
    seq_refl_win_pad_naive,
    sliding_wsa_naive,
    window_attention_naive,
)
from .weights import init_weights

DEFAULT_SEED = 20230


class SuiteResult:
    def __init__(self, name):
        self.name = name
        self.passed = 0
        self.failures = []          # (case_seed, message)

    def record(self, case_seed, ok, message=""):
        if ok:
            self.passed += 1
        else:
            self.failures.append((case_seed, message))

    @property
    def total(self):
        return self.passed + len(self.failures)

    @property
    def ok(self):
        return not self.failures


def _conv_oracle(seed, cases=40):
    res = SuiteResult("conv-oracle")
    root = np.random.SeedSequence(seed)
    for i, ss in enumerate(root.spawn(cases)):
        rng = np.random.default_rng(ss)
        case_seed = seed * 1000 + i
        c = int(rng.integers(2, 9)) // 2 * 2
        groups = int(rng.choice([1, c // 2, c]))
        h = int(rng.integers(4, 17))
        w = int(rng.integers(4, 17))
        k = int(rng.choice([1, 3]))
        stride = int(rng.choice([1, 2]))
        pad = int(rng.choice([0, 1]))
        cout = groups * int(rng.integers(1, 4))
        x = rng.standard_normal((c, h, w)).astype(F32)
        wgt = rng.standard_normal((cout, c // groups, k, k)).astype(F32)
        b = rng.standard_normal(cout).astype(F32)
        got = conv2d(x, wgt, b, stride=stride, pad=pad, groups=groups)
        want = conv2d_naive(x, wgt, b, stride=stride, pad=pad, groups=groups)
        diff = float(np.max(np.abs(got.astype(np.float64) - want)))
        res.record(case_seed, diff <= 1e-5, f"max diff {diff:.2e}")
    return res


def _make_slide_params(rng, c, mode):
    return NGramParams(
        unigram_w=None,
        qkv_w=rng.standard_normal((c, 3 * c)).astype(F32) * 0.2,
        qkv_b=rng.standard_normal(3 * c).astype(F32) * 0.1,
        out_w=rng.standard_normal((c, c)).astype(F32) * 0.2,
        out_b=rng.standard_normal(c).astype(F32) * 0.1,
        tau=np.array([float(rng.uniform(0.05, 1.0))], dtype=F32) if mode == COSINE else None,
        merge_w=None,
        merge_b=None,
        n=2,
        mode=mode,
    )


def _sliding_oracle(seed, cases=100):
    res = SuiteResult("sliding-wsa-oracle")
    root = np.random.SeedSequence(seed + 1)
    for i, ss in enumerate(root.spawn(cases)):
        rng = np.random.default_rng(ss)
        case_seed = seed * 1000 + i
        mode = COSINE if i % 2 == 0 else DOT
        n = int(rng.choice([2, 3]))
        c = int(rng.integers(2, 9))
        gh = int(rng.integers(n, 7))
        gw = int(rng.integers(n, 7))
        u = rng.standard_normal((c, gh + n - 1, gw + n - 1)).astype(F32)
        p = _make_slide_params(rng, c, mode)
        p.n = n
        got = sliding_wsa(u, p, n)
        want = sliding_wsa_naive(u, p, n)
        diff = float(np.max(np.abs(got.astype(np.float64) - want)))
        res.record(case_seed, diff <= 1e-5, f"mode={mode} N={n} max diff {diff:.2e}")
    return res


def _pad_suite(seed, cases=100):
    res = SuiteResult("seq-refl-win-pad")
    root = np.random.SeedSequence(seed + 2)
    for i, ss in enumerate(root.spawn(cases)):
        rng = np.random.default_rng(ss)
        case_seed = seed * 1000 + i
        n = int(rng.choice([1, 2, 3]))
        c = int(rng.integers(1, 5))
        gh = int(rng.integers(n, 8))
        gw = int(rng.integers(n, 8))
        u = rng.standard_normal((c, gh, gw)).astype(F32)
        fwd = seq_refl_win_pad(u, n, "forward")
        bwd = seq_refl_win_pad(u, n, "backward")
        ok = True
        msg = ""
        flip = lambda a: a[:, ::-1, ::-1]
        if not np.array_equal(bwd, flip(seq_refl_win_pad(flip(u), n, "forward"))):
            ok, msg = False, "flip symmetry broken"
        if n == 1 and not (np.array_equal(fwd, u) and np.array_equal(bwd, u)):
            ok, msg = False, "N=1 not identity"
        src = {v for v in u[0].ravel().tolist()}
        if not {v for v in fwd[0].ravel().tolist()} <= src:
            ok, msg = False, "forward pad introduced foreign values"
        if not np.array_equal(fwd, seq_refl_win_pad_naive(u, n, "forward").astype(F32)):
            ok, msg = False, "mismatch vs index-arithmetic reference"
        res.record(case_seed, ok, msg)
    return res


def _shift_mask_oracle(seed, cases=8):
    res = SuiteResult("shift-mask-region-oracle")
    root = np.random.SeedSequence(seed + 3)
    from .reference import _region_label

    for i, ss in enumerate(root.spawn(cases)):
        rng = np.random.default_rng(ss)
        case_seed = seed * 1000 + i
        m, s = 8, 4
        h = w = 16
        d = int(rng.choice([8, 16]))
        heads = int(rng.choice([1, 2]))
        mode = COSINE if i % 2 == 0 else DOT
        wa = heads * (d // heads)
        p = NstbParams(
            ngram=None,
            qkv_w=rng.standard_normal((d, 3 * wa)).astype(F32) * 0.2,
            qkv_b=rng.standard_normal(3 * wa).astype(F32) * 0.1,
            out_w=rng.standard_normal((wa, d)).astype(F32) * 0.2,
            out_b=rng.standard_normal(d).astype(F32) * 0.1,
            bias_table=rng.standard_normal(((2 * m - 1) ** 2, heads)).astype(F32) * 0.1,
            tau=rng.uniform(0.05, 1.0, heads).astype(F32) if mode == COSINE else None,
            ffn_w1=None, ffn_b1=None, ffn_w2=None, ffn_b2=None,
            norm1_g=None, norm1_b=None, norm2_g=None, norm2_b=None,
            heads=heads,
            mode=mode,
        )
        mask = shift_attention_mask(h, w, m, s)
        grid = rng.standard_normal((h, w, d)).astype(F32)
        worst = 0.0
        for a in range(h // m):
            for b in range(w // m):
                win = np.zeros((m * m, d), dtype=F32)
                region = []
                for t in range(m * m):
                    pi, pj = a * m + t // m, b * m + t % m
                    win[t] = grid[pi, pj]
                    region.append(_region_label(pi, pj, h, w, m, s))
                got = scaled_cosine_wsa(win, p, m, mask[a * (w // m) + b])
                want = window_attention_naive(win, p, m, region)
                worst = max(worst, float(np.max(np.abs(got.astype(np.float64) - want))))
        res.record(case_seed, worst <= 1e-5, f"max diff {worst:.2e}")
    return res


def _micro_e2e(seed, cases=2):
    res = SuiteResult("micro-transcription-oracle")
    root = np.random.SeedSequence(seed + 4)
    for i, ss in enumerate(root.spawn(cases)):
        rng = np.random.default_rng(ss)
        case_seed = seed * 1000 + i
        cfg = micro_config(attention=COSINE if i % 2 == 0 else DOT)
        store = init_weights(cfg, case_seed)
        img = rng.random((16, 16, 3)).astype(F32)
        fast = ngswin_forward_raw(img, store, cfg)
        slow = micro_forward_naive(img, store, cfg)
        diff = float(np.max(np.abs(fast.astype(np.float64) - slow)))
        res.record(case_seed, diff <= 1e-5, f"max diff {diff:.2e}")
    return res


def _tau_clamp(seed, cases=20):
    res = SuiteResult("tau-clamp")
    root = np.random.SeedSequence(seed + 5)
    for i, ss in enumerate(root.spawn(cases)):
        rng = np.random.default_rng(ss)
        case_seed = seed * 1000 + i
        c = 4
        p = _make_slide_params(rng, c, COSINE)
        # adversarial temperatures: zero, negative, sub-clamp
        p.tau = np.array([float(rng.choice([0.0, -5.0, 1e-6]))], dtype=F32)
        u = rng.standard_normal((c, 3, 3)).astype(F32)
        got = sliding_wsa(u, p, 2)
        p_clamped = _make_slide_params(rng, c, COSINE)
        p_clamped.qkv_w, p_clamped.qkv_b = p.qkv_w, p.qkv_b
        p_clamped.out_w, p_clamped.out_b = p.out_w, p.out_b
        p_clamped.tau = np.array([0.01], dtype=F32)
        want = sliding_wsa(u, p_clamped, 2)
        ok = np.isfinite(got).all() and np.array_equal(got, want)
        res.record(case_seed, bool(ok), "clamped attention differs from tau=0.01")
    return res


def run_all(seed: int = DEFAULT_SEED):
    """Run every suite; returns the list of SuiteResult."""
    return [
        _conv_oracle(seed),
        _sliding_oracle(seed),
        _pad_suite(seed),
        _shift_mask_oracle(seed),
        _micro_e2e(seed),
        _tau_clamp(seed),
    ]
