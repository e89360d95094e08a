"""Naive reference implementations used as oracles.

Everything here is written as literal, loop-level float64 transcriptions of
the definitions, deliberately avoiding the vectorized code paths of the
engine. These exist to be slow and obviously correct; the self-test command
and the test suite compare the engine against them.
"""

from __future__ import annotations

import math

import numpy as np

from .config import COSINE, DOT, ModelConfig
from .weights import STAGE_NAMES, WeightStore

F64 = np.float64


def conv2d_naive(x, weight, bias=None, stride: int = 1, pad: int = 0, groups: int = 1):
    """Direct six-loop convolution (cross-correlation), float64."""
    x = np.asarray(x, dtype=F64)
    weight = np.asarray(weight, dtype=F64)
    c_in, h, w = x.shape
    c_out, c_g, k, _ = weight.shape
    if pad:
        padded = np.zeros((c_in, h + 2 * pad, w + 2 * pad), dtype=F64)
        padded[:, pad:pad + h, pad:pad + w] = x
        x = padded
    hp, wp = x.shape[1:]
    ho = (hp - k) // stride + 1
    wo = (wp - k) // stride + 1
    cpg_out = c_out // groups
    cpg_in = c_in // groups
    out = np.zeros((c_out, ho, wo), dtype=F64)
    for co in range(c_out):
        g = co // cpg_out
        for i in range(ho):
            for j in range(wo):
                acc = 0.0
                for ci in range(cpg_in):
                    for di in range(k):
                        for dj in range(k):
                            acc += x[g * cpg_in + ci, i * stride + di, j * stride + dj] * weight[co, ci, di, dj]
                out[co, i, j] = acc
    if bias is not None:
        out += np.asarray(bias, dtype=F64)[:, None, None]
    return out


def _softmax_naive(v):
    m = max(v)
    e = [math.exp(x - m) for x in v]
    s = sum(e)
    return [x / s for x in e]


def _attend_naive(tokens, qkv_w, qkv_b, mode, tau, scale_dim):
    """Single-head attention over a list of token vectors, by definition.

    Returns the attended tokens (before any output projection).
    """
    t = len(tokens)
    c = len(qkv_w[0]) // 3
    q = [None] * t
    k = [None] * t
    v = [None] * t
    for i in range(t):
        y = np.asarray(tokens[i], dtype=F64) @ np.asarray(qkv_w, dtype=F64) + np.asarray(qkv_b, dtype=F64)
        q[i], k[i], v[i] = y[:c], y[c:2 * c], y[2 * c:]
    out = []
    for i in range(t):
        logits = []
        for j in range(t):
            if mode == COSINE:
                cos = float(q[i] @ k[j]) / ((np.linalg.norm(q[i]) + 1e-8) * (np.linalg.norm(k[j]) + 1e-8))
                logits.append(cos / max(float(tau), 0.01))
            else:
                logits.append(float(q[i] @ k[j]) / math.sqrt(scale_dim))
        wts = _softmax_naive(logits)
        out.append(sum(wts[j] * v[j] for j in range(t)))
    return out


def sliding_wsa_naive(u_pad, params, n: int):
    """Per-position gather-attend-pool oracle for the sliding attention."""
    u = np.asarray(u_pad, dtype=F64)
    c, hp, wp = u.shape
    gh, gw = hp - n + 1, wp - n + 1
    out = np.zeros((gh, gw, c), dtype=F64)
    ow = np.asarray(params.out_w, dtype=F64)
    ob = np.asarray(params.out_b, dtype=F64)
    tau = params.tau if params.tau is not None else 1.0
    for a in range(gh):
        for b in range(gw):
            tokens = [u[:, a + di, b + dj] for di in range(n) for dj in range(n)]
            attended = _attend_naive(tokens, params.qkv_w, params.qkv_b, params.mode, np.ravel(tau)[0] if params.mode == COSINE else 1.0, c)
            pooled = sum(attended) / len(attended)
            out[a, b] = pooled @ ow + ob
    return out


def seq_refl_win_pad_naive(u, n: int, direction: str):
    """Reflection padding by explicit index arithmetic."""
    u = np.asarray(u, dtype=F64)
    c, gh, gw = u.shape
    p = n - 1
    out = np.zeros((c, gh + p, gw + p), dtype=F64)
    for i in range(gh + p):
        for j in range(gw + p):
            if direction == "forward":
                si = i if i < gh else 2 * (gh - 1) - i
                sj = j if j < gw else 2 * (gw - 1) - j
            else:
                si = i - p if i >= p else p - i
                sj = j - p if j >= p else p - j
            out[:, i, j] = u[:, si, sj]
    return out


def window_attention_naive(x, p, m: int, region=None):
    """By-definition multi-head window attention for tokens x [T, D].

    ``region`` optionally gives an integer label per token; when present the
    attention for each token is computed over same-region tokens only
    (the region-split formulation of shifted-window masking).
    """
    x = np.asarray(x, dtype=F64)
    t, d = x.shape
    heads = p.heads
    width = p.out_w.shape[0]
    hd = width // heads
    qkv_w = np.asarray(p.qkv_w, dtype=F64)
    qkv_b = np.asarray(p.qkv_b, dtype=F64)
    table = np.asarray(p.bias_table, dtype=F64)

    coords = [(i // m, i % m) for i in range(t)]

    def bias(head, i, j):
        dy = coords[i][0] - coords[j][0]
        dx = coords[i][1] - coords[j][1]
        row = (dy + m - 1) * (2 * m - 1) + (dx + m - 1)
        return table[row, head]

    y = x @ qkv_w + qkv_b
    q = y[:, :width]
    k = y[:, width:2 * width]
    v = y[:, 2 * width:]
    out = np.zeros((t, width), dtype=F64)
    for head in range(heads):
        sl = slice(head * hd, (head + 1) * hd)
        qh, kh, vh = q[:, sl], k[:, sl], v[:, sl]
        tau = max(float(np.ravel(p.tau)[head]), 0.01) if p.mode == COSINE else None
        for i in range(t):
            peers = [j for j in range(t) if region is None or region[j] == region[i]]
            logits = []
            for j in peers:
                if p.mode == COSINE:
                    cos = float(qh[i] @ kh[j]) / ((np.linalg.norm(qh[i]) + 1e-8) * (np.linalg.norm(kh[j]) + 1e-8))
                    logits.append(cos / tau + bias(head, i, j))
                else:
                    logits.append(float(qh[i] @ kh[j]) / math.sqrt(hd) + bias(head, i, j))
            wts = _softmax_naive(logits)
            out[i, sl] = sum(wts[idx] * vh[j] for idx, j in enumerate(peers))
    return out @ np.asarray(p.out_w, dtype=F64) + np.asarray(p.out_b, dtype=F64)


# --- straight-line transcription of the whole graph ------------------------


def _ln_naive(x, gamma, beta, eps=1e-5):
    x = np.asarray(x, dtype=F64)
    out = np.zeros_like(x)
    flat = x.reshape(-1, x.shape[-1])
    oflat = out.reshape(-1, x.shape[-1])
    for i in range(flat.shape[0]):
        row = flat[i]
        mu = float(row.mean())
        var = float(((row - mu) ** 2).mean())
        oflat[i] = (row - mu) / math.sqrt(var + eps) * np.asarray(gamma, dtype=F64) + np.asarray(beta, dtype=F64)
    return out


def _gelu_naive(x):
    flat = np.asarray(x, dtype=F64).ravel()
    return np.array([0.5 * v * (1.0 + math.erf(v / math.sqrt(2.0))) for v in flat]).reshape(np.shape(x))


def _pixel_shuffle_naive(x, s: int):
    c2, h, w = x.shape
    c = c2 // (s * s)
    out = np.zeros((c, h * s, w * s), dtype=F64)
    for ch in range(c):
        for i in range(h):
            for j in range(w):
                for di in range(s):
                    for dj in range(s):
                        out[ch, s * i + di, s * j + dj] = x[ch * s * s + di * s + dj, i, j]
    return out


def _maxpool2_naive(grid):
    c, h, w = grid.shape
    out = np.zeros((c, h // 2, w // 2), dtype=F64)
    for ch in range(c):
        for i in range(h // 2):
            for j in range(w // 2):
                out[ch, i, j] = max(
                    grid[ch, 2 * i, 2 * j], grid[ch, 2 * i, 2 * j + 1],
                    grid[ch, 2 * i + 1, 2 * j], grid[ch, 2 * i + 1, 2 * j + 1],
                )
    return out


def _region_label(i, j, h, w, m, s):
    """Origin-region label of shifted-canvas pixel (i, j) after a roll by -s."""
    ri = 0 if i < h - m else (1 if i < h - s else 2)
    rj = 0 if j < w - m else (1 if j < w - s else 2)
    return 3 * ri + rj


class _NaiveBlockParams:
    """Adapter giving window_attention_naive the fields it expects."""

    def __init__(self, store, prefix, heads, mode):
        self.qkv_w = store[f"{prefix}.attn.qkv.weight"]
        self.qkv_b = store[f"{prefix}.attn.qkv.bias"]
        self.out_w = store[f"{prefix}.attn.out.weight"]
        self.out_b = store[f"{prefix}.attn.out.bias"]
        self.bias_table = store[f"{prefix}.attn.bias_table"]
        self.tau = store[f"{prefix}.attn.tau"] if mode == COSINE else None
        self.heads = heads
        self.mode = mode


class _NaiveSlideParams:
    def __init__(self, store, prefix, mode):
        self.qkv_w = store[f"{prefix}.ngram.qkv.weight"]
        self.qkv_b = store[f"{prefix}.ngram.qkv.bias"]
        self.out_w = store[f"{prefix}.ngram.out.weight"]
        self.out_b = store[f"{prefix}.ngram.out.bias"]
        self.tau = store[f"{prefix}.ngram.tau"] if mode == COSINE else None
        self.mode = mode


def _ngram_context_naive(x, store, prefix, cfg, h, w):
    d, m = cfg.dim, cfg.window
    c = d // 2
    uni_w = store[f"{prefix}.ngram.unigram.weight"]
    grid = np.asarray(x, dtype=F64).reshape(h, w, d).transpose(2, 0, 1)
    u = conv2d_naive(grid, uni_w, None, stride=m, pad=0, groups=c)
    n = min(cfg.ngram, u.shape[1], u.shape[2])
    sp = _NaiveSlideParams(store, prefix, cfg.attention)
    fwd = sliding_wsa_naive(seq_refl_win_pad_naive(u, n, "forward"), sp, n)
    bwd = sliding_wsa_naive(seq_refl_win_pad_naive(u, n, "backward"), sp, n)
    both = np.concatenate([fwd, bwd], axis=-1)
    merged = both @ np.asarray(store[f"{prefix}.ngram.merge.weight"], dtype=F64) + np.asarray(
        store[f"{prefix}.ngram.merge.bias"], dtype=F64
    )
    return merged  # [w_h, w_w, D]


def _nstb_naive(x, store, prefix, cfg, stage, h, w, shifted):
    d, m = cfg.dim, cfg.window
    s = cfg.shift if shifted else 0
    z_ng = _ngram_context_naive(x, store, prefix, cfg, h, w)

    grid = np.asarray(x, dtype=F64).reshape(h, w, d)
    if s:
        rolled = np.zeros_like(grid)
        for i in range(h):
            for j in range(w):
                rolled[i, j] = grid[(i + s) % h, (j + s) % w]
        grid = rolled

    bp = _NaiveBlockParams(store, prefix, cfg.heads[stage], cfg.attention)
    attn_grid = np.zeros_like(grid)
    for a in range(h // m):
        for b in range(w // m):
            win = np.zeros((m * m, d), dtype=F64)
            region = []
            for t in range(m * m):
                pi, pj = a * m + t // m, b * m + t % m
                win[t] = grid[pi, pj] + z_ng[a, b]
                region.append(_region_label(pi, pj, h, w, m, s) if s else 0)
            res = window_attention_naive(win, bp, m, region if s else None)
            for t in range(m * m):
                attn_grid[a * m + t // m, b * m + t % m] = res[t]

    if s:
        unrolled = np.zeros_like(attn_grid)
        for i in range(h):
            for j in range(w):
                unrolled[(i + s) % h, (j + s) % w] = attn_grid[i, j]
        attn_grid = unrolled

    x = np.asarray(x, dtype=F64) + _ln_naive(
        attn_grid.reshape(h * w, d), store[f"{prefix}.norm1.gamma"], store[f"{prefix}.norm1.beta"]
    )
    hidden = _gelu_naive(x @ np.asarray(store[f"{prefix}.ffn.w1"], dtype=F64) + np.asarray(store[f"{prefix}.ffn.b1"], dtype=F64))
    ffn = hidden @ np.asarray(store[f"{prefix}.ffn.w2"], dtype=F64) + np.asarray(store[f"{prefix}.ffn.b2"], dtype=F64)
    return x + _ln_naive(ffn, store[f"{prefix}.norm2.gamma"], store[f"{prefix}.norm2.beta"])


def _patch_merge_naive(x, store, stage_name, h, w, d):
    grid = np.asarray(x, dtype=F64).reshape(h, w, d)
    cat = np.zeros((h // 2, w // 2, 4 * d), dtype=F64)
    for i in range(h // 2):
        for j in range(w // 2):
            cat[i, j, 0 * d:1 * d] = grid[2 * i, 2 * j]
            cat[i, j, 1 * d:2 * d] = grid[2 * i + 1, 2 * j]
            cat[i, j, 2 * d:3 * d] = grid[2 * i, 2 * j + 1]
            cat[i, j, 3 * d:4 * d] = grid[2 * i + 1, 2 * j + 1]
    flat = cat.reshape((h // 2) * (w // 2), 4 * d)
    normed = _ln_naive(flat, store[f"{stage_name}.merge.norm.gamma"], store[f"{stage_name}.merge.norm.beta"])
    return normed @ np.asarray(store[f"{stage_name}.merge.weight"], dtype=F64)


def _tokens(grid):
    return grid.transpose(1, 2, 0).reshape(-1, grid.shape[0])


def _grid(tokens, h, w):
    return np.asarray(tokens, dtype=F64).reshape(h, w, -1).transpose(2, 0, 1)


def micro_forward_naive(image, store: WeightStore, cfg: ModelConfig, stats=None):
    """Straight-line float64 transcription of the full forward pass.

    Accepts an HxWx3 array in [0, 1] whose extents are multiples of the
    config divisor (no padding branch); returns the de-normalized SR array.
    """
    img = np.asarray(image, dtype=F64)
    h, w = img.shape[:2]
    if h % cfg.divisor or w % cfg.divisor:
        raise ValueError(f"transcription oracle expects extents divisible by {cfg.divisor}")
    mean = np.zeros(3) if stats is None else np.asarray(stats.mean, dtype=F64)
    std = np.ones(3) if stats is None else np.asarray(stats.std, dtype=F64)
    x = (img - mean) / std

    d = cfg.dim
    zs_grid = conv2d_naive(x.transpose(2, 0, 1), store["shallow.weight"], store["shallow.bias"], stride=1, pad=1)
    z_s = _tokens(zs_grid)

    res = [(h, w), (h // 2, w // 2), (h // 4, w // 4)]
    stage_outs = []
    merged = None
    for i in range(3):
        hi, wi = res[i]
        name = STAGE_NAMES[i]
        if i == 0:
            entry = z_s.copy()
        elif i == 1:
            pooled = _maxpool2_naive(_grid(z_s, h, w))
            entry = np.concatenate([merged, _tokens(pooled)], axis=-1) @ np.asarray(
                store["enc2.cascade.weight"], dtype=F64
            )
        else:
            zs_p = _maxpool2_naive(_maxpool2_naive(_grid(z_s, h, w)))
            s1_p = _maxpool2_naive(_maxpool2_naive(_grid(stage_outs[0], h, w)))
            entry = np.concatenate([merged, _tokens(zs_p), _tokens(s1_p)], axis=-1) @ np.asarray(
                store["enc3.cascade.weight"], dtype=F64
            )
        out = entry
        for k in range(1, cfg.depths[i] + 1):
            shifted = k % 2 == 0 and cfg.shift > 0
            out = _nstb_naive(out, store, f"{name}.block{k}", cfg, i, hi, wi, shifted) + out
        stage_outs.append(out)
        if i < 2:
            merged = _patch_merge_naive(out + entry, store, name, hi, wi, d)

    # bottleneck
    planes = []
    zsg = _grid(z_s, h, w)
    for i in range(3):
        f = 2 ** i
        pooled = zsg
        for _ in range(i):
            pooled = _maxpool2_naive(pooled)
        pooled = np.where(pooled >= 0, pooled, 0.01 * pooled)
        grid_i = _grid(stage_outs[i], h // f, w // f) + pooled
        planes.append(_pixel_shuffle_naive(grid_i, f))
    cat = np.concatenate(planes, axis=0)
    dw = conv2d_naive(cat, store["scdp.dw.weight"], store["scdp.dw.bias"], stride=1, pad=1, groups=cat.shape[0])
    z = _tokens(_gelu_naive(dw)) @ np.asarray(store["scdp.pw.weight"], dtype=F64) + np.asarray(
        store["scdp.pw.bias"], dtype=F64
    )
    z_scdp = _ln_naive(z, store["scdp.norm.gamma"], store["scdp.norm.beta"])

    out = z_scdp + stage_outs[0]
    for k in range(1, cfg.depths[3] + 1):
        shifted = k % 2 == 0 and cfg.shift > 0
        out = _nstb_naive(out, store, f"dec.block{k}", cfg, 3, h, w, shifted) + out
    z_dec = _ln_naive(out, store["dec.norm.gamma"], store["dec.norm.beta"])

    recon_in = _grid(z_s + z_dec, h, w)
    up = conv2d_naive(recon_in, store["recon.conv1.weight"], store["recon.conv1.bias"], stride=1, pad=1)
    up = _pixel_shuffle_naive(up, cfg.scale)
    sr = conv2d_naive(up, store["recon.conv2.weight"], store["recon.conv2.bias"], stride=1, pad=1)
    return sr.transpose(1, 2, 0) * std + mean
