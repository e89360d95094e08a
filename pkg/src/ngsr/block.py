"""N-Gram Swin Transformer block.

Block pipeline: N-Gram context -> (optional cyclic shift + mask) -> window
partition -> window-wise context add -> scaled-cosine window attention with
relative position bias -> merge/unshift -> residual post-normalization ->
FFN branch with the same residual post-normalization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import COSINE, DOT
from .ngram import (
    COS_EPS,
    TAU_MIN,
    NGramParams,
    WindowGrid,
    cyclic_shift,
    cyclic_unshift,
    ngram_context,
    window_merge,
    window_partition,
    windowwise_add,
)
from .ops import F32, gelu, layer_norm, softmax_lastdim

MASK_FILL = -1e4


@dataclass
class NstbParams:
    """Weights of one block. Attention runs at ``width = heads * (D // heads)``
    which may fall below D when the head count does not divide it; the output
    projection maps width back to D."""

    ngram: NGramParams
    qkv_w: np.ndarray              # [D, 3*width]
    qkv_b: np.ndarray              # [3*width]
    out_w: np.ndarray              # [width, D]
    out_b: np.ndarray              # [D]
    bias_table: np.ndarray         # [(2M-1)^2, heads]
    tau: np.ndarray | None         # [heads], None in dot mode
    ffn_w1: np.ndarray             # [D, F]
    ffn_b1: np.ndarray
    ffn_w2: np.ndarray             # [F, D]
    ffn_b2: np.ndarray
    norm1_g: np.ndarray
    norm1_b: np.ndarray
    norm2_g: np.ndarray
    norm2_b: np.ndarray
    heads: int
    mode: str = COSINE


def cosine_similarity(q, k):
    """Pairwise cosine similarity between rows of q and k.

    Row norms get an epsilon (1e-8) so zero rows yield 0 instead of NaN.
    """
    q = np.asarray(q, dtype=F32)
    k = np.asarray(k, dtype=F32)
    qn = q / (np.linalg.norm(q, axis=-1, keepdims=True) + F32(COS_EPS))
    kn = k / (np.linalg.norm(k, axis=-1, keepdims=True) + F32(COS_EPS))
    return qn @ np.swapaxes(kn, -1, -2)


def relative_position_index(m: int) -> np.ndarray:
    """[M^2, M^2] map from pixel pair to bias-table row.

    index(i, j) = (dy + M - 1) * (2M - 1) + (dx + M - 1) for displacement
    (dy, dx) = coords(i) - coords(j); values lie in [0, (2M-1)^2).
    """
    coords = np.stack(np.meshgrid(np.arange(m), np.arange(m), indexing="ij"), axis=-1).reshape(-1, 2)
    delta = coords[:, None, :] - coords[None, :, :]
    return ((delta[..., 0] + m - 1) * (2 * m - 1) + (delta[..., 1] + m - 1)).astype(np.int64)


def shift_attention_mask(h: int, w: int, m: int, s: int) -> np.ndarray:
    """Additive attention mask for shifted windows, [w_h*w_w, M^2, M^2].

    Zero for pixel pairs from the same pre-shift region, a large negative
    value for pairs the cyclic shift made spatially non-adjacent. All zero
    when s == 0.
    """
    n_win = (h // m) * (w // m)
    if s == 0:
        return np.zeros((n_win, m * m, m * m), dtype=F32)
    region = np.zeros((h, w), dtype=np.int32)
    slices = (slice(0, -m), slice(-m, -s), slice(-s, None))
    cnt = 0
    for hs in slices:
        for ws in slices:
            region[hs, ws] = cnt
            cnt += 1
    grid = window_partition(region.reshape(h * w, 1).astype(F32), h, w, m)
    labels = grid.windows[..., 0]                          # [n_win, M^2]
    diff = labels[:, :, None] - labels[:, None, :]
    return np.where(diff == 0, F32(0), F32(MASK_FILL))


def _multihead_attention(wins, p: NstbParams, m: int, mask=None, return_weights=False):
    """Batched window attention: wins [B, T, D] -> [B, T, D].

    Per head: softmax(cos(Q, K) / tau + B [+ mask]) V in cosine mode,
    softmax(Q K^T / sqrt(d) + B [+ mask]) V in dot mode; heads concatenated,
    output projection applied.
    """
    b, t, d = wins.shape
    heads = p.heads
    width = p.out_w.shape[0]
    hd = width // heads

    qkv = wins @ p.qkv_w + p.qkv_b                          # [B, T, 3*width]
    qkv = qkv.reshape(b, t, 3, heads, hd).transpose(2, 0, 3, 1, 4)
    q, k, v = qkv[0], qkv[1], qkv[2]                        # [B, heads, T, hd]

    if p.mode == COSINE:
        qn = q / (np.linalg.norm(q, axis=-1, keepdims=True) + F32(COS_EPS))
        kn = k / (np.linalg.norm(k, axis=-1, keepdims=True) + F32(COS_EPS))
        tau = np.maximum(p.tau, F32(TAU_MIN)).astype(F32)   # [heads]
        logits = (qn @ kn.transpose(0, 1, 3, 2)) / tau[None, :, None, None]
    elif p.mode == DOT:
        logits = (q @ k.transpose(0, 1, 3, 2)) / F32(np.sqrt(hd))
    else:
        raise ValueError(f"unknown attention mode {p.mode!r}")

    idx = relative_position_index(m)
    bias = p.bias_table[idx]                                # [T, T, heads]
    logits = logits + bias.transpose(2, 0, 1)[None]
    if mask is not None:
        logits = logits + mask[:, None, :, :]

    weights = softmax_lastdim(logits)
    out = (weights @ v).transpose(0, 2, 1, 3).reshape(b, t, width)
    out = out @ p.out_w + p.out_b
    if return_weights:
        return out, weights
    return out


def scaled_cosine_wsa(x, p: NstbParams, m: int, mask=None):
    """Attention for a single window [T, D]; ``mask`` optional [T, T]."""
    x = np.asarray(x, dtype=F32)
    wins = x[None]
    batched_mask = None if mask is None else np.asarray(mask, dtype=F32)[None]
    return _multihead_attention(wins, p, m, batched_mask)[0]


def nstb_forward(x, p: NstbParams, h: int, w: int, m: int, shifted: bool = False, shift: int = 4):
    """One block over tokens [h*w, D]; resolution preserved."""
    x = np.asarray(x, dtype=F32)
    z_ng = ngram_context(x, p.ngram, h, w, m)

    s = shift if shifted else 0
    grid_in = x.reshape(h, w, -1)
    shifted_grid = cyclic_shift(grid_in, s)
    mask = shift_attention_mask(h, w, m, s) if s else None

    wins = window_partition(shifted_grid.reshape(h * w, -1), h, w, m)
    wins = windowwise_add(wins, z_ng)
    attended = _multihead_attention(wins.windows, p, m, mask)
    merged = window_merge(WindowGrid(attended, wins.w_h, wins.w_w, m)).reshape(h, w, -1)
    branch = cyclic_unshift(merged, s).reshape(h * w, -1)

    x = x + layer_norm(branch, p.norm1_g, p.norm1_b)
    ffn = gelu(x @ p.ffn_w1 + p.ffn_b1) @ p.ffn_w2 + p.ffn_b2
    return x + layer_norm(ffn, p.norm2_g, p.norm2_b)
