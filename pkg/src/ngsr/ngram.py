"""N-Gram context over local windows.

A uni-Gram is one non-overlapping M x M window's embedding vector; the
N-Gram context summarizes each window's N x N neighborhood of uni-Grams
through sliding window self-attention and is added window-wise to the
partitioned feature before window attention runs.

Pipeline (for feature x of shape [h*w, D]):
  1. ``unigram_embed``   — M x M stride-M group conv, channels D -> D/2.
  2. ``seq_refl_win_pad`` + ``sliding_wsa`` in both directions (forward =
     lower-right neighbors, backward = upper-left), sharing weights.
  3. concat + 1x1 merge  -> context z_ng of shape [D, w_h, w_w].
  4. ``windowwise_add``  — z_ng[:, a, b] added to every pixel of window (a, b).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import COSINE, DOT
from .ops import F32, conv2d, softmax_lastdim

TAU_MIN = 0.01
COS_EPS = 1e-8


@dataclass
class NGramParams:
    """Weights of one block's context branch.

    ``qkv_w``/``qkv_b`` and ``out_w``/``out_b`` are the sliding-WSA
    projections at width D/2, shared by the forward and backward passes.
    ``tau`` is the learnable temperature (clamped to >= 0.01 at read time)
    used in cosine mode; dot mode has no temperature.
    """

    unigram_w: np.ndarray          # [D/2, 2, M, M]
    qkv_w: np.ndarray              # [D/2, 3*D/2]
    qkv_b: np.ndarray              # [3*D/2]
    out_w: np.ndarray              # [D/2, D/2]
    out_b: np.ndarray              # [D/2]
    tau: np.ndarray | None         # scalar array, None in dot mode
    merge_w: np.ndarray            # [D, D]
    merge_b: np.ndarray            # [D]
    n: int
    mode: str = COSINE


@dataclass
class WindowGrid:
    """Feature map partitioned into non-overlapping M x M windows.

    ``windows`` has shape [w_h * w_w, M*M, D]; window (a, b) sits at index
    a * w_w + b and is row-major within the window.
    """

    windows: np.ndarray
    w_h: int
    w_w: int
    m: int


def window_partition(x, h: int, w: int, m: int) -> WindowGrid:
    """Split tokens [h*w, D] into the window grid."""
    x = np.asarray(x)
    if h % m or w % m:
        raise ValueError(f"resolution {h}x{w} not divisible by window size {m}")
    d = x.shape[-1]
    grid = x.reshape(h // m, m, w // m, m, d)
    wins = grid.transpose(0, 2, 1, 3, 4).reshape((h // m) * (w // m), m * m, d)
    return WindowGrid(wins, h // m, w // m, m)


def window_merge(grid: WindowGrid):
    """Inverse of :func:`window_partition`; bitwise round-trip."""
    w_h, w_w, m = grid.w_h, grid.w_w, grid.m
    d = grid.windows.shape[-1]
    x = grid.windows.reshape(w_h, w_w, m, m, d).transpose(0, 2, 1, 3, 4)
    return x.reshape(w_h * m * w_w * m, d)


def cyclic_shift(x, s: int):
    """Torus roll of [h, w, D] by (-s, -s); roll by +s restores the input."""
    if s == 0:
        return x
    return np.roll(x, (-s, -s), axis=(0, 1))


def cyclic_unshift(x, s: int):
    if s == 0:
        return x
    return np.roll(x, (s, s), axis=(0, 1))


def seq_refl_win_pad(u, n: int, direction: str = "forward"):
    """Window-granularity reflection padding of the uni-Gram grid.

    Forward appends n-1 rows/cols at bottom/right; backward prepends at
    top/left. Padded entries copy interior neighbors (reflect excluding the
    edge itself), so every padded window is a copy of some source window.
    """
    u = np.asarray(u)
    if n < 1:
        raise ValueError(f"ngram size must be >= 1, got {n}")
    if n == 1:
        return u
    _, gh, gw = u.shape
    if gh < n or gw < n:
        raise ValueError(f"uni-Gram grid {gh}x{gw} smaller than ngram size {n}")
    p = n - 1
    if direction == "forward":
        widths = ((0, 0), (0, p), (0, p))
    elif direction == "backward":
        widths = ((0, 0), (p, 0), (p, 0))
    else:
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
    return np.pad(u, widths, mode="reflect")


def _patch_tokens(u_pad, n: int):
    """All N x N patches of the padded grid as [w_h*w_w, N*N, C]."""
    c, hp, wp = u_pad.shape
    gh, gw = hp - n + 1, wp - n + 1
    views = [u_pad[:, di:di + gh, dj:dj + gw] for di in range(n) for dj in range(n)]
    tok = np.stack(views, axis=0)                    # [N*N, C, gh, gw]
    return tok.transpose(2, 3, 0, 1).reshape(gh * gw, n * n, c), gh, gw


def sliding_wsa(u_pad, params: NGramParams, n: int):
    """Attention over each N x N uni-Gram patch, average-pooled per patch.

    Single attention head at width C = D/2; cosine mode uses the clamped
    temperature, dot mode the usual 1/sqrt(C) scaling. No positional bias.
    Returns [w_h, w_w, C].
    """
    u_pad = np.asarray(u_pad, dtype=F32)
    c = u_pad.shape[0]
    tok, gh, gw = _patch_tokens(u_pad, n)
    qkv = tok @ params.qkv_w + params.qkv_b          # [B, N*N, 3C]
    q, k, v = qkv[..., :c], qkv[..., c:2 * c], qkv[..., 2 * c:]
    if params.mode == COSINE:
        qn = q / (np.linalg.norm(q, axis=-1, keepdims=True) + F32(COS_EPS))
        kn = k / (np.linalg.norm(k, axis=-1, keepdims=True) + F32(COS_EPS))
        tau = np.maximum(params.tau, F32(TAU_MIN)).astype(F32)
        logits = (qn @ kn.transpose(0, 2, 1)) / tau
    elif params.mode == DOT:
        logits = (q @ k.transpose(0, 2, 1)) / F32(np.sqrt(c))
    else:
        raise ValueError(f"unknown attention mode {params.mode!r}")
    attended = softmax_lastdim(logits) @ v           # [B, N*N, C]
    pooled = attended.mean(axis=1, dtype=F32)        # [B, C]
    out = pooled @ params.out_w + params.out_b
    return out.reshape(gh, gw, c)


def unigram_embed(x, unigram_w, h: int, w: int, m: int):
    """M x M stride-M channel-reducing group convolution, D -> D/2.

    Group g maps source channels (2g, 2g+1) to output channel g; bias-free.
    Returns [D/2, h/M, w/M].
    """
    x = np.asarray(x, dtype=F32)
    d = x.shape[-1]
    if d % 2:
        raise ValueError(f"channel count {d} must be even")
    grid = x.reshape(h, w, d).transpose(2, 0, 1)
    return conv2d(grid, unigram_w, None, stride=m, pad=0, groups=d // 2)


def ngram_context(x, params: NGramParams, h: int, w: int, m: int):
    """Full context: embed, pad+attend both directions, concat, 1x1 merge.

    The effective context size is clamped to the available window grid, so a
    resolution with fewer than N windows per axis degrades gracefully toward
    the uni-Gram case (where forward and backward features coincide).
    Returns z_ng of shape [D, w_h, w_w].
    """
    u = unigram_embed(x, params.unigram_w, h, w, m)
    n = min(params.n, u.shape[1], u.shape[2])
    fwd = sliding_wsa(seq_refl_win_pad(u, n, "forward"), params, n)
    bwd = sliding_wsa(seq_refl_win_pad(u, n, "backward"), params, n)
    both = np.concatenate([fwd, bwd], axis=-1)       # [w_h, w_w, D]
    merged = both @ params.merge_w + params.merge_b
    return merged.transpose(2, 0, 1)


def windowwise_add(grid: WindowGrid, z_ng):
    """Add z_ng[:, a, b] to all pixels of window (a, b)."""
    z_ng = np.asarray(z_ng, dtype=F32)
    d, gh, gw = z_ng.shape
    if (gh, gw) != (grid.w_h, grid.w_w):
        raise ValueError(f"context grid {gh}x{gw} does not match window grid {grid.w_h}x{grid.w_w}")
    bias = z_ng.transpose(1, 2, 0).reshape(gh * gw, 1, d)
    return WindowGrid(grid.windows + bias, grid.w_h, grid.w_w, grid.m)
