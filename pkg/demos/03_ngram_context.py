#!/usr/bin/env python3
"""The N-Gram context machinery, step by step on a tiny feature map.

Window attention only ever sees one M x M window. The context branch gives
each window a summary of its neighborhood: embed every window to a single
vector (uni-Gram), pad the window grid by reflection, attend over each
N x N patch of neighbors in both diagonal directions with shared weights,
and add the merged result back onto every pixel of the window.
"""

import numpy as np

from ngsr import seq_refl_win_pad, unigram_embed, window_partition, windowwise_add
from ngsr.config import COSINE
from ngsr.ngram import NGramParams, ngram_context, sliding_wsa

rng = np.random.default_rng(0)
D, M, N = 8, 4, 2
h = w = 16

x = rng.standard_normal((h * w, D)).astype(np.float32)

params = NGramParams(
    unigram_w=rng.standard_normal((D // 2, 2, M, M)).astype(np.float32) * 0.2,
    qkv_w=rng.standard_normal((D // 2, 3 * D // 2)).astype(np.float32) * 0.2,
    qkv_b=np.zeros(3 * D // 2, dtype=np.float32),
    out_w=rng.standard_normal((D // 2, D // 2)).astype(np.float32) * 0.2,
    out_b=np.zeros(D // 2, dtype=np.float32),
    tau=np.array([0.5], dtype=np.float32),
    merge_w=rng.standard_normal((D, D)).astype(np.float32) * 0.2,
    merge_b=np.zeros(D, dtype=np.float32),
    n=N,
    mode=COSINE,
)

# step 1: one vector per window, channels halved
u = unigram_embed(x, params.unigram_w, h, w, M)
print(f"uni-Gram embedding: {h}x{w}x{D} tokens -> {u.shape} (channels {D}->{D // 2}, window grid)")

# step 2: reflect-pad the grid, then slide an N x N attention over it
fwd_pad = seq_refl_win_pad(u, N, "forward")
bwd_pad = seq_refl_win_pad(u, N, "backward")
print(f"padded grids: forward {fwd_pad.shape}, backward {bwd_pad.shape}")
print("padded row indices reuse interior rows, never invent values:")
print("  source col 0:", np.round(u[0, :, 0], 3))
print("  forward col 0:", np.round(fwd_pad[0, :, 0], 3))

f = sliding_wsa(fwd_pad, params, N)
b = sliding_wsa(bwd_pad, params, N)
print(f"sliding attention output per direction: {f.shape}")

# steps 3-4: merge directions, add one context vector to each window
z = ngram_context(x, params, h, w, M)
print(f"merged context: {z.shape}")

wins = window_partition(x, h, w, M)
biased = windowwise_add(wins, z)
delta = biased.windows[0] - wins.windows[0]
print("every pixel of window (0,0) moved by the same vector:",
      bool(np.allclose(delta, z[:, 0, 0], atol=1e-5)))
