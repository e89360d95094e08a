"""Gradient-free fit of the micro graph on one patch pair.

Demonstrates that the graph is optimizable without an autodiff engine:
simultaneous-perturbation stochastic approximation (SPSA) on the L1 pixel
loss between the model output and a target patch. One run uses a single
synthetic 16x16 -> 32x32 pair derived from a seeded smooth pattern.
"""

from __future__ import annotations

import numpy as np

from .config import micro_config
from .metrics import ImageBuffer, bicubic_resize, l1_loss
from .model import ngswin_forward_raw
from .ops import F32
from .weights import WeightStore, init_weights, param_specs

# Spall's standard gain schedule; coefficients tuned on the pinned seed.
ALPHA = 0.602
GAMMA = 0.101
A_COEF = 0.02
C_COEF = 0.01
DIVERGENCE_FACTOR = 10.0


def make_patch_pair(seed: int):
    """Seeded smooth 32x32 HR patch and its bicubic half-scale LR."""
    rng = np.random.default_rng(seed)
    base = rng.random((4, 4, 3))
    hr = bicubic_resize(ImageBuffer(np.clip(0.5 + 0.45 * (base - 0.5), 0, 1).astype(F32)), 8.0)
    hr = ImageBuffer(hr.data)                     # clamped [0,1], 32x32x3
    lr = bicubic_resize(hr, 0.5)
    return hr, lr


def _flatten(store: WeightStore):
    return np.concatenate([t.ravel() for _, t in store.items()]).astype(np.float64)


def _unflatten(vec, cfg):
    store = WeightStore()
    off = 0
    for path, shape in param_specs(cfg):
        size = 1
        for s in shape:
            size *= s
        store[path] = vec[off:off + size].reshape(shape).astype(F32)
        off += size
    return store


def run_microfit(steps: int = 300, seed: int = 42):
    """SPSA on the micro config; returns (trace, diverged).

    ``trace[k]`` is the L1 loss at the parameters after k update steps, so
    ``trace[0]`` is the loss of the initial forward and the trace has
    ``steps + 1`` entries.
    """
    cfg = micro_config(scale=2)
    hr, lr = make_patch_pair(seed)
    target = hr.data.astype(np.float64)
    store0 = init_weights(cfg, seed)
    theta = _flatten(store0)
    rng = np.random.default_rng(seed + 1)

    def loss(vec):
        out = ngswin_forward_raw(lr.data, _unflatten(vec, cfg), cfg)
        return l1_loss(target, out.astype(np.float64))

    trace = [loss(theta)]
    big_a = 0.1 * max(steps, 1)
    diverged = False
    for k in range(1, steps + 1):
        ck = C_COEF / k ** GAMMA
        ak = A_COEF / (big_a + k) ** ALPHA
        delta = rng.integers(0, 2, theta.size).astype(np.float64) * 2.0 - 1.0
        lp = loss(theta + ck * delta)
        lm = loss(theta - ck * delta)
        ghat = (lp - lm) / (2.0 * ck) * delta
        theta = theta - ak * ghat
        cur = loss(theta)
        trace.append(cur)
        if cur > DIVERGENCE_FACTOR * trace[0]:
            diverged = True
            break
    return trace, diverged
