"""Dense float32 tensor kernels.

Every tensor in this package is a plain ``numpy.ndarray`` of dtype float32
with an explicit shape; these functions are the complete kernel set the
model graph is built from. All kernels are pure and deterministic:
identical inputs produce bitwise identical outputs.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf

F32 = np.float32

LEAKY_SLOPE = 0.01


def _as_f32(x) -> np.ndarray:
    x = np.asarray(x)
    return x if x.dtype == np.float32 else x.astype(np.float32)


def conv2d(x, weight, bias=None, stride: int = 1, pad: int = 0, groups: int = 1):
    """2-D cross-correlation (no kernel flip).

    Args:
        x: input of shape [C_in, H, W].
        weight: kernel of shape [C_out, C_in // groups, k, k].
        bias: optional [C_out].
        stride, pad, groups: usual convolution parameters; ``pad`` is
            zero-padding applied symmetrically.

    Returns:
        [C_out, H', W'] with H' = (H + 2*pad - k) // stride + 1.
    """
    x = _as_f32(x)
    weight = _as_f32(weight)
    if x.ndim != 3 or weight.ndim != 4:
        raise ValueError(f"conv2d expects 3-d input and 4-d weight, got {x.shape} and {weight.shape}")
    c_in, h, w = x.shape
    c_out, c_g, kh, kw = weight.shape
    if kh != kw:
        raise ValueError(f"conv2d kernels must be square, got {kh}x{kw}")
    k = kh
    if c_in % groups or c_out % groups:
        raise ValueError(f"groups={groups} must divide C_in={c_in} and C_out={c_out}")
    if c_g != c_in // groups:
        raise ValueError(f"weight expects {c_g} channels per group, input supplies {c_in // groups}")
    if h + 2 * pad < k or w + 2 * pad < k:
        raise ValueError(f"kernel {k} exceeds padded input {h + 2 * pad}x{w + 2 * pad}")

    if pad:
        x = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))
    hp, wp = x.shape[1:]
    ho = (hp - k) // stride + 1
    wo = (wp - k) // stride + 1

    # im2col via stride tricks, then one sgemm per group.
    sc, sh, sw = x.strides
    cols = np.lib.stride_tricks.as_strided(
        x,
        shape=(c_in, ho, wo, k, k),
        strides=(sc, sh * stride, sw * stride, sh, sw),
    )
    out = np.empty((c_out, ho, wo), dtype=F32)
    cpg_out = c_out // groups
    cpg_in = c_in // groups
    for g in range(groups):
        patch = cols[g * cpg_in:(g + 1) * cpg_in]          # [cpg_in, ho, wo, k, k]
        patch = patch.transpose(1, 2, 0, 3, 4).reshape(ho * wo, cpg_in * k * k)
        wmat = weight[g * cpg_out:(g + 1) * cpg_out].reshape(cpg_out, cpg_in * k * k)
        out[g * cpg_out:(g + 1) * cpg_out] = (patch @ wmat.T).T.reshape(cpg_out, ho, wo)
    if bias is not None:
        bias = _as_f32(bias)
        if bias.shape != (c_out,):
            raise ValueError(f"bias shape {bias.shape} does not match C_out={c_out}")
        out += bias[:, None, None]
    return out


def softmax_lastdim(x):
    """Numerically stabilized softmax over the last axis."""
    x = _as_f32(x)
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def layer_norm(x, gamma, beta, eps: float = 1e-5):
    """Layer normalization over the last axis, followed by affine."""
    x = _as_f32(x)
    gamma = _as_f32(gamma)
    beta = _as_f32(beta)
    mean = x.mean(axis=-1, keepdims=True)
    centered = x - mean
    var = np.mean(centered * centered, axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + F32(eps))
    return centered * inv * gamma + beta


def pixel_shuffle(x, s: int):
    """Rearrange [C*s^2, H, W] -> [C, s*H, s*W]; pure index shuffle."""
    x = np.asarray(x)
    c2, h, w = x.shape
    if c2 % (s * s):
        raise ValueError(f"channels {c2} not divisible by s^2={s * s}")
    c = c2 // (s * s)
    # out[c, s*i+di, s*j+dj] = in[c*s^2 + di*s + dj, i, j]
    return x.reshape(c, s, s, h, w).transpose(0, 3, 1, 4, 2).reshape(c, h * s, w * s)


def pixel_unshuffle(x, s: int):
    """Inverse of :func:`pixel_shuffle`."""
    x = np.asarray(x)
    c, hs, ws = x.shape
    if hs % s or ws % s:
        raise ValueError(f"extents {hs}x{ws} not divisible by s={s}")
    h, w = hs // s, ws // s
    return x.reshape(c, h, s, w, s).transpose(0, 2, 4, 1, 3).reshape(c * s * s, h, w)


def pool2d(x, k: int, mode: str = "max"):
    """Non-overlapping k x k pooling over [C, H, W]."""
    x = _as_f32(x)
    c, h, w = x.shape
    if h % k or w % k:
        raise ValueError(f"extents {h}x{w} not divisible by pool size {k}")
    blocks = x.reshape(c, h // k, k, w // k, k)
    if mode == "max":
        return blocks.max(axis=(2, 4))
    if mode == "avg":
        return blocks.mean(axis=(2, 4), dtype=F32)
    raise ValueError(f"unknown pool mode {mode!r}")


def gelu(x):
    """Exact erf-based GELU."""
    x = _as_f32(x)
    return (x * 0.5 * (1.0 + erf(x / np.sqrt(2.0)))).astype(F32)


def leaky_relu(x, slope: float = LEAKY_SLOPE):
    x = _as_f32(x)
    return np.where(x >= 0, x, F32(slope) * x)
