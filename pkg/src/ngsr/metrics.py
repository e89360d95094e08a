"""Image quality evaluation toolkit.

Images move through this module as :class:`ImageBuffer` values: H x W x C
arrays of reals in [0, 1] with a color tag. PSNR/SSIM follow the common
super-resolution protocol: convert to the BT.601 studio-swing Y channel,
crop a border, quantize to the 8-bit scale, then measure.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .ops import F32

RGB = "rgb"
Y = "y"

# BT.601 studio swing: Y in [16, 235] for inputs in [0, 1].
_Y_COEF = (65.481, 128.553, 24.966)
_Y_OFFSET = 16.0


@dataclass
class ImageBuffer:
    """H x W x C image in [0, 1]; C is 3 (rgb) or 1 (y)."""

    data: np.ndarray
    color: str = RGB

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=F32)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ValueError(f"image must be HxWx1 or HxWx3, got shape {arr.shape}")
        if self.color not in (RGB, Y):
            raise ValueError(f"color tag must be '{RGB}' or '{Y}', got {self.color!r}")
        if (self.color == RGB) != (arr.shape[2] == 3):
            raise ValueError(f"color tag {self.color!r} inconsistent with {arr.shape[2]} channels")
        self.data = np.clip(arr, 0.0, 1.0)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass
class NormStats:
    """Per-RGB-channel mean and std used to standardize model inputs."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=F32).reshape(3)
        self.std = np.asarray(self.std, dtype=F32).reshape(3)
        if np.any(self.std <= 0):
            raise ValueError(f"std must be positive per channel, got {self.std}")

    @classmethod
    def neutral(cls) -> "NormStats":
        return cls(np.zeros(3), np.ones(3))

    @classmethod
    def load(cls, path: str) -> "NormStats":
        with open(path) as fh:
            d = json.load(fh)
        return cls(d["mean"], d["std"])

    def save(self, path: str):
        with open(path, "w") as fh:
            json.dump({"mean": [float(v) for v in self.mean], "std": [float(v) for v in self.std]}, fh)


def normalize(img: ImageBuffer, stats: NormStats) -> np.ndarray:
    """(x - mean) / std per channel; returns a raw HxWx3 float32 array."""
    if img.color != RGB:
        raise ValueError("normalize expects an RGB image")
    return ((img.data - stats.mean) / stats.std).astype(F32)


def denormalize(x: np.ndarray, stats: NormStats) -> np.ndarray:
    """Inverse of :func:`normalize` on a raw HxWx3 array."""
    return (np.asarray(x, dtype=F32) * stats.std + stats.mean).astype(F32)


def l1_loss(a, b) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"l1_loss shape mismatch: {a.shape} vs {b.shape}")
    return float(np.mean(np.abs(a.astype(np.float64) - b.astype(np.float64))))


def rgb_to_y(img: ImageBuffer) -> ImageBuffer:
    """Luma channel: Y255 = 65.481 R + 128.553 G + 24.966 B + 16, stored /255."""
    if img.color != RGB:
        raise ValueError("rgb_to_y expects an RGB image")
    r, g, b = img.data[..., 0], img.data[..., 1], img.data[..., 2]
    y255 = _Y_COEF[0] * r + _Y_COEF[1] * g + _Y_COEF[2] * b + _Y_OFFSET
    return ImageBuffer((y255 / 255.0)[:, :, None], color=Y)


def _to_y255_quantized(img: ImageBuffer, crop: int) -> np.ndarray:
    """Cropped Y plane on the 8-bit scale, rounded half away from zero."""
    y = img if img.color == Y else rgb_to_y(img)
    plane = np.ascontiguousarray(y.data[:, :, 0], dtype=np.float64) * 255.0
    if crop:
        if 2 * crop >= plane.shape[0] or 2 * crop >= plane.shape[1]:
            raise ValueError(f"crop {crop} leaves no pixels for extents {plane.shape}")
        plane = plane[crop:-crop, crop:-crop]
    # contiguous layout so the strided filters accumulate identically for
    # value-identical inputs regardless of their memory order
    return np.ascontiguousarray(np.floor(plane + 0.5))


def psnr(a: ImageBuffer, b: ImageBuffer, crop: int = 0) -> float:
    """Y-channel PSNR in dB; identical images give +inf."""
    if (a.height, a.width) != (b.height, b.width):
        raise ValueError(f"extent mismatch: {a.height}x{a.width} vs {b.height}x{b.width}")
    ya = _to_y255_quantized(a, crop)
    yb = _to_y255_quantized(b, crop)
    mse = float(np.mean((ya - yb) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0 ** 2 / mse)


def _gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    half = (size - 1) / 2.0
    coords = np.arange(size, dtype=np.float64) - half
    g = np.exp(-(coords ** 2) / (2.0 * sigma ** 2))
    return g / g.sum()


def _filter_valid(x: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Separable 'valid' correlation with a 1-d kernel applied to both axes."""
    n = k.size
    s0, s1 = x.strides
    rows = np.lib.stride_tricks.as_strided(
        x, shape=(x.shape[0] - n + 1, x.shape[1], n), strides=(s0, s1, s0)
    ) @ k
    s0, s1 = rows.strides
    return np.lib.stride_tricks.as_strided(
        rows, shape=(rows.shape[0], rows.shape[1] - n + 1, n), strides=(s0, s1, s1)
    ) @ k


def ssim(a: ImageBuffer, b: ImageBuffer, crop: int = 0) -> float:
    """Mean structural similarity on the Y channel.

    11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03, dynamic range 255,
    averaged over valid window positions only.
    """
    if (a.height, a.width) != (b.height, b.width):
        raise ValueError(f"extent mismatch: {a.height}x{a.width} vs {b.height}x{b.width}")
    x = _to_y255_quantized(a, crop)
    y = _to_y255_quantized(b, crop)
    if min(x.shape) < 11:
        raise ValueError(f"image too small for 11x11 SSIM window after crop: {x.shape}")
    k = _gaussian_window()
    c1 = (0.01 * 255.0) ** 2
    c2 = (0.03 * 255.0) ** 2
    mu_x = _filter_valid(x, k)
    mu_y = _filter_valid(y, k)
    var_x = _filter_valid(x * x, k) - mu_x ** 2
    var_y = _filter_valid(y * y, k) - mu_y ** 2
    cov = _filter_valid(x * y, k) - mu_x * mu_y
    num = (2 * mu_x * mu_y + c1) * (2 * cov + c2)
    den = (mu_x ** 2 + mu_y ** 2 + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


# --- MATLAB-compatible bicubic resampling ---------------------------------


def _cubic(x: np.ndarray) -> np.ndarray:
    """Keys cubic kernel with a = -0.5."""
    ax = np.abs(x)
    ax2 = ax * ax
    ax3 = ax2 * ax
    return np.where(
        ax <= 1,
        1.5 * ax3 - 2.5 * ax2 + 1.0,
        np.where(ax <= 2, -0.5 * ax3 + 2.5 * ax2 - 4.0 * ax + 2.0, 0.0),
    )


def _contributions(in_len: int, out_len: int, scale: float):
    """Per-output-pixel source indices and weights, MATLAB imresize style.

    Downscaling widens the kernel support by 1/scale (antialiasing);
    out-of-range indices reflect symmetrically off the borders.
    """
    if scale < 1.0:
        width = 4.0 / scale
        kernel = lambda x: scale * _cubic(scale * x)
    else:
        width = 4.0
        kernel = _cubic
    # 1-based output coordinates mapped into 1-based input space.
    u = (np.arange(1, out_len + 1, dtype=np.float64)) / scale + 0.5 * (1.0 - 1.0 / scale)
    left = np.floor(u - width / 2.0)
    p = int(math.ceil(width)) + 2
    ind = left[:, None] + np.arange(p)[None, :]          # 1-based, may run off
    weights = kernel(u[:, None] - ind)
    weights = weights / weights.sum(axis=1, keepdims=True)
    # symmetric boundary: indices 1..L reflect as 1..L, L..1, ...
    aux = np.concatenate([np.arange(1, in_len + 1), np.arange(in_len, 0, -1)])
    ind_sym = aux[np.mod(ind.astype(np.int64) - 1, 2 * in_len)] - 1   # 0-based
    keep = ~np.all(weights == 0, axis=0)
    return ind_sym[:, keep], weights[:, keep]


def _resize_axis(data: np.ndarray, out_len: int, scale: float) -> np.ndarray:
    idx, w = _contributions(data.shape[0], out_len, scale)
    return np.einsum("op,opwc->owc", w, data[idx])


def bicubic_resize(img: ImageBuffer, scale) -> ImageBuffer:
    """MATLAB-kernel bicubic resampling to ceil(extent * scale) per axis."""
    s = float(scale)
    if s <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    h, w = img.height, img.width
    oh, ow = int(math.ceil(h * s)), int(math.ceil(w * s))
    if oh < 1 or ow < 1:
        raise ValueError(f"target extents {oh}x{ow} must be positive")
    data = img.data.astype(np.float64)
    data = _resize_axis(data, oh, s)                     # rows
    data = _resize_axis(data.transpose(1, 0, 2), ow, s).transpose(1, 0, 2)
    return ImageBuffer(np.ascontiguousarray(data, dtype=F32), color=img.color)
