"""8-bit RGB PNG input/output."""

from __future__ import annotations

import numpy as np
from PIL import Image

from .metrics import RGB, ImageBuffer
from .ops import F32


def read_png(path: str) -> ImageBuffer:
    """Load a PNG as an RGB buffer in [0, 1]; other modes are converted."""
    try:
        with Image.open(path) as im:
            arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except (OSError, ValueError) as exc:
        raise IOError(f"cannot read image {path!r}: {exc}") from exc
    return ImageBuffer(arr.astype(F32) / 255.0, color=RGB)


def write_png(img: ImageBuffer, path: str):
    """Write a buffer as 8-bit PNG (round half away from zero)."""
    data = img.data
    if img.channels == 1:
        data = np.repeat(data, 3, axis=2)
    q = np.floor(data.astype(np.float64) * 255.0 + 0.5).clip(0, 255).astype(np.uint8)
    Image.fromarray(q, mode="RGB").save(path, format="PNG")
