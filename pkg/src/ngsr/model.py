"""Full super-resolution graph.

Shallow conv -> three hierarchical encoder stages (blocks with within-stage
residuals, pooling cascade at stage entries, patch-merging after stages 1-2)
-> multi-scale bottleneck -> decoder at full resolution -> global skip ->
pixel-shuffle reconstruction. Forward is a pure function of
(image, weights, config, stats).
"""

from __future__ import annotations

import numpy as np

from .block import NstbParams, nstb_forward
from .config import COSINE, ModelConfig
from .metrics import RGB, ImageBuffer, NormStats, denormalize
from .ngram import NGramParams
from .ops import F32, conv2d, gelu, layer_norm, leaky_relu, pixel_shuffle, pool2d
from .weights import STAGE_NAMES, WeightStore


def _block_params(store: WeightStore, cfg: ModelConfig, prefix: str, stage: int) -> NstbParams:
    cos = cfg.attention == COSINE
    ng = NGramParams(
        unigram_w=store[f"{prefix}.ngram.unigram.weight"],
        qkv_w=store[f"{prefix}.ngram.qkv.weight"],
        qkv_b=store[f"{prefix}.ngram.qkv.bias"],
        out_w=store[f"{prefix}.ngram.out.weight"],
        out_b=store[f"{prefix}.ngram.out.bias"],
        tau=store[f"{prefix}.ngram.tau"] if cos else None,
        merge_w=store[f"{prefix}.ngram.merge.weight"],
        merge_b=store[f"{prefix}.ngram.merge.bias"],
        n=cfg.ngram,
        mode=cfg.attention,
    )
    return NstbParams(
        ngram=ng,
        qkv_w=store[f"{prefix}.attn.qkv.weight"],
        qkv_b=store[f"{prefix}.attn.qkv.bias"],
        out_w=store[f"{prefix}.attn.out.weight"],
        out_b=store[f"{prefix}.attn.out.bias"],
        bias_table=store[f"{prefix}.attn.bias_table"],
        tau=store[f"{prefix}.attn.tau"] if cos else None,
        ffn_w1=store[f"{prefix}.ffn.w1"],
        ffn_b1=store[f"{prefix}.ffn.b1"],
        ffn_w2=store[f"{prefix}.ffn.w2"],
        ffn_b2=store[f"{prefix}.ffn.b2"],
        norm1_g=store[f"{prefix}.norm1.gamma"],
        norm1_b=store[f"{prefix}.norm1.beta"],
        norm2_g=store[f"{prefix}.norm2.gamma"],
        norm2_b=store[f"{prefix}.norm2.beta"],
        heads=cfg.heads[stage],
        mode=cfg.attention,
    )


def patch_merging(x, norm_g, norm_b, weight, h: int, w: int):
    """2x2 neighborhood concat to 4D channels, layer-norm, project to D.

    Neighborhood order follows the Swin convention: (even, even),
    (odd, even), (even, odd), (odd, odd). Bias-free projection.
    """
    if h % 2 or w % 2:
        raise ValueError(f"patch merging needs even extents, got {h}x{w}")
    d = x.shape[-1]
    grid = x.reshape(h, w, d)
    cat = np.concatenate(
        [grid[0::2, 0::2], grid[1::2, 0::2], grid[0::2, 1::2], grid[1::2, 1::2]], axis=-1
    ).reshape((h // 2) * (w // 2), 4 * d)
    return layer_norm(cat, norm_g, norm_b) @ weight


def _tokens_to_grid(x, h: int, w: int):
    return x.reshape(h, w, -1).transpose(2, 0, 1)


def _grid_to_tokens(g):
    return g.transpose(1, 2, 0).reshape(g.shape[1] * g.shape[2], g.shape[0])


def _iter_maxpool(grid, times: int):
    for _ in range(times):
        grid = pool2d(grid, 2, "max")
    return grid


def pooling_cascade(current, priors, weight):
    """Concatenate max-pooled earlier features with the stage input, project to D.

    ``current`` is tokens at the stage resolution; ``priors`` is a list of
    (tokens, (h, w)) at earlier (larger or equal) resolutions, pooled down by
    iterated 2x2 max-pooling. An empty prior list is the identity.
    """
    if not priors:
        return current
    hw = current.shape[0]
    parts = [current]
    for tokens, (ph, pw) in priors:
        factor = int(round((tokens.shape[0] / hw) ** 0.5))
        times = max(factor.bit_length() - 1, 0)
        if factor * factor * hw != tokens.shape[0] or 2 ** times != factor:
            raise ValueError(f"prior at {ph}x{pw} not reachable from {hw} tokens by 2x2 pooling")
        pooled = _iter_maxpool(_tokens_to_grid(tokens, ph, pw), times)
        parts.append(_grid_to_tokens(pooled))
    return np.concatenate(parts, axis=-1) @ weight


def scdp_bottleneck(stage_outs, z_s, store: WeightStore, h: int, w: int):
    """Pixel-Shuffle / Concat / Depth-wise conv / Point-wise projection.

    Stage i output (resolution /2^(i-1)) gets the iteratively max-pooled,
    LeakyReLU-activated shallow feature added, is pixel-shuffled by 2^(i-1)
    back to full resolution (channels D, D/4, D/16), concatenated (21D/16
    channels), then depth-wise 3x3 + GELU, point-wise projection to D, and a
    layer norm.
    """
    zs_grid = _tokens_to_grid(z_s, h, w)
    planes = []
    for i, tokens in enumerate(stage_outs):
        f = 2 ** i
        pooled = leaky_relu(_iter_maxpool(zs_grid, i))
        grid = _tokens_to_grid(tokens, h // f, w // f) + pooled
        planes.append(pixel_shuffle(grid, f))
    cat = np.concatenate(planes, axis=0)                 # [21D/16, H, W]
    x = gelu(conv2d(cat, store["scdp.dw.weight"], store["scdp.dw.bias"], stride=1, pad=1, groups=cat.shape[0]))
    x = _grid_to_tokens(x) @ store["scdp.pw.weight"] + store["scdp.pw.bias"]
    return layer_norm(x, store["scdp.norm.gamma"], store["scdp.norm.beta"])


def reconstruct(z, store: WeightStore, r: int, h: int, w: int):
    """3x3 conv D -> 3r^2, pixel-shuffle by r, 3x3 conv 3 -> 3."""
    grid = _tokens_to_grid(z, h, w)
    up = conv2d(grid, store["recon.conv1.weight"], store["recon.conv1.bias"], stride=1, pad=1)
    up = pixel_shuffle(up, r)
    return conv2d(up, store["recon.conv2.weight"], store["recon.conv2.bias"], stride=1, pad=1)


def _run_blocks(x, store: WeightStore, cfg: ModelConfig, stage: int, h: int, w: int):
    """Chain of NSTBs with within-stage residuals: out_k = NSTB(in_k) + in_k.

    1-based even-numbered blocks run with the cyclic window shift.
    """
    name = STAGE_NAMES[stage]
    for k in range(1, cfg.depths[stage] + 1):
        p = _block_params(store, cfg, f"{name}.block{k}", stage)
        shifted = k % 2 == 0 and cfg.shift > 0
        x = nstb_forward(x, p, h, w, cfg.window, shifted=shifted, shift=cfg.shift) + x
    return x


def _reflect_pad_to(grid, divisor: int):
    """Reflect-pad [C, H, W] on the bottom/right to multiples of divisor."""
    _, h, w = grid.shape
    ph = (-h) % divisor
    pw = (-w) % divisor
    if ph == 0 and pw == 0:
        return grid
    if h == 1 or w == 1:
        raise ValueError(f"input {h}x{w} too small to reflect-pad to multiples of {divisor}")
    return np.pad(grid, ((0, 0), (0, ph), (0, pw)), mode="reflect")


def ngswin_forward_raw(image: np.ndarray, store: WeightStore, cfg: ModelConfig,
                       stats: NormStats | None = None, features: dict | None = None) -> np.ndarray:
    """Forward pass on an HxWx3 array in [0, 1]; returns the de-normalized
    SR array (rH x rW x 3, unclamped).

    Inputs whose extents are not multiples of 4M are reflect-padded for the
    pass and the output is cropped back to r x the original extents. Pass a
    dict as ``features`` to collect named intermediate stage outputs.
    """
    stats = stats or NormStats.neutral()
    store.check_complete(cfg)
    img = np.asarray(image, dtype=F32)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected HxWx3 input, got {img.shape}")
    h0, w0 = img.shape[:2]
    x = ((img - stats.mean) / stats.std).astype(F32)
    grid = _reflect_pad_to(x.transpose(2, 0, 1), cfg.divisor)
    h, w = grid.shape[1:]

    z_s = _grid_to_tokens(conv2d(grid, store["shallow.weight"], store["shallow.bias"], stride=1, pad=1))

    # encoder
    res = [(h, w), (h // 2, w // 2), (h // 4, w // 4)]
    entries = []
    stage_outs = []
    merged = None
    for i in range(3):
        hi, wi = res[i]
        if i == 0:
            entry = z_s
        elif i == 1:
            entry = pooling_cascade(merged, [(z_s, res[0])], store["enc2.cascade.weight"])
        else:
            entry = pooling_cascade(
                merged, [(z_s, res[0]), (stage_outs[0], res[0])], store["enc3.cascade.weight"]
            )
        entries.append(entry)
        out = _run_blocks(entry, store, cfg, i, hi, wi)
        stage_outs.append(out)
        if i < 2:
            name = STAGE_NAMES[i]
            merged = patch_merging(
                out + entry,
                store[f"{name}.merge.norm.gamma"],
                store[f"{name}.merge.norm.beta"],
                store[f"{name}.merge.weight"],
                hi,
                wi,
            )

    z_scdp = scdp_bottleneck(stage_outs, z_s, store, h, w)

    dec = _run_blocks(z_scdp + stage_outs[0], store, cfg, 3, h, w)
    z_dec = layer_norm(dec, store["dec.norm.gamma"], store["dec.norm.beta"])

    sr = reconstruct(z_s + z_dec, store, cfg.scale, h, w)
    if features is not None:
        features.update(
            {
                "z_s": z_s,
                "enc1": stage_outs[0],
                "enc2": stage_outs[1],
                "enc3": stage_outs[2],
                "z_scdp": z_scdp,
                "z_dec": z_dec,
            }
        )
    out = sr.transpose(1, 2, 0)[: cfg.scale * h0, : cfg.scale * w0]
    return denormalize(out, stats)


def ngswin_forward(image: ImageBuffer, store: WeightStore, cfg: ModelConfig,
                   stats: NormStats | None = None, features: dict | None = None) -> ImageBuffer:
    """Super-resolve an RGB image buffer; output clamped to [0, 1]."""
    raw = ngswin_forward_raw(image.data, store, cfg, stats, features)
    return ImageBuffer(raw, color=RGB)
