"""Parameter registry, seeded initialization, and the NGSW weight file.

Every learnable tensor of a configured graph has a canonical dotted path
(e.g. ``enc1.block3.ffn.w1``). :func:`param_specs` enumerates (path, shape)
in definition order; the initializer, the completeness check, the cost
analyzer, and the file format all share that single enumeration.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from .config import COSINE, ModelConfig
from .ops import F32

NGSW_MAGIC = b"NGSW"
NGSW_VERSION = 1

STAGE_NAMES = ("enc1", "enc2", "enc3", "dec")


class WeightFormatError(ValueError):
    """Raised when an NGSW file is malformed or corrupt."""


def block_param_specs(cfg: ModelConfig, prefix: str, stage: int):
    """(path, shape) pairs for one transformer block, definition order."""
    d, m, f = cfg.dim, cfg.window, cfg.ffn_hidden
    c = d // 2
    wa = cfg.attn_width(stage)
    h = cfg.heads[stage]
    cos = cfg.attention == COSINE
    specs = [
        (f"{prefix}.ngram.unigram.weight", (c, 2, m, m)),
        (f"{prefix}.ngram.qkv.weight", (c, 3 * c)),
        (f"{prefix}.ngram.qkv.bias", (3 * c,)),
        (f"{prefix}.ngram.out.weight", (c, c)),
        (f"{prefix}.ngram.out.bias", (c,)),
    ]
    if cos:
        specs.append((f"{prefix}.ngram.tau", (1,)))
    specs += [
        (f"{prefix}.ngram.merge.weight", (d, d)),
        (f"{prefix}.ngram.merge.bias", (d,)),
        (f"{prefix}.attn.qkv.weight", (d, 3 * wa)),
        (f"{prefix}.attn.qkv.bias", (3 * wa,)),
        (f"{prefix}.attn.out.weight", (wa, d)),
        (f"{prefix}.attn.out.bias", (d,)),
        (f"{prefix}.attn.bias_table", ((2 * m - 1) ** 2, h)),
    ]
    if cos:
        specs.append((f"{prefix}.attn.tau", (h,)))
    specs += [
        (f"{prefix}.ffn.w1", (d, f)),
        (f"{prefix}.ffn.b1", (f,)),
        (f"{prefix}.ffn.w2", (f, d)),
        (f"{prefix}.ffn.b2", (d,)),
        (f"{prefix}.norm1.gamma", (d,)),
        (f"{prefix}.norm1.beta", (d,)),
        (f"{prefix}.norm2.gamma", (d,)),
        (f"{prefix}.norm2.beta", (d,)),
    ]
    return specs


def param_specs(cfg: ModelConfig):
    """Ordered (path, shape) list for the whole graph."""
    d = cfg.dim
    r = cfg.scale
    specs = [("shallow.weight", (d, 3, 3, 3)), ("shallow.bias", (d,))]
    for i in range(3):
        stage = STAGE_NAMES[i]
        if i == 1:
            specs.append((f"{stage}.cascade.weight", (2 * d, d)))
        if i == 2:
            specs.append((f"{stage}.cascade.weight", (3 * d, d)))
        for k in range(1, cfg.depths[i] + 1):
            specs += block_param_specs(cfg, f"{stage}.block{k}", i)
        if i < 2:
            specs += [
                (f"{stage}.merge.norm.gamma", (4 * d,)),
                (f"{stage}.merge.norm.beta", (4 * d,)),
                (f"{stage}.merge.weight", (4 * d, d)),
            ]
    cat = d + d // 4 + d // 16
    specs += [
        ("scdp.dw.weight", (cat, 1, 3, 3)),
        ("scdp.dw.bias", (cat,)),
        ("scdp.pw.weight", (cat, d)),
        ("scdp.pw.bias", (d,)),
        ("scdp.norm.gamma", (d,)),
        ("scdp.norm.beta", (d,)),
    ]
    for k in range(1, cfg.depths[3] + 1):
        specs += block_param_specs(cfg, f"dec.block{k}", 3)
    specs += [
        ("dec.norm.gamma", (d,)),
        ("dec.norm.beta", (d,)),
        ("recon.conv1.weight", (3 * r * r, d, 3, 3)),
        ("recon.conv1.bias", (3 * r * r,)),
        ("recon.conv2.weight", (3, 3, 3, 3)),
        ("recon.conv2.bias", (3,)),
    ]
    return specs


def _trunc_normal(rng: np.random.Generator, shape, std: float = 0.02, bound: float = 2.0):
    """Truncated normal: values outside +-bound std deviations resampled."""
    x = rng.standard_normal(shape)
    while True:
        bad = np.abs(x) > bound
        k = int(bad.sum())
        if not k:
            break
        x[bad] = rng.standard_normal(k)
    return (x * std).astype(F32)


TAU_INIT = 0.1


def init_weights(cfg: ModelConfig, seed: int) -> "WeightStore":
    """Deterministic seeded initialization covering every graph parameter."""
    rng = np.random.default_rng(seed)
    store = WeightStore()
    for path, shape in param_specs(cfg):
        leaf = path.rsplit(".", 1)[-1]
        if leaf == "tau":
            t = np.full(shape, TAU_INIT, dtype=F32)
        elif leaf == "gamma":
            t = np.ones(shape, dtype=F32)
        elif leaf in ("bias", "beta", "bias_table", "b1", "b2"):
            t = np.zeros(shape, dtype=F32)
        else:
            t = _trunc_normal(rng, shape)
        store[path] = t
    return store


class WeightStore:
    """Ordered map from canonical parameter path to float32 tensor."""

    def __init__(self, tensors: dict | None = None):
        self._tensors: dict[str, np.ndarray] = {}
        if tensors:
            for k, v in tensors.items():
                self[k] = v

    def __setitem__(self, path: str, tensor):
        arr = np.ascontiguousarray(tensor, dtype=F32)
        self._tensors[path] = arr

    def __getitem__(self, path: str) -> np.ndarray:
        return self._tensors[path]

    def __contains__(self, path: str) -> bool:
        return path in self._tensors

    def __len__(self) -> int:
        return len(self._tensors)

    def paths(self):
        return list(self._tensors)

    def items(self):
        return self._tensors.items()

    def total_params(self) -> int:
        return sum(int(t.size) for t in self._tensors.values())

    def check_complete(self, cfg: ModelConfig):
        """Verify the store matches the config's graph exactly.

        Raises ValueError naming the first missing path (definition order),
        then any unused extras, then any shape mismatch.
        """
        specs = param_specs(cfg)
        expected = dict(specs)
        for path, shape in specs:
            if path not in self._tensors:
                raise ValueError(f"weight store incomplete: missing parameter {path!r}")
        extras = [p for p in self._tensors if p not in expected]
        if extras:
            raise ValueError(f"weight store has {len(extras)} unused entries, first: {extras[0]!r}")
        for path, shape in specs:
            got = self._tensors[path].shape
            if tuple(got) != tuple(shape):
                raise ValueError(f"parameter {path!r} has shape {tuple(got)}, expected {tuple(shape)}")

    # --- NGSW file format -------------------------------------------------
    #
    # magic "NGSW" | u32 version=1 | u32 tensor count
    # per tensor: u16 name length | name utf-8 | u8 rank | rank*u64 extents
    #             | float32 little-endian data
    # trailer: u32 CRC32 of everything between the header and the CRC.

    def save(self, path: str):
        chunks = []
        for name, tensor in self._tensors.items():
            nb = name.encode("utf-8")
            chunks.append(struct.pack("<H", len(nb)))
            chunks.append(nb)
            chunks.append(struct.pack("<B", tensor.ndim))
            chunks.append(struct.pack(f"<{tensor.ndim}Q", *tensor.shape))
            chunks.append(tensor.astype("<f4").tobytes())
        payload = b"".join(chunks)
        with open(path, "wb") as fh:
            fh.write(NGSW_MAGIC)
            fh.write(struct.pack("<II", NGSW_VERSION, len(self._tensors)))
            fh.write(payload)
            fh.write(struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF))

    @classmethod
    def load(cls, path: str) -> "WeightStore":
        with open(path, "rb") as fh:
            blob = fh.read()
        if len(blob) < 16 or blob[:4] != NGSW_MAGIC:
            raise WeightFormatError(f"{path}: not an NGSW weight file")
        version, count = struct.unpack_from("<II", blob, 4)
        if version != NGSW_VERSION:
            raise WeightFormatError(f"{path}: unsupported NGSW version {version}")
        payload = blob[12:-4]
        (crc,) = struct.unpack_from("<I", blob, len(blob) - 4)
        if zlib.crc32(payload) & 0xFFFFFFFF != crc:
            raise WeightFormatError(f"{path}: CRC32 mismatch, file is corrupt")
        store = cls()
        off = 0
        for _ in range(count):
            (nlen,) = struct.unpack_from("<H", payload, off)
            off += 2
            name = payload[off:off + nlen].decode("utf-8")
            off += nlen
            (rank,) = struct.unpack_from("<B", payload, off)
            off += 1
            shape = struct.unpack_from(f"<{rank}Q", payload, off)
            off += 8 * rank
            size = int(np.prod(shape)) if rank else 1
            data = np.frombuffer(payload, dtype="<f4", count=size, offset=off)
            off += 4 * size
            store[name] = data.reshape(shape)
        if off != len(payload):
            raise WeightFormatError(f"{path}: {len(payload) - off} trailing bytes after last tensor")
        return store
