"""Model configuration and validation."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

COSINE = "cosine"
DOT = "dot"

SUPPORTED_SCALES = (2, 3, 4)


@dataclass(frozen=True)
class ModelConfig:
    """Complete architectural hyperparameter record.

    ``depths`` and ``heads`` are (stage1, stage2, stage3, decoder). ``shift``
    defaults to window_size // 2 when left as None. ``ffn_hidden`` is the FFN
    hidden width, ``ngram`` the neighbor-window context size, ``scale`` the
    upsampling factor of the reconstruction tail.
    """

    dim: int = 64
    window: int = 8
    ngram: int = 2
    depths: tuple = (6, 4, 4, 6)
    heads: tuple = (6, 4, 4, 6)
    ffn_hidden: int = 128
    shift: int | None = None
    scale: int = 2
    attention: str = COSINE

    def __post_init__(self):
        object.__setattr__(self, "depths", tuple(self.depths))
        object.__setattr__(self, "heads", tuple(self.heads))
        if self.shift is None:
            object.__setattr__(self, "shift", self.window // 2)
        self.validate()

    def validate(self):
        if self.dim % 2:
            raise ValueError(f"dim must be even for the channel-halving embedding, got {self.dim}")
        if self.dim % 16:
            raise ValueError(f"dim must be divisible by 16 for the bottleneck shuffles, got {self.dim}")
        if self.scale not in SUPPORTED_SCALES:
            raise ValueError(f"scale must be one of {SUPPORTED_SCALES}, got {self.scale}")
        if len(self.depths) != 4 or len(self.heads) != 4:
            raise ValueError("depths and heads must have 4 entries (3 encoder stages + decoder)")
        if any(d < 1 for d in self.depths):
            raise ValueError(f"depths must be positive, got {self.depths}")
        for h in self.heads:
            if h < 1:
                raise ValueError(f"head counts must be positive, got {self.heads}")
            if self.dim // h < 1:
                raise ValueError(f"{h} heads leave no channels at dim {self.dim}")
        if not 1 <= self.ngram <= 3:
            raise ValueError(f"ngram size must be in 1..3, got {self.ngram}")
        if self.window < 2:
            raise ValueError(f"window size must be >= 2, got {self.window}")
        if not 0 <= self.shift < self.window:
            raise ValueError(f"shift {self.shift} must lie in [0, window={self.window})")
        if self.attention not in (COSINE, DOT):
            raise ValueError(f"attention mode must be '{COSINE}' or '{DOT}', got {self.attention!r}")

    @property
    def divisor(self) -> int:
        """Input extents must be multiples of this (window grid at 1/4 res)."""
        return self.window * 4

    def attn_width(self, stage: int) -> int:
        """Internal window-attention width: heads * floor(dim / heads).

        Falls back below ``dim`` when the head count does not divide it
        (e.g. 6 heads at dim 64 -> width 60).
        """
        h = self.heads[stage]
        return h * (self.dim // h)

    def with_scale(self, scale: int) -> "ModelConfig":
        return replace(self, scale=scale)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "window": self.window,
            "ngram": self.ngram,
            "depths": list(self.depths),
            "heads": list(self.heads),
            "ffn_hidden": self.ffn_hidden,
            "shift": self.shift,
            "scale": self.scale,
            "attention": self.attention,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**{k: tuple(v) if k in ("depths", "heads") else v for k, v in d.items()})


def default_config(scale: int = 2, attention: str = COSINE) -> ModelConfig:
    """The published architecture: D=64, M=8, N=2, depths/heads {6,4,4,6}."""
    return ModelConfig(scale=scale, attention=attention)


def micro_config(scale: int = 2, attention: str = COSINE) -> ModelConfig:
    """Desk-scale graph for oracle tests and the gradient-free fit demo.

    FFN hidden kept at 2x dim, matching the full model's ratio.
    """
    return ModelConfig(
        dim=16,
        window=4,
        ngram=2,
        depths=(1, 1, 1, 1),
        heads=(1, 1, 1, 1),
        ffn_hidden=32,
        scale=scale,
        attention=attention,
    )
