"""Static compute-cost analyzer.

Walks the graph implied by a :class:`ModelConfig` and reports per-layer and
total parameter counts and Mult-Adds (multiply-accumulate pairs) for a target
HR resolution.

Counting convention ("mac-v1"):
  * evaluated at LR = ceil(HR / r), reflect-padded to the model's required
    multiple of 4M per axis (the same rule the forward pass applies);
  * convolutions and affine maps count k^2 * C_in/groups * C_out (resp.
    in * out) per output position;
  * window attention counts 4*hw*D^2 + 2*M^2*hw*D per block — the classic
    WSA decomposition (qkv + output projections, score and value products)
    at the nominal width D;
  * sliding attention counts the same formula per direction with window
    size N, width D/2, and hw = N^2 * (window-grid positions);
  * norms, softmax, activations, pooling, and element-wise adds are free.

Parameter counts come from the same registry the initializer uses, so the
analyzer and builder agree exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .config import ModelConfig, default_config
from .weights import STAGE_NAMES, param_specs

CONVENTION = "mac-v1"

# Published totals for the default architecture (HR 1280x720 for Mult-Adds).
PUBLISHED = {
    2: {"params": 998_384, "mult_adds": 140.41e9},
    3: {"params": 1_007_039, "mult_adds": 66.56e9},
    4: {"params": 1_019_156, "mult_adds": 36.44e9},
}
PARAMS_TOL = 0.005
MULT_ADDS_TOL = 0.015


def wsa_complexity(h: int, w: int, d: int, m: int) -> int:
    """Window self-attention cost: 4*h*w*D^2 + 2*M^2*h*w*D."""
    return 4 * h * w * d * d + 2 * m * m * h * w * d


def nstb_multadds_estimate(hw: int, r: int) -> float:
    """Approximate benchmark Mult-Adds (in units of 1e9) contributed by one
    block whose training-time input resolution is ``hw`` pixels, for the
    x``r`` task: 10 * hw / 2^12 / (r/2)^2."""
    return 10.0 * hw / 2 ** 12 / ((r / 2.0) ** 2)


@dataclass
class LayerCost:
    path: str
    params: int
    mult_adds: int


@dataclass
class CostReport:
    config: dict
    hr: tuple           # (width, height)
    lr: tuple           # (width, height) before padding
    lr_padded: tuple    # (width, height) actually analyzed
    layers: list = field(default_factory=list)

    @property
    def total_params(self) -> int:
        return sum(l.params for l in self.layers)

    @property
    def total_mult_adds(self) -> int:
        return sum(l.mult_adds for l in self.layers)

    @property
    def padded(self) -> bool:
        return self.lr != self.lr_padded

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "hr": list(self.hr),
            "lr": list(self.lr),
            "lr_padded": list(self.lr_padded),
            "padded": self.padded,
            "layers": [{"path": l.path, "params": l.params, "mult_adds": l.mult_adds} for l in self.layers],
            "total_params": self.total_params,
            "total_mult_adds": self.total_mult_adds,
            "convention": CONVENTION,
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _layer_params(cfg: ModelConfig) -> dict:
    """Group the parameter registry into per-layer totals."""
    groups: dict[str, int] = {}
    for path, shape in param_specs(cfg):
        size = 1
        for s in shape:
            size *= s
        layer = _layer_of(path)
        groups[layer] = groups.get(layer, 0) + size
    return groups


def _layer_of(param_path: str) -> str:
    parts = param_path.split(".")
    if ".block" in param_path:
        block = ".".join(parts[:2])
        sub = parts[2]
        if sub == "ngram":
            kind = parts[3]
            if kind in ("qkv", "out", "tau"):
                return f"{block}.ngram.attn"
            return f"{block}.ngram.{kind}"        # unigram / merge
        if sub == "attn":
            return f"{block}.attn"
        if sub == "ffn":
            return f"{block}.ffn"
        return f"{block}.{sub}"                    # norm1 / norm2
    if len(parts) > 2 and parts[1] == "merge":     # stage merge: LN + projection
        return ".".join(parts[:2])
    # non-block layers: drop the leaf (weight/bias/gamma/beta)
    if parts[-1] in ("gamma", "beta") and parts[-2] == "norm":
        return ".".join(parts[:-1])
    return ".".join(parts[:-1])


def _block_costs(cfg: ModelConfig, prefix: str, p: int, q: int, pgroup: dict):
    d, m, n, f = cfg.dim, cfg.window, cfg.ngram, cfg.ffn_hidden
    c = d // 2
    g = (p // m) * (q // m)
    yield LayerCost(f"{prefix}.ngram.unigram", pgroup[f"{prefix}.ngram.unigram"], g * c * 2 * m * m)
    slide_hw = n * n * g
    slide = 2 * (4 * slide_hw * c * c + 2 * n * n * slide_hw * c)
    yield LayerCost(f"{prefix}.ngram.attn", pgroup[f"{prefix}.ngram.attn"], slide)
    yield LayerCost(f"{prefix}.ngram.merge", pgroup[f"{prefix}.ngram.merge"], g * d * d)
    yield LayerCost(f"{prefix}.attn", pgroup[f"{prefix}.attn"], wsa_complexity(p, q, d, m))
    yield LayerCost(f"{prefix}.norm1", pgroup[f"{prefix}.norm1"], 0)
    yield LayerCost(f"{prefix}.ffn", pgroup[f"{prefix}.ffn"], p * q * 2 * d * f)
    yield LayerCost(f"{prefix}.norm2", pgroup[f"{prefix}.norm2"], 0)


def _pad_up(x: int, divisor: int) -> int:
    return ((x + divisor - 1) // divisor) * divisor


def cost_report(cfg: ModelConfig, hr: tuple = (1280, 720)) -> CostReport:
    """Per-layer cost walk for a (width, height) HR target."""
    hr_w, hr_h = int(hr[0]), int(hr[1])
    if hr_w < 1 or hr_h < 1:
        raise ValueError(f"HR size must be positive, got {hr_w}x{hr_h}")
    r = cfg.scale
    lr_w, lr_h = math.ceil(hr_w / r), math.ceil(hr_h / r)
    w, h = _pad_up(lr_w, cfg.divisor), _pad_up(lr_h, cfg.divisor)

    d = cfg.dim
    pg = _layer_params(cfg)
    report = CostReport(cfg.to_dict(), (hr_w, hr_h), (lr_w, lr_h), (w, h))
    layers = report.layers

    layers.append(LayerCost("shallow", pg["shallow"], h * w * 9 * 3 * d))
    res = [(h, w), (h // 2, w // 2), (h // 4, w // 4)]
    for i in range(3):
        stage = STAGE_NAMES[i]
        p, q = res[i]
        if i == 1:
            layers.append(LayerCost("enc2.cascade", pg["enc2.cascade"], p * q * 2 * d * d))
        if i == 2:
            layers.append(LayerCost("enc3.cascade", pg["enc3.cascade"], p * q * 3 * d * d))
        for k in range(1, cfg.depths[i] + 1):
            layers.extend(_block_costs(cfg, f"{stage}.block{k}", p, q, pg))
        if i < 2:
            layers.append(LayerCost(f"{stage}.merge", pg[f"{stage}.merge"], (p // 2) * (q // 2) * 4 * d * d))
    cat = d + d // 4 + d // 16
    layers.append(LayerCost("scdp.dw", pg["scdp.dw"], h * w * 9 * cat))
    layers.append(LayerCost("scdp.pw", pg["scdp.pw"], h * w * cat * d))
    layers.append(LayerCost("scdp.norm", pg["scdp.norm"], 0))
    for k in range(1, cfg.depths[3] + 1):
        layers.extend(_block_costs(cfg, f"dec.block{k}", h, w, pg))
    layers.append(LayerCost("dec.norm", pg["dec.norm"], 0))
    layers.append(LayerCost("recon.conv1", pg["recon.conv1"], h * w * 9 * d * 3 * r * r))
    layers.append(LayerCost("recon.conv2", pg["recon.conv2"], (r * h) * (r * w) * 9 * 3 * 3))

    attributed = sum(l.params for l in layers)
    expected = count_params(cfg)
    if attributed != expected:
        raise AssertionError(f"layer walk attributed {attributed} params, registry has {expected}")
    return report


def count_params(cfg: ModelConfig) -> int:
    """Exact learnable-scalar count of the configured graph."""
    total = 0
    for _, shape in param_specs(cfg):
        size = 1
        for s in shape:
            size *= s
        total += size
    return total


def count_multadds(cfg: ModelConfig, hr: tuple = (1280, 720)) -> int:
    return cost_report(cfg, hr).total_mult_adds


def stage1_block_multadds(cfg: ModelConfig, hr: tuple = (1280, 720)) -> float:
    """Average Mult-Adds of one first-stage block at the target resolution."""
    rep = cost_report(cfg, hr)
    total = sum(l.mult_adds for l in rep.layers if l.path.startswith("enc1.block"))
    return total / cfg.depths[0]


def check_against_published(report: CostReport) -> dict:
    """Compare report totals with the published figures for this scale.

    Returns a dict with absolute/relative residuals and pass flags at the
    pinned tolerances (0.5% params, 1.5% Mult-Adds).
    """
    scale = report.config["scale"]
    if scale not in PUBLISHED:
        raise ValueError(f"no published figures for scale {scale}")
    if report.config != default_config(scale).to_dict():
        raise ValueError("published figures apply to the default architecture only")
    tp, tm = PUBLISHED[scale]["params"], PUBLISHED[scale]["mult_adds"]
    p, m = report.total_params, report.total_mult_adds
    out = {
        "params": {
            "value": p,
            "target": tp,
            "residual": p - tp,
            "relative": (p - tp) / tp,
            "tolerance": PARAMS_TOL,
            "pass": abs(p - tp) / tp <= PARAMS_TOL,
        },
        "mult_adds": {
            "value": m,
            "target": tm,
            "residual": m - tm,
            "relative": (m - tm) / tm,
            "tolerance": MULT_ADDS_TOL,
            "pass": abs(m - tm) / tm <= MULT_ADDS_TOL,
        },
    }
    out["pass"] = out["params"]["pass"] and out["mult_adds"]["pass"]
    return out
