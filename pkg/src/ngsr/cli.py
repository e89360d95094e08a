"""Command line interface.

Subcommands: analyze, infer, eval, degrade, selftest, microfit.
Exit codes: 0 success, 1 check/test failure, 2 usage error, 3 data or
weight error. File outputs are deterministic given (flags, seed, input
bytes); wall-clock timing goes to stderr only.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import analysis
from .config import SUPPORTED_SCALES, default_config
from .metrics import ImageBuffer, NormStats, bicubic_resize, psnr, ssim
from .microfit import run_microfit
from .model import ngswin_forward
from .pngio import read_png, write_png
from .selftest import DEFAULT_SEED, run_all
from .weights import WeightFormatError, WeightStore

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_DATA = 3


def _hr_size(text: str):
    try:
        w, h = text.lower().split("x")
        w, h = int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"size must look like 1280x720, got {text!r}")
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError(f"size must be positive, got {text!r}")
    return (w, h)


def _emit(report: dict, out_path: str | None):
    text = json.dumps(report, indent=2)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _load_stats(path: str | None) -> NormStats:
    return NormStats.load(path) if path else NormStats.neutral()


def cmd_analyze(args) -> int:
    cfg = default_config(args.scale)
    report = analysis.cost_report(cfg, args.hr_size)
    doc = report.to_dict()
    doc["manifest"] = {
        "subcommand": "analyze",
        "scale": args.scale,
        "hr_size": list(args.hr_size),
        "check": args.check,
        "out": args.out,
    }
    ok = True
    if args.check:
        doc["check"] = analysis.check_against_published(report)
        ok = doc["check"]["pass"]
    if args.format == "text":
        lines = [f"{l.path:28s} params {l.params:>10,}  mult-adds {l.mult_adds:>15,}" for l in report.layers]
        lines.append(f"{'TOTAL':28s} params {report.total_params:>10,}  mult-adds {report.total_mult_adds:>15,}")
        if args.check:
            c = doc["check"]
            lines.append(
                f"check vs published: params {c['params']['residual']:+,} "
                f"({c['params']['relative'] * 100:+.3f}%), mult-adds "
                f"{c['mult_adds']['residual'] / 1e9:+.2f}G ({c['mult_adds']['relative'] * 100:+.3f}%) "
                f"-> {'PASS' if ok else 'FAIL'}"
            )
        text = "\n".join(lines)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text + "\n")
        else:
            print(text)
    else:
        _emit(doc, args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_infer(args) -> int:
    cfg = default_config(args.scale)
    try:
        store = WeightStore.load(args.weights)
    except (OSError, WeightFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    try:
        store.check_complete(cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    try:
        img = read_png(args.input)
    except IOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    stats = _load_stats(args.stats)
    features = {} if args.dump_features else None
    t0 = time.perf_counter()
    sr = ngswin_forward(img, store, cfg, stats, features)
    elapsed = time.perf_counter() - t0
    write_png(sr, args.output)
    if args.dump_features:
        os.makedirs(args.dump_features, exist_ok=True)
        index = {}
        for name, tensor in features.items():
            fname = f"{name}.f32"
            tensor.astype("<f4").tofile(os.path.join(args.dump_features, fname))
            index[name] = {"file": fname, "shape": list(tensor.shape), "dtype": "float32"}
        with open(os.path.join(args.dump_features, "index.json"), "w") as fh:
            json.dump(index, fh, indent=2)
    print(args.output)
    print(f"inference took {elapsed:.3f}s", file=sys.stderr)
    return EXIT_OK


def _metric_pair(hr_path, sr_img, crop):
    hr = read_png(hr_path)
    return psnr(hr, sr_img, crop), ssim(hr, sr_img, crop)


def cmd_eval(args) -> int:
    if args.weights is None and args.baseline is None:
        print("error: provide --weights or --baseline bicubic", file=sys.stderr)
        return EXIT_USAGE
    cfg = store = None
    if args.weights is not None:
        if args.scale not in SUPPORTED_SCALES:
            print(f"error: model evaluation needs scale in {SUPPORTED_SCALES}", file=sys.stderr)
            return EXIT_USAGE
        cfg = default_config(args.scale)
        try:
            store = WeightStore.load(args.weights)
            store.check_complete(cfg)
        except (OSError, WeightFormatError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_DATA
    stats = _load_stats(args.stats)
    crop = args.crop if args.crop is not None else args.scale

    hr_names = sorted(n for n in os.listdir(args.hr_dir) if n.lower().endswith(".png"))
    lr_names = sorted(n for n in os.listdir(args.lr_dir) if n.lower().endswith(".png"))
    paired = [n for n in hr_names if n in set(lr_names)]
    skipped = sorted(set(hr_names) ^ set(lr_names))

    def evaluate(name):
        lr = read_png(os.path.join(args.lr_dir, name))
        if store is not None:
            sr = ngswin_forward(lr, store, cfg, stats)
        else:
            sr = bicubic_resize(lr, args.scale)
        p, s = _metric_pair(os.path.join(args.hr_dir, name), sr, crop)
        return name, p, s

    workers = max(1, int(os.environ.get("NGSR_THREADS", "1")))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(evaluate, paired))
    else:
        rows = [evaluate(n) for n in paired]
    rows.sort(key=lambda r: r[0])

    report = {
        "manifest": {
            "subcommand": "eval",
            "hr_dir": args.hr_dir,
            "lr_dir": args.lr_dir,
            "weights": args.weights,
            "baseline": args.baseline,
            "scale": args.scale,
            "crop": crop,
            "workers": workers,
        },
        "images": [{"name": n, "psnr": p, "ssim": s} for n, p, s in rows],
        "mean_psnr": float(np.mean([r[1] for r in rows])) if rows else None,
        "mean_ssim": float(np.mean([r[2] for r in rows])) if rows else None,
        "skipped": skipped,
        "warnings": len(skipped),
    }
    _emit(report, args.out)
    for name in skipped:
        print(f"warning: unpaired file skipped: {name}", file=sys.stderr)
    return EXIT_OK


def cmd_degrade(args) -> int:
    try:
        img = read_png(args.input)
    except IOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    h, w = img.height, img.width
    ch, cw = h - h % args.scale, w - w % args.scale
    cropped = None
    if (ch, cw) != (h, w):
        top, left = (h - ch) // 2, (w - cw) // 2
        img = ImageBuffer(img.data[top:top + ch, left:left + cw], color=img.color)
        cropped = [cw, ch]
    lr = bicubic_resize(img, 1.0 / args.scale)
    write_png(lr, args.output)
    manifest = {
        "subcommand": "degrade",
        "input": args.input,
        "output": args.output,
        "scale": args.scale,
        "cropped_to": cropped,
    }
    print(json.dumps({"manifest": manifest}, indent=2))
    return EXIT_OK


def cmd_selftest(args) -> int:
    results = run_all(args.seed)
    all_ok = True
    for res in results:
        status = "ok" if res.ok else "FAIL"
        print(f"{res.name:32s} {res.passed}/{res.total} {status}")
        for case_seed, msg in res.failures:
            print(f"    case seed {case_seed}: {msg}")
            all_ok = False
    print(f"selftest: {'all suites passed' if all_ok else 'FAILURES PRESENT'} (seed {args.seed})")
    return EXIT_OK if all_ok else EXIT_FAIL


def cmd_microfit(args) -> int:
    trace, diverged = run_microfit(args.steps, args.seed)
    reduction = 1.0 - trace[-1] / trace[0] if trace[0] else 0.0
    report = {
        "manifest": {"subcommand": "microfit", "steps": args.steps, "seed": args.seed},
        "trace": trace,
        "initial_loss": trace[0],
        "final_loss": trace[-1],
        "reduction": reduction,
        "diverged": diverged,
    }
    _emit(report, args.out)
    print(
        f"microfit: initial {trace[0]:.4f} final {trace[-1]:.4f} "
        f"({reduction * 100:.1f}% reduction over {len(trace) - 1} steps)",
        file=sys.stderr,
    )
    return EXIT_FAIL if diverged else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ngsr", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="parameter and Mult-Adds report for a scale")
    p.add_argument("--scale", type=int, choices=SUPPORTED_SCALES, required=True)
    p.add_argument("--hr-size", type=_hr_size, default=(1280, 720), help="target HR size, e.g. 1280x720")
    p.add_argument("--check", action="store_true", help="compare against published totals; exit 1 on miss")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--out", help="write the report to a file instead of stdout")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("infer", help="super-resolve one PNG")
    p.add_argument("--weights", required=True)
    p.add_argument("--scale", type=int, choices=SUPPORTED_SCALES, required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--stats", help="normalization stats JSON")
    p.add_argument("--dump-features", help="directory for intermediate stage outputs")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("eval", help="PSNR/SSIM over paired HR/LR directories")
    p.add_argument("--hr-dir", required=True)
    p.add_argument("--lr-dir", required=True)
    p.add_argument("--weights")
    p.add_argument("--baseline", choices=("bicubic",), help="evaluate a bicubic upscale instead of the model")
    p.add_argument("--scale", type=int, required=True)
    p.add_argument("--stats")
    p.add_argument("--crop", type=int, help="metric border crop (default: scale)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("degrade", help="bicubic-downscale a PNG")
    p.add_argument("--input", required=True)
    p.add_argument("--scale", type=int, required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("selftest", help="run the built-in oracle suites")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_selftest)

    p = sub.add_parser("microfit", help="SPSA fit of the micro graph on one patch pair")
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out")
    p.set_defaults(func=cmd_microfit)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
