#!/usr/bin/env python3
"""Walk through the compute-cost analyzer.

The analyzer does a static walk of the graph a config describes and counts
learnable scalars plus multiply-accumulate pairs at a target HR resolution.
For the default architecture it lands within a fraction of a percent of the
published totals, and prints the exact residual so you can see how close.
"""

from ngsr import check_against_published, cost_report, default_config, nstb_multadds_estimate

for scale in (2, 3, 4):
    cfg = default_config(scale)
    report = cost_report(cfg, hr=(1280, 720))
    check = check_against_published(report)
    print(f"--- x{scale} on a 1280x720 HR target ---")
    print(f"  analyzed LR {report.lr[0]}x{report.lr[1]}"
          f" (padded to {report.lr_padded[0]}x{report.lr_padded[1]})")
    p = check["params"]
    m = check["mult_adds"]
    print(f"  params    {p['value']:>12,}  target {p['target']:>12,}  residual {p['residual']:+,}")
    print(f"  mult-adds {m['value'] / 1e9:>11.2f}G  target {m['target'] / 1e9:>11.2f}G"
          f"  residual {m['residual'] / 1e9:+.2f}G")

# The ten most expensive layers of the x2 model.
report = cost_report(default_config(2))
print("\nheaviest layers (x2):")
for layer in sorted(report.layers, key=lambda l: -l.mult_adds)[:10]:
    print(f"  {layer.path:24s} {layer.mult_adds / 1e9:7.2f}G  {layer.params:>8,} params")

# A first-stage block at full resolution dominates; a closed-form
# approximation predicts its cost from the training-time resolution.
print("\nper-block approximation at training proportions (hw = 64*64):")
for r in (2, 3, 4):
    print(f"  x{r}: ~{nstb_multadds_estimate(64 * 64, r):.2f}G per first-stage block")
