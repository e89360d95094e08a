#!/usr/bin/env python3
"""Run the full model on an image, end to end.

Without trained weights the output of a seeded random initialization is not
a useful photo, but the pipeline is the real one: normalize, shallow conv,
three encoder stages with patch-merging and pooling cascade, multi-scale
bottleneck, decoder, global skip, pixel-shuffle reconstruction.
"""

import numpy as np

from ngsr import ImageBuffer, default_config, init_weights, ngswin_forward, write_png

rng = np.random.default_rng(7)
cfg = default_config(scale=2)

# a synthetic 48x48 "photo": smooth blobs plus a sharp grid
yy, xx = np.mgrid[0:48, 0:48] / 48.0
base = np.stack([
    0.5 + 0.3 * np.sin(6 * xx) * np.cos(4 * yy),
    0.5 + 0.25 * np.cos(5 * (xx + yy)),
    0.4 + 0.3 * np.sin(3 * xx + 5 * yy),
], axis=-1)
base[::8, :, :] *= 0.4
base[:, ::8, :] *= 0.4
lr = ImageBuffer(np.clip(base, 0, 1).astype(np.float32))

store = init_weights(cfg, seed=42)
print(f"graph has {store.total_params():,} parameters")

features = {}
sr = ngswin_forward(lr, store, cfg, features=features)
print(f"input  {lr.height}x{lr.width}  ->  output {sr.height}x{sr.width}")
for name, tensor in features.items():
    print(f"  {name:8s} {tensor.shape}")

write_png(lr, "demo_lr.png")
write_png(sr, "demo_sr.png")
print("wrote demo_lr.png and demo_sr.png")

# weight files round-trip bitwise
store.save("demo_weights.ngsw")
from ngsr import WeightStore

again = ngswin_forward(lr, WeightStore.load("demo_weights.ngsw"), cfg)
print("save/load reproduces the forward bitwise:", np.array_equal(sr.data, again.data))
