#!/usr/bin/env python3
"""Fitting anchor priors and labeling feature-map cells.

Ground-truth sizes are clustered (k-means, 1 - IoU distance) into three
area groups of five priors; each group is served by one feature level
(P2/P3/P4 at strides 4/8/16). Every (cell, prior) slot then becomes
positive, ignored, or background from two signals: does the cell's anchor
point sit inside a ground truth, and how well does the prior's size match
that ground truth.
"""

import math

import numpy as np

from rotbox import OrientedBox, assign, fit_anchor_priors, levels_for_image
from rotbox.anchors import BACKGROUND, IGNORED, POSITIVE, prior_gt_iou

rng = np.random.default_rng(3)

# a synthetic fleet: three natural size classes
dims = []
for base_w, base_h, count in ((26, 12, 120), (70, 28, 120), (170, 60, 120)):
    dims.extend((base_w * float(rng.uniform(0.7, 1.4)),
                 base_h * float(rng.uniform(0.7, 1.4))) for _ in range(count))

anchors = fit_anchor_priors(dims, seed=0)
print("fitted priors (w x h, by group):")
for g in range(3):
    row = ", ".join(f"{p.w:5.1f}x{p.h:5.1f}" for p in anchors.group_priors(g))
    print(f"  group {g} (level P{g + 2}): {row}")
print(f"area boundaries between groups: {anchors.group_boundaries[0]:.0f}, "
      f"{anchors.group_boundaries[1]:.0f} px^2")

gts = [OrientedBox(160, 128, 64, 26, math.radians(15)),
       OrientedBox(360, 300, 180, 62, math.radians(-30))]
levels = levels_for_image(512, 512)
labels = assign(gts, levels, anchors)

print("\nassignment summary for two ground truths in a 512x512 image:")
names = {BACKGROUND: "background", IGNORED: "ignored", POSITIVE: "positive"}
for asg in labels:
    counts = {name: int((asg.status == code).sum()) for code, name in names.items()}
    print(f"  {asg.level.name} (stride {asg.level.stride:2d}, "
          f"{asg.level.height}x{asg.level.width} cells x {asg.status.shape[0]} priors): "
          f"{counts}")

print("\nwhy: prior/ground-truth size agreement (IoU of co-centered boxes)")
for j, gt in enumerate(gts):
    best = max((prior_gt_iou(gt, p), g)
               for g in range(3) for p in anchors.group_priors(g))
    print(f"  gt {j} ({gt.w:.0f}x{gt.h:.0f}): best prior IoU {best[0]:.3f} "
          f"in group {best[1]} -> positives live on P{best[1] + 2}")
