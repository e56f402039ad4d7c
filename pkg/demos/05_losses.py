#!/usr/bin/env python3
"""The three loss terms, evaluated on hand-checkable inputs.

Classification uses the focal loss (cross-entropy with easy examples
down-weighted); localization uses the negative log of the side-distance
intersection/union ratio; the angle term is 1 - cos(delta). The combined
objective normalizes the classification sum and the positive-gated
regression sums by the positive count.
"""

import math

import numpy as np

from rotbox import angle_loss, focal_loss, iou_loss

print("focal loss, alpha=0.25, gamma=2:")
for p, p_star in ((0.5, 1), (0.9, 1), (0.99, 1), (0.5, 0), (0.1, 0)):
    print(f"  p={p:4.2f}, label={p_star} -> {focal_loss(p, p_star):.6f}")
print("  the gamma factor crushes easy examples: "
      f"{focal_loss(0.99, 1) / focal_loss(0.5, 1):.5f} of the p=0.5 value")

print("\ndistance IoU loss over (top, right, bottom, left) tuples:")
cases = [([1, 1, 1, 1], [1, 1, 1, 1]),
         ([1, 1, 1, 1], [2, 1, 2, 1]),
         ([1, 2, 1, 2], [2, 1, 2, 1])]
for d, d_star in cases:
    print(f"  d={d} vs d*={d_star} -> {iou_loss(d, d_star):.6f}")
print(f"  reference points: ln2={math.log(2):.6f}, ln3={math.log(3):.6f}")

print("\nangle loss 1 - cos(delta):")
for deg in (0, 15, 60, 90):
    delta = math.radians(deg)
    print(f"  delta={deg:3d} deg -> {angle_loss(delta / 2, -delta / 2):.4f}")

print("\nloss landscape: shrink/grow one side distance")
base = np.array([3.0, 8.0, 3.0, 8.0])
for scale in (0.25, 0.5, 1.0, 2.0, 4.0):
    d = base.copy()
    d[0] *= scale
    print(f"  d1 x {scale:4.2f} -> iou_loss = {iou_loss(d, base):.4f}")
