#!/usr/bin/env python3
"""Tour of the oriented-box representations.

A rotated rectangle can be written three ways: center form (cx, cy, w, h,
theta), corner form (D1..D4 clockwise from the lowest-x+y corner), and
distance form (an interior anchor point plus the four perpendicular side
distances). This script walks one box through all three and shows how the
canonical angle range absorbs quarter-turn ambiguity.
"""

import math

from rotbox import (
    DistanceForm,
    OrientedBox,
    from_corners,
    from_distance_form,
    normalize_angle,
    to_corners,
    to_distance_form,
)

box = OrientedBox(cx=120.0, cy=80.0, w=60.0, h=24.0, theta=math.radians(20))
print("center form: ", box)

corners = to_corners(box)
print("corner form (D1..D4, clockwise on screen):")
for i, (x, y) in enumerate(corners, start=1):
    print(f"  D{i} = ({x:8.3f}, {y:8.3f})")
print("round trip:  ", from_corners(corners))

anchor = (110.0, 85.0)
df = to_distance_form(box, anchor)
print(f"\ndistance form at anchor {anchor}:")
print(f"  d1 (top)    = {df.d1:.3f}")
print(f"  d2 (right)  = {df.d2:.3f}")
print(f"  d3 (bottom) = {df.d3:.3f}")
print(f"  d4 (left)   = {df.d4:.3f}")
print("  h = d1 + d3 =", df.d1 + df.d3, " w = d2 + d4 =", df.d2 + df.d4)
print("round trip:  ", from_distance_form(df))

print("\nangle normalization folds everything into (-45, 45] degrees:")
for deg in (-60.0, -45.0, 30.0, 80.0):
    w, h, t = normalize_angle(60.0, 24.0, math.radians(deg))
    print(f"  (w=60, h=24, {deg:+6.1f} deg) -> "
          f"(w={w:.0f}, h={h:.0f}, {math.degrees(t):+6.1f} deg)")

print("\nthe same physical rectangle, built two ways, lands on one canonical form:")
a = DistanceForm(0.0, 0.0, 12.0, 30.0, 12.0, 30.0, math.radians(10))
print("  ", from_distance_form(a))
