"""Oriented-rectangle algebra on image coordinates.

Conventions, fixed once and used by every other module:

* the y axis grows downward (image convention);
* rotating a local offset (u, v) uses R(theta) = [[cos, -sin], [sin, cos]];
* a box is canonical when theta lies in (-pi/4, pi/4]; adding or removing
  pi/2 swaps width and height without changing the point set;
* corners D1..D4 run clockwise on screen, D1 being the corner with the
  lowest x + y (ties broken by smaller y, then smaller x);
* side distances follow the corner labels: d1 -> D1D2 (top), d2 -> D2D3
  (right), d3 -> D3D4 (bottom), d4 -> D4D1 (left), so h = d1 + d3 and
  w = d2 + d4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import AnchorOutsideBox, NotARectangle

QUARTER_PI = math.pi / 4.0

# relative tolerance when accepting four points as a rectangle
RECT_TOL = 1e-3


@dataclass(frozen=True)
class OrientedBox:
    """Rotated rectangle: center, side lengths, canonical angle in radians."""

    cx: float
    cy: float
    w: float
    h: float
    theta: float = 0.0

    def __post_init__(self):
        for name in ("cx", "cy", "w", "h", "theta"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.w > 0.0 and self.h > 0.0):
            raise ValueError(f"box sides must be positive, got w={self.w}, h={self.h}")
        if not (-QUARTER_PI < self.theta <= QUARTER_PI):
            raise ValueError(f"theta must lie in (-pi/4, pi/4], got {self.theta}")

    @property
    def area(self) -> float:
        return self.w * self.h

    def astuple(self) -> tuple[float, float, float, float, float]:
        return (self.cx, self.cy, self.w, self.h, self.theta)


@dataclass(frozen=True)
class DistanceForm:
    """Anchor point plus perpendicular distances to the four sides."""

    x: float
    y: float
    d1: float
    d2: float
    d3: float
    d4: float
    theta: float

    def __post_init__(self):
        for name in ("x", "y", "d1", "d2", "d3", "d4", "theta"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if min(self.d1, self.d2, self.d3, self.d4) <= 0.0:
            raise ValueError("all side distances must be strictly positive")
        if not (-QUARTER_PI < self.theta <= QUARTER_PI):
            raise ValueError(f"theta must lie in (-pi/4, pi/4], got {self.theta}")

    def distances(self) -> tuple[float, float, float, float]:
        return (self.d1, self.d2, self.d3, self.d4)


def normalize_angle(w: float, h: float, theta: float) -> tuple[float, float, float]:
    """Fold theta into (-pi/4, pi/4], swapping w/h for every pi/2 shift.

    Accepts any theta in (-pi, pi]; the represented point set is unchanged.
    """
    if w <= 0.0 or h <= 0.0:
        raise ValueError("sides must be positive")
    half_pi = math.pi / 2.0
    while theta > QUARTER_PI:
        theta -= half_pi
        w, h = h, w
    while theta <= -QUARTER_PI:
        theta += half_pi
        w, h = h, w
    return w, h, theta


def _wrap_angle(theta: float) -> float:
    """Wrap an arbitrary angle into (-pi, pi]."""
    t = math.fmod(theta, 2.0 * math.pi)
    if t > math.pi:
        t -= 2.0 * math.pi
    elif t <= -math.pi:
        t += 2.0 * math.pi
    return t


def rigid_transform(box: OrientedBox, angle: float = 0.0, dx: float = 0.0,
                    dy: float = 0.0) -> OrientedBox:
    """Rotate the box by `angle` about the origin, then translate.

    The result is re-canonicalized, so the returned theta stays in range.
    """
    c, s = math.cos(angle), math.sin(angle)
    cx = c * box.cx - s * box.cy + dx
    cy = s * box.cx + c * box.cy + dy
    w, h, theta = normalize_angle(box.w, box.h, _wrap_angle(box.theta + angle))
    return OrientedBox(cx, cy, w, h, theta)


def _d1_index(pts: np.ndarray) -> int:
    """Index of the corner with lowest x+y; ties by smaller y, then x."""
    keys = sorted(range(len(pts)),
                  key=lambda i: (pts[i, 0] + pts[i, 1], pts[i, 1], pts[i, 0]))
    return keys[0]


def to_corners(box: OrientedBox) -> np.ndarray:
    """Corner points as a (4, 2) array in D1..D4 order (clockwise on screen)."""
    c, s = math.cos(box.theta), math.sin(box.theta)
    hw, hh = box.w / 2.0, box.h / 2.0
    local = ((-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh))
    pts = np.array([(box.cx + c * u - s * v, box.cy + s * u + c * v)
                    for u, v in local])
    k = _d1_index(pts)
    return np.roll(pts, -k, axis=0)


def from_corners(corners: Iterable[Sequence[float]]) -> OrientedBox:
    """Canonical box from four rectangle corners (any cyclic order).

    Raises NotARectangle when opposite sides differ by more than RECT_TOL
    relative, or adjacent sides deviate from orthogonal by more than
    RECT_TOL radians.
    """
    pts = np.asarray(list(corners), dtype=float).reshape(4, 2)
    center = pts.mean(axis=0)
    order = np.argsort(np.arctan2(pts[:, 1] - center[1], pts[:, 0] - center[0]))
    pts = pts[order]
    pts = np.roll(pts, -_d1_index(pts), axis=0)

    sides = np.roll(pts, -1, axis=0) - pts
    lens = np.hypot(sides[:, 0], sides[:, 1])
    if lens.min() <= 0.0:
        raise NotARectangle("degenerate side of zero length")
    for i, j in ((0, 2), (1, 3)):
        if abs(lens[i] - lens[j]) > RECT_TOL * max(lens[i], lens[j]):
            raise NotARectangle(
                f"opposite sides differ: {lens[i]:.6g} vs {lens[j]:.6g}")
    # |cos| of the corner angle bounds the deviation from a right angle
    for i in range(4):
        a, b = sides[i], sides[(i + 1) % 4]
        cosang = abs(float(np.dot(a, b)) / (lens[i] * lens[(i + 1) % 4]))
        if cosang > math.sin(RECT_TOL):
            raise NotARectangle(f"corner {i} deviates from 90 degrees")

    theta_raw = math.atan2(sides[0, 1], sides[0, 0])
    w, h, theta = normalize_angle(float(lens[0]), float(lens[1]),
                                  _wrap_angle(theta_raw))
    return OrientedBox(float(center[0]), float(center[1]), w, h, theta)


def from_distance_form(df: DistanceForm) -> OrientedBox:
    """Box whose sides sit at the given distances around the anchor point."""
    w = df.d2 + df.d4
    h = df.d1 + df.d3
    c, s = math.cos(df.theta), math.sin(df.theta)
    u = (df.d2 - df.d4) / 2.0
    v = (df.d3 - df.d1) / 2.0
    return OrientedBox(df.x + c * u - s * v, df.y + s * u + c * v, w, h, df.theta)


def _local_frame(box: OrientedBox, px: float, py: float) -> tuple[float, float]:
    c, s = math.cos(box.theta), math.sin(box.theta)
    dx, dy = px - box.cx, py - box.cy
    return c * dx + s * dy, -s * dx + c * dy


def to_distance_form(box: OrientedBox, anchor: Sequence[float]) -> DistanceForm:
    """Distances from an interior anchor point to the four sides.

    Raises AnchorOutsideBox unless the point is strictly inside.
    """
    u, v = _local_frame(box, float(anchor[0]), float(anchor[1]))
    d1 = v + box.h / 2.0
    d2 = box.w / 2.0 - u
    d3 = box.h / 2.0 - v
    d4 = u + box.w / 2.0
    if min(d1, d2, d3, d4) <= 0.0:
        raise AnchorOutsideBox(
            f"anchor ({anchor[0]}, {anchor[1]}) is not strictly inside the box")
    return DistanceForm(float(anchor[0]), float(anchor[1]), d1, d2, d3, d4, box.theta)


def contains_point(box: OrientedBox, p: Sequence[float]) -> bool:
    """Boundary-inclusive point-in-box test."""
    u, v = _local_frame(box, float(p[0]), float(p[1]))
    eps = 1e-9 * max(1.0, box.w, box.h)
    return abs(u) <= box.w / 2.0 + eps and abs(v) <= box.h / 2.0 + eps


def contains_points(box: OrientedBox, pts: np.ndarray) -> np.ndarray:
    """Vectorized contains_point over an (N, 2) array of points."""
    pts = np.asarray(pts, dtype=float)
    c, s = math.cos(box.theta), math.sin(box.theta)
    dx = pts[..., 0] - box.cx
    dy = pts[..., 1] - box.cy
    u = c * dx + s * dy
    v = -s * dx + c * dy
    eps = 1e-9 * max(1.0, box.w, box.h)
    return (np.abs(u) <= box.w / 2.0 + eps) & (np.abs(v) <= box.h / 2.0 + eps)


# ---------------------------------------------------------------------------
# exact IoU via convex clipping
# ---------------------------------------------------------------------------

def boxes_to_array(boxes) -> np.ndarray:
    """(N, 5) float array from OrientedBox instances or raw rows."""
    if isinstance(boxes, np.ndarray):
        arr = np.asarray(boxes, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 5:
            raise ValueError(f"expected (N, 5) box array, got {arr.shape}")
        return arr
    rows = []
    for b in boxes:
        if isinstance(b, OrientedBox):
            rows.append(b.astuple())
        else:
            rows.append(tuple(float(x) for x in b))
    if not rows:
        return np.zeros((0, 5))
    arr = np.asarray(rows, dtype=float)
    if arr.shape[1] != 5:
        raise ValueError(f"expected 5 values per box, got {arr.shape[1]}")
    return arr


def _corner_quads(arr: np.ndarray) -> np.ndarray:
    """(N, 4, 2) corner cycle (clockwise on screen) for an (N, 5) box array."""
    c = np.cos(arr[:, 4])
    s = np.sin(arr[:, 4])
    hw = arr[:, 2] / 2.0
    hh = arr[:, 3] / 2.0
    us = np.stack([-hw, hw, hw, -hw], axis=1)
    vs = np.stack([-hh, -hh, hh, hh], axis=1)
    x = arr[:, 0, None] + c[:, None] * us - s[:, None] * vs
    y = arr[:, 1, None] + s[:, None] * us + c[:, None] * vs
    return np.stack([x, y], axis=2)


_MAXV = 12  # intersection of two convex quads has at most 8 vertices; slack for ties


def _clip_intersection_area(subj: np.ndarray, clip: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman intersection areas for paired quads.

    subj, clip: (P, 4, 2) corner cycles with consistent winding (interior on
    the cross >= 0 side of each directed edge). Returns (P,) areas.
    """
    n = subj.shape[0]
    verts = np.zeros((n, _MAXV, 2))
    verts[:, :4] = subj
    count = np.full(n, 4, dtype=np.int64)
    rows = np.arange(n)[:, None]
    slots = np.arange(_MAXV)[None, :]

    for e in range(4):
        p1 = clip[:, e][:, None, :]
        edge = (clip[:, (e + 1) % 4] - clip[:, e])[:, None, :]
        rel = verts - p1
        cross = edge[..., 0] * rel[..., 1] - edge[..., 1] * rel[..., 0]
        valid = slots < count[:, None]
        inside = cross >= 0.0
        prev_idx = (slots - 1) % np.maximum(count[:, None], 1)
        prev_pts = verts[rows, prev_idx]
        prev_cross = cross[rows, prev_idx]
        crossing = (inside != (prev_cross >= 0.0)) & valid

        denom = prev_cross - cross
        t = prev_cross / np.where(denom == 0.0, 1.0, denom)
        ipt = prev_pts + t[..., None] * (verts - prev_pts)

        cand = np.empty((n, _MAXV, 2, 2))
        cand[:, :, 0, :] = ipt
        cand[:, :, 1, :] = verts
        cand = cand.reshape(n, _MAXV * 2, 2)
        keep = np.stack([crossing, inside & valid], axis=2).reshape(n, _MAXV * 2)

        pos = np.cumsum(keep, axis=1) - 1
        keep &= pos < _MAXV
        count = keep.sum(axis=1)
        verts = np.zeros((n, _MAXV, 2))
        rsel = np.broadcast_to(np.arange(n)[:, None], keep.shape)[keep]
        verts[rsel, pos[keep]] = cand[keep]

    valid = slots < count[:, None]
    nxt = (slots + 1) % np.maximum(count[:, None], 1)
    nxt_pts = verts[rows, nxt]
    terms = verts[..., 0] * nxt_pts[..., 1] - nxt_pts[..., 0] * verts[..., 1]
    area = np.abs(np.where(valid, terms, 0.0).sum(axis=1)) * 0.5
    return np.where(count >= 3, area, 0.0)


def _lex_less(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise lexicographic a < b over the last axis (paired rows)."""
    less = np.zeros(a.shape[:-1], dtype=bool)
    for f in range(a.shape[-1] - 1, -1, -1):
        less = (a[..., f] < b[..., f]) | ((a[..., f] == b[..., f]) & less)
    return less


class PreparedBoxes:
    """Boxes with corners and bounds precomputed for repeated IoU queries."""

    __slots__ = ("arr", "corners", "lo", "hi")

    def __init__(self, boxes):
        self.arr = boxes_to_array(boxes)
        self.corners = _corner_quads(self.arr)
        if len(self.arr):
            self.lo = self.corners.min(axis=1)
            self.hi = self.corners.max(axis=1)
        else:
            self.lo = np.zeros((0, 2))
            self.hi = np.zeros((0, 2))

    def __len__(self) -> int:
        return len(self.arr)


def _paired_ious(pa: PreparedBoxes, ia: np.ndarray,
                 pb: PreparedBoxes, ib: np.ndarray) -> np.ndarray:
    """IoU for index-aligned pairs (ia[p], ib[p]); the single code path all
    IoU queries share, so every caller agrees bit-for-bit."""
    overlap = ((pa.lo[ia, 0] <= pb.hi[ib, 0]) & (pb.lo[ib, 0] <= pa.hi[ia, 0]) &
               (pa.lo[ia, 1] <= pb.hi[ib, 1]) & (pb.lo[ib, 1] <= pa.hi[ia, 1]))
    out = np.zeros(len(ia))
    if overlap.any():
        sa, sb = ia[overlap], ib[overlap]
        a, b = pa.arr[sa], pb.arr[sb]
        swap = _lex_less(b, a)[:, None, None]
        subj = np.where(swap, pb.corners[sb], pa.corners[sa])
        clip = np.where(swap, pa.corners[sa], pb.corners[sb])
        inter = _clip_intersection_area(subj, clip)
        union = a[:, 2] * a[:, 3] + b[:, 2] * b[:, 3] - inter
        iou = np.where(inter > 0.0, inter / union, 0.0)
        out[overlap] = np.clip(iou, 0.0, 1.0)
    return out


def iou_matrix(boxes_a, boxes_b) -> np.ndarray:
    """Pairwise rotated IoU matrix, (N, M).

    Entry (i, j) is bit-identical to rotated_iou(a_i, b_j): each pair is
    clipped in a canonical operand order so the result does not depend on
    which argument came first.
    """
    pa = PreparedBoxes(boxes_a)
    pb = PreparedBoxes(boxes_b)
    n, m = len(pa), len(pb)
    if n == 0 or m == 0:
        return np.zeros((n, m))
    ia = np.repeat(np.arange(n), m)
    ib = np.tile(np.arange(m), n)
    return _paired_ious(pa, ia, pb, ib).reshape(n, m)


def rotated_iou(a: OrientedBox, b: OrientedBox) -> float:
    """Exact intersection-over-union of two rotated boxes, in [0, 1]."""
    return float(iou_matrix([a], [b])[0, 0])


# ---------------------------------------------------------------------------
# brute-force grid oracle (kept free of any clipping code)
# ---------------------------------------------------------------------------

def _row_spans(box: OrientedBox, ys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """For each horizontal grid row, the x-interval covered by the box.

    A rotated rectangle meets a horizontal line in one interval, obtained by
    intersecting the two local half-extent constraints. cos(theta) > 0 holds
    on the whole canonical angle range. Empty rows return lo > hi.
    """
    c, s = math.cos(box.theta), math.sin(box.theta)
    dy = ys - box.cy
    lo = box.cx + (-box.w / 2.0 - s * dy) / c
    hi = box.cx + (box.w / 2.0 - s * dy) / c
    if s != 0.0:
        q0 = box.cx + (c * dy - box.h / 2.0) / s
        q1 = box.cx + (c * dy + box.h / 2.0) / s
        lo = np.maximum(lo, np.minimum(q0, q1))
        hi = np.minimum(hi, np.maximum(q0, q1))
    else:
        bad = np.abs(dy) > box.h / 2.0
        lo = np.where(bad, np.inf, lo)
        hi = np.where(bad, -np.inf, hi)
    return lo, hi


def raster_iou_oracle(a: OrientedBox, b: OrientedBox, cell: float) -> float:
    """Grid-counting IoU: cells of the joint bounding region whose centers
    fall in a, b, or both. Independent of the clipping implementation."""
    if cell <= 0.0:
        raise ValueError("cell size must be positive")
    corners = np.vstack([to_corners(a), to_corners(b)])
    xmin, ymin = corners.min(axis=0)
    xmax, ymax = corners.max(axis=0)
    nx = max(1, int(math.ceil((xmax - xmin) / cell)))
    ny = max(1, int(math.ceil((ymax - ymin) / cell)))
    ys = ymin + (np.arange(ny) + 0.5) * cell

    lo_a, hi_a = _row_spans(a, ys)
    lo_b, hi_b = _row_spans(b, ys)

    def row_counts(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        k0 = np.ceil((lo - xmin) / cell - 0.5)
        k1 = np.floor((hi - xmin) / cell - 0.5)
        k0 = np.maximum(k0, 0.0)
        k1 = np.minimum(k1, float(nx - 1))
        return np.maximum(0.0, k1 - k0 + 1.0)

    in_a = row_counts(lo_a, hi_a).sum()
    in_b = row_counts(lo_b, hi_b).sum()
    in_both = row_counts(np.maximum(lo_a, lo_b), np.minimum(hi_a, hi_b)).sum()
    denom = in_a + in_b - in_both
    return float(in_both / denom) if denom > 0 else 0.0
