"""Anchor priors, positive/ignored/background assignment, target encoding.

Priors are (w_k, h_k) pairs clustered from ground-truth dimensions, split
into three area groups; group g is served by feature level g (P2 gets the
smallest boxes, P4 the largest). Regression targets are log-space offsets
from the prior for the four side distances, plus a pre-sigmoid logit for
the angle:

    d1 = h_k * exp(t1)    d3 = h_k * exp(t3)
    d2 = w_k * exp(t2)    d4 = w_k * exp(t4)
    theta = (2 * sigmoid(t0) - 1) * pi/4
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AnchorOutsideBox, InsufficientData
from .geometry import (
    QUARTER_PI,
    OrientedBox,
    contains_point,
    contains_points,
    rotated_iou,
)

LEVEL_STRIDES = {"P2": 4, "P3": 8, "P4": 16}
LEVEL_ORDER = ("P2", "P3", "P4")

# assignment thresholds on the ground-truth/prior IoU
POSITIVE_IOU = 0.5
IGNORE_IOU = 0.2

# label codes stored in assignment maps
BACKGROUND = 0
IGNORED = 1
POSITIVE = 2

# side distances are clamped to this floor before taking logs, so anchor
# points sitting exactly on a ground-truth edge still encode
MIN_SIDE_DISTANCE = 1e-3

# the angle fraction is clamped away from {0, 1} before the logit
ANGLE_CLAMP = 1e-4

KMEANS_MAX_ITERS = 100


@dataclass(frozen=True)
class AnchorPrior:
    """A clustered (width, height) prior and the area group it belongs to."""

    w: float
    h: float
    group: int

    def __post_init__(self):
        object.__setattr__(self, "w", float(self.w))
        object.__setattr__(self, "h", float(self.h))
        if self.w <= 0.0 or self.h <= 0.0:
            raise ValueError("prior sides must be positive")
        if self.group not in (0, 1, 2):
            raise ValueError(f"group must be 0, 1 or 2, got {self.group}")


@dataclass(frozen=True)
class AnchorSet:
    """Fifteen priors (three area groups of five) plus the area cut points."""

    priors: tuple[AnchorPrior, ...]
    group_boundaries: tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "priors", tuple(self.priors))
        object.__setattr__(self, "group_boundaries",
                           tuple(float(b) for b in self.group_boundaries))
        counts = [sum(1 for p in self.priors if p.group == g) for g in range(3)]
        if counts != [5, 5, 5]:
            raise ValueError(f"expected 5 priors per group, got {counts}")
        b1, b2 = self.group_boundaries
        if not b1 < b2:
            raise ValueError("group boundaries must be strictly increasing")

    def group_priors(self, group: int) -> tuple[AnchorPrior, ...]:
        return tuple(p for p in self.priors if p.group == group)


@dataclass(frozen=True)
class LevelSpec:
    """One dense prediction level: name, stride, and feature-grid shape."""

    name: str
    stride: int
    height: int
    width: int

    def __post_init__(self):
        if self.name not in LEVEL_STRIDES:
            raise ValueError(f"unknown level {self.name!r}")
        if self.stride != LEVEL_STRIDES[self.name]:
            raise ValueError(
                f"{self.name} must have stride {LEVEL_STRIDES[self.name]}")
        if self.height <= 0 or self.width <= 0:
            raise ValueError("grid dimensions must be positive")

    @property
    def group(self) -> int:
        return LEVEL_ORDER.index(self.name)

    def anchor_xs(self) -> np.ndarray:
        return (np.arange(self.width) + 0.5) * self.stride

    def anchor_ys(self) -> np.ndarray:
        return (np.arange(self.height) + 0.5) * self.stride

    def anchor_point(self, y: int, x: int) -> tuple[float, float]:
        return ((x + 0.5) * self.stride, (y + 0.5) * self.stride)


def levels_for_image(width: int, height: int) -> list[LevelSpec]:
    """P2/P3/P4 grids just large enough to cover a width x height image."""
    return [LevelSpec(name, s, -(-height // s), -(-width // s))
            for name, s in ((n, LEVEL_STRIDES[n]) for n in LEVEL_ORDER)]


@dataclass(frozen=True)
class EncodedTarget:
    """Log-space side offsets t1..t4 and the angle logit t0."""

    t1: float
    t2: float
    t3: float
    t4: float
    t0: float

    def as_array(self) -> np.ndarray:
        return np.array([self.t1, self.t2, self.t3, self.t4, self.t0])


@dataclass
class LevelAssignment:
    """Per-cell, per-anchor labels for one level.

    status holds BACKGROUND/IGNORED/POSITIVE codes, gt_index the matched
    ground-truth index for positives (-1 elsewhere). Both are (K, H, W).
    """

    level: LevelSpec
    status: np.ndarray
    gt_index: np.ndarray

    def positive_count(self) -> int:
        return int((self.status == POSITIVE).sum())


# ---------------------------------------------------------------------------
# k-means prior fitting
# ---------------------------------------------------------------------------

def _wh_iou(dims: np.ndarray, cents: np.ndarray) -> np.ndarray:
    """IoU of co-centered axis-aligned boxes, (n, k) for (n,2) vs (k,2)."""
    inter = (np.minimum(dims[:, None, 0], cents[None, :, 0]) *
             np.minimum(dims[:, None, 1], cents[None, :, 1]))
    union = (dims[:, 0] * dims[:, 1])[:, None] + (cents[:, 0] * cents[:, 1])[None, :] - inter
    return inter / union


def _kmeans_objective(dims: np.ndarray, cents: np.ndarray) -> float:
    return float((1.0 - _wh_iou(dims, cents)).min(axis=1).mean())


def _kmeans_pp_init(dims: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    cents = [dims[rng.integers(len(dims))]]
    for _ in range(k - 1):
        d2 = (1.0 - _wh_iou(dims, np.asarray(cents))).min(axis=1) ** 2
        total = d2.sum()
        if total <= 0.0:
            idx = int(rng.integers(len(dims)))
        else:
            idx = int(rng.choice(len(dims), p=d2 / total))
        cents.append(dims[idx])
    return np.asarray(cents, dtype=float)


def _kmeans_group(dims: np.ndarray, k: int, rng: np.random.Generator,
                  history: list | None = None) -> np.ndarray:
    """Lloyd iterations under the 1-IoU distance.

    Centroid updates use cluster means; an update that would increase the
    objective is discarded (mean updates do not minimize this distance, so
    monotonicity needs the guard). `history` collects the objective after
    every accepted iteration.
    """
    cents = _kmeans_pp_init(dims, k, rng)
    obj = _kmeans_objective(dims, cents)
    if history is not None:
        history.append(obj)
    for _ in range(KMEANS_MAX_ITERS):
        members = np.argmin(1.0 - _wh_iou(dims, cents), axis=1)
        new_cents = cents.copy()
        for c in range(k):
            sel = members == c
            if sel.any():
                new_cents[c] = dims[sel].mean(axis=0)
        new_obj = _kmeans_objective(dims, new_cents)
        if new_obj > obj:
            break
        shift = np.abs(new_cents - cents).max()
        cents, obj = new_cents, new_obj
        if history is not None:
            history.append(obj)
        if shift < 1e-4:
            break
    return cents


def fit_anchor_priors(gt_dims: Sequence[Sequence[float]], seed: int) -> AnchorSet:
    """Cluster ground-truth (w, h) pairs into 3 area groups x 5 priors.

    Dimensions are sorted by area and split into equal-count tertiles;
    each tertile is clustered with seeded k-means++ / Lloyd under the
    1 - IoU(co-centered boxes) distance. Deterministic for a fixed seed.
    """
    dims = np.asarray([[float(w), float(h)] for w, h in gt_dims], dtype=float)
    if len(dims) < 15:
        raise InsufficientData(
            f"need at least 15 ground-truth dimension pairs, got {len(dims)}")
    if np.any(dims <= 0.0):
        raise InsufficientData("ground-truth dimensions must be positive")

    areas = dims[:, 0] * dims[:, 1]
    order = np.argsort(areas, kind="stable")
    groups = np.array_split(order, 3)
    if min(len(g) for g in groups) < 5:
        raise InsufficientData("each area tertile needs at least 5 samples")

    b1 = (areas[groups[0]].max() + areas[groups[1]].min()) / 2.0
    b2 = (areas[groups[1]].max() + areas[groups[2]].min()) / 2.0
    # identical areas across the cut collapse the midpoints; keep them ordered
    if not b1 < b2:
        b2 = np.nextafter(b1, np.inf)

    rng = np.random.default_rng(seed)
    priors = []
    for g, idx in enumerate(groups):
        cents = _kmeans_group(dims[idx], 5, rng)
        cents = cents[np.lexsort((cents[:, 0], cents[:, 0] * cents[:, 1]))]
        priors.extend(AnchorPrior(w, h, g) for w, h in cents)
    return AnchorSet(tuple(priors), (float(b1), float(b2)))


# ---------------------------------------------------------------------------
# assignment
# ---------------------------------------------------------------------------

def prior_gt_iou(gt: OrientedBox, prior: AnchorPrior) -> float:
    """Rotated IoU between a ground truth and its co-centered upright prior."""
    return rotated_iou(gt, OrientedBox(gt.cx, gt.cy, prior.w, prior.h, 0.0))


def assign(gts: Sequence[OrientedBox], levels: Sequence[LevelSpec],
           anchors: AnchorSet) -> list[LevelAssignment]:
    """Label every (level, cell, anchor) slot.

    A slot is positive when its anchor point lies inside some ground truth
    and the best prior/ground-truth IoU over the containing boxes exceeds
    0.5 (matched to the containing box with the highest IoU, ties to the
    lowest index); ignored when that best IoU falls in [0.2, 0.5]; and
    background otherwise.
    """
    out = []
    for level in levels:
        priors = anchors.group_priors(level.group)
        k_count = len(priors)
        status = np.zeros((k_count, level.height, level.width), dtype=np.int8)
        gt_index = np.full((k_count, level.height, level.width), -1, dtype=np.int32)

        if gts:
            xs, ys = np.meshgrid(level.anchor_xs(), level.anchor_ys())
            pts = np.stack([xs, ys], axis=-1)
            inside = np.stack([contains_points(gt, pts) for gt in gts])
            pair_iou = np.array([[prior_gt_iou(gt, p) for p in priors] for gt in gts])

            inside_any = inside.any(axis=0)
            for k in range(k_count):
                best_iou = np.zeros((level.height, level.width))
                best_gt = np.full((level.height, level.width), -1, dtype=np.int32)
                for j in range(len(gts)):
                    upd = inside[j] & (pair_iou[j, k] > best_iou)
                    best_iou[upd] = pair_iou[j, k]
                    best_gt[upd] = j
                pos = inside_any & (best_iou > POSITIVE_IOU)
                ign = inside_any & ~pos & (best_iou >= IGNORE_IOU) & (best_iou <= POSITIVE_IOU)
                status[k][ign] = IGNORED
                status[k][pos] = POSITIVE
                gt_index[k][pos] = best_gt[pos]

        out.append(LevelAssignment(level, status, gt_index))
    return out


# ---------------------------------------------------------------------------
# Eq-style encode / decode
# ---------------------------------------------------------------------------

def _logit(q: float) -> float:
    return math.log(q / (1.0 - q))


def encode_points(gt: OrientedBox, prior: AnchorPrior, pts: np.ndarray) -> np.ndarray:
    """Vectorized encode for (N, 2) anchor points inside `gt` -> (N, 5)."""
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    c, s = math.cos(gt.theta), math.sin(gt.theta)
    dx = pts[:, 0] - gt.cx
    dy = pts[:, 1] - gt.cy
    u = c * dx + s * dy
    v = -s * dx + c * dy
    d1 = np.maximum(v + gt.h / 2.0, MIN_SIDE_DISTANCE)
    d2 = np.maximum(gt.w / 2.0 - u, MIN_SIDE_DISTANCE)
    d3 = np.maximum(gt.h / 2.0 - v, MIN_SIDE_DISTANCE)
    d4 = np.maximum(u + gt.w / 2.0, MIN_SIDE_DISTANCE)
    q = min(max(gt.theta / QUARTER_PI * 0.5 + 0.5, ANGLE_CLAMP), 1.0 - ANGLE_CLAMP)
    t0 = _logit(q)
    return np.stack([np.log(d1 / prior.h), np.log(d2 / prior.w),
                     np.log(d3 / prior.h), np.log(d4 / prior.w),
                     np.full(len(pts), t0)], axis=1)


def encode(gt: OrientedBox, prior: AnchorPrior,
           anchor_point: Sequence[float]) -> EncodedTarget:
    """Regression target for one anchor point (inside or on the boundary)."""
    if not contains_point(gt, anchor_point):
        raise AnchorOutsideBox(
            f"anchor point {tuple(anchor_point)} lies outside the ground truth")
    row = encode_points(gt, prior, np.asarray(anchor_point, dtype=float))[0]
    return EncodedTarget(*(float(v) for v in row))


def decode(t, prior: AnchorPrior, anchor_point: Sequence[float]) -> OrientedBox:
    """Box from a target vector (EncodedTarget or length-5 array) and prior."""
    if isinstance(t, EncodedTarget):
        t1, t2, t3, t4, t0 = t.t1, t.t2, t.t3, t.t4, t.t0
    else:
        t1, t2, t3, t4, t0 = (float(v) for v in t)
    d1 = prior.h * math.exp(t1)
    d2 = prior.w * math.exp(t2)
    d3 = prior.h * math.exp(t3)
    d4 = prior.w * math.exp(t4)
    # keep the angle strictly inside (-pi/4, pi/4) even when the sigmoid
    # saturates to exactly 0 or 1 in floats
    if t0 >= 0.0:
        sig = 1.0 / (1.0 + math.exp(-t0))
    else:
        e = math.exp(t0)
        sig = e / (1.0 + e)
    sig = min(max(sig, 1e-12), 1.0 - 1e-12)
    theta = (2.0 * sig - 1.0) * QUARTER_PI
    c, s = math.cos(theta), math.sin(theta)
    u = (d2 - d4) / 2.0
    v = (d3 - d1) / 2.0
    x, y = float(anchor_point[0]), float(anchor_point[1])
    return OrientedBox(x + c * u - s * v, y + s * u + c * v, d2 + d4, d1 + d3, theta)


def build_target_maps(gts: Sequence[OrientedBox], anchors: AnchorSet,
                      assignments: Sequence[LevelAssignment]) -> list[np.ndarray]:
    """(K, 5, H, W) encoded-target arrays, filled at positive slots."""
    maps = []
    for asg in assignments:
        level = asg.level
        priors = anchors.group_priors(level.group)
        target = np.zeros((len(priors), 5, level.height, level.width))
        for k in range(len(priors)):
            kk, yy, xx = np.where(asg.status[k:k + 1] == POSITIVE)
            if len(yy) == 0:
                continue
            pts = np.stack([(xx + 0.5) * level.stride,
                            (yy + 0.5) * level.stride], axis=1)
            gt_ids = asg.gt_index[k, yy, xx]
            for j in np.unique(gt_ids):
                sel = gt_ids == j
                rows = encode_points(gts[int(j)], priors[k], pts[sel])
                target[k, :, yy[sel], xx[sel]] = rows
        maps.append(target)
    return maps
