"""Locality-aware score alignment.

A decoded box is re-scored by averaging the classification score map at a
small set of pattern points placed inside the box. Points are expressed in
half-extent units: local (u, v) maps to center + R(theta) . (u*w/2, v*h/2),
so every pattern point stays strictly interior and rotates with the box.
Map lookups use bilinear interpolation with clamp-to-edge padding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .anchors import LevelSpec
from .errors import ShapeMismatch, ValidationError
from .geometry import OrientedBox


@dataclass(frozen=True)
class SamplingPattern:
    """Named set of centrally symmetric local sampling offsets."""

    kind: str
    points: tuple[tuple[float, float], ...]


def _diamond13_points() -> tuple[tuple[float, float], ...]:
    # center, rhombus vertices, and thirds along each rhombus edge
    verts = [(0.5, 0.0), (0.0, 0.5), (-0.5, 0.0), (0.0, -0.5)]
    pts = [(0.0, 0.0)] + verts
    for i in range(4):
        (x0, y0), (x1, y1) = verts[i], verts[(i + 1) % 4]
        for f in (1.0 / 3.0, 2.0 / 3.0):
            pts.append((x0 + f * (x1 - x0), y0 + f * (y1 - y0)))
    return tuple(pts)


RECT9 = SamplingPattern(
    "rect9", tuple((u, v) for v in (-0.5, 0.0, 0.5) for u in (-0.5, 0.0, 0.5)))
DIAMOND5 = SamplingPattern(
    "diamond5", ((0.0, 0.0), (0.5, 0.0), (-0.5, 0.0), (0.0, 0.5), (0.0, -0.5)))
DIAMOND9 = SamplingPattern(
    "diamond9", DIAMOND5.points + ((0.25, 0.25), (0.25, -0.25),
                                   (-0.25, 0.25), (-0.25, -0.25)))
DIAMOND13 = SamplingPattern("diamond13", _diamond13_points())

PATTERNS = {p.kind: p for p in (RECT9, DIAMOND5, DIAMOND9, DIAMOND13)}


def pattern_by_name(name: str) -> SamplingPattern:
    try:
        return PATTERNS[name]
    except KeyError:
        raise ValidationError(
            f"unknown sampling pattern {name!r}; expected one of {sorted(PATTERNS)}"
        ) from None


@dataclass
class ScoreMap:
    """Per-level classification probabilities, shaped (K, H, W) in [0, 1]."""

    level: LevelSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 3:
            raise ShapeMismatch(f"score map must be (K, H, W), got {self.values.shape}")
        if self.values.shape[1:] != (self.level.height, self.level.width):
            raise ShapeMismatch(
                f"score map {self.values.shape} does not match level grid "
                f"{(self.level.height, self.level.width)}")
        if self.values.size and (self.values.min() < 0.0 or self.values.max() > 1.0):
            raise ValidationError("score map values must lie in [0, 1]")

    @property
    def k(self) -> int:
        return self.values.shape[0]


def sampling_points(box: OrientedBox, pattern: SamplingPattern) -> np.ndarray:
    """Image-coordinate sampling points, (N, 2), strictly inside the box."""
    local = np.asarray(pattern.points, dtype=float)
    c, s = math.cos(box.theta), math.sin(box.theta)
    u = local[:, 0] * box.w / 2.0
    v = local[:, 1] * box.h / 2.0
    return np.stack([box.cx + c * u - s * v, box.cy + s * u + c * v], axis=1)


def _bilinear(values: np.ndarray, pts: np.ndarray, stride: int) -> np.ndarray:
    """Clamp-to-edge bilinear lookup of a (H, W) grid at image points."""
    h, w = values.shape
    fx = np.clip(pts[:, 0] / stride - 0.5, 0.0, w - 1.0)
    fy = np.clip(pts[:, 1] / stride - 0.5, 0.0, h - 1.0)
    x0 = np.floor(fx).astype(int)
    y0 = np.floor(fy).astype(int)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    wx = fx - x0
    wy = fy - y0
    # lerp form: exact when the blended neighbors are equal
    top = values[y0, x0] + wx * (values[y0, x1] - values[y0, x0])
    bot = values[y1, x0] + wx * (values[y1, x1] - values[y1, x0])
    return top + wy * (bot - top)


def bilinear_sample(score_map: ScoreMap, p: Sequence[float], k: int) -> float:
    """Single bilinear lookup of anchor channel k at an image point."""
    if not 0 <= k < score_map.k:
        raise ValidationError(f"anchor index {k} out of range for K={score_map.k}")
    pt = np.asarray([[float(p[0]), float(p[1])]])
    return float(_bilinear(score_map.values[k], pt, score_map.level.stride)[0])


def align_score(box: OrientedBox, k: int, score_map: ScoreMap,
                pattern: SamplingPattern) -> float:
    """Mean bilinear score over the pattern points inside the box."""
    if not 0 <= k < score_map.k:
        raise ValidationError(f"anchor index {k} out of range for K={score_map.k}")
    pts = sampling_points(box, pattern)
    samples = _bilinear(score_map.values[k], pts, score_map.level.stride)
    # anchored mean: exact pass-through on constant score fields
    return float(samples[0] + (samples - samples[0]).mean())
