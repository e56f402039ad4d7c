"""Forward evaluation of the detection training objective.

Three terms: focal classification loss over positive and background slots
(ignored slots contribute nothing), an IoU distance loss over the four
side distances, and a cosine angle loss, the latter two gated to positive
slots. The distance loss works on prior-relative distances, so the prior
scale cancels in the intersection/union ratio and targets can be compared
in unit-prior space.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .anchors import BACKGROUND, POSITIVE, LevelAssignment
from .errors import NonPositiveDistance, ShapeMismatch
from .geometry import QUARTER_PI
from .lasa import ScoreMap

DEFAULT_EPS = 1e-9


@dataclass(frozen=True)
class LossConfig:
    """Focal parameters, term weights, and the numerical stabilizer."""

    alpha: float = 0.25
    gamma: float = 2.0
    lambda_d: float = 1.0
    lambda_a: float = 10.0
    eps: float = DEFAULT_EPS

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if self.gamma < 0.0 or self.lambda_d < 0.0 or self.lambda_a < 0.0:
            raise ValueError("gamma and term weights must be non-negative")
        if self.eps <= 0.0:
            raise ValueError("eps must be positive")


@dataclass(frozen=True)
class LossReport:
    """Raw term sums, normalizer counts, and the combined total."""

    l_cls: float
    l_dist: float
    l_angle: float
    total: float
    n_cls: int
    n_reg: int

    def as_dict(self) -> dict:
        return {"l_cls": self.l_cls, "l_dist": self.l_dist,
                "l_angle": self.l_angle, "total": self.total,
                "n_cls": self.n_cls, "n_reg": self.n_reg}


def focal_loss(p, p_star, alpha: float = 0.25, gamma: float = 2.0,
               eps: float = DEFAULT_EPS):
    """-alpha_t (1 - p_t)^gamma log(p_t); accepts scalars or arrays."""
    p = np.clip(np.asarray(p, dtype=float), eps, 1.0 - eps)
    positive = np.asarray(p_star) == 1
    p_t = np.where(positive, p, 1.0 - p)
    a_t = np.where(positive, alpha, 1.0 - alpha)
    out = -a_t * (1.0 - p_t) ** gamma * np.log(p_t)
    return float(out) if out.ndim == 0 else out


def iou_loss(d, d_star, eps: float = DEFAULT_EPS):
    """-log of the intersection/union ratio of two side-distance 4-tuples.

    Both tuples use the (top, right, bottom, left) order. Accepts (..., 4)
    arrays and reduces over the last axis.
    """
    d = np.asarray(d, dtype=float)
    ds = np.asarray(d_star, dtype=float)
    if d.shape[-1] != 4 or ds.shape[-1] != 4:
        raise ShapeMismatch("side distances must have 4 components")
    if np.any(d <= 0.0) or np.any(ds <= 0.0):
        raise NonPositiveDistance("side distances must be strictly positive")
    inter_h = np.minimum(d[..., 0], ds[..., 0]) + np.minimum(d[..., 2], ds[..., 2])
    inter_w = np.minimum(d[..., 1], ds[..., 1]) + np.minimum(d[..., 3], ds[..., 3])
    inter = inter_h * inter_w
    area = (d[..., 0] + d[..., 2]) * (d[..., 1] + d[..., 3])
    area_star = (ds[..., 0] + ds[..., 2]) * (ds[..., 1] + ds[..., 3])
    union = area + area_star - inter
    out = -np.log((inter + eps) / (union + eps))
    return float(out) if out.ndim == 0 else out


def angle_loss(theta, theta_star):
    """1 - cos(theta - theta_star), in [0, 1] on the canonical angle range."""
    out = 1.0 - np.cos(np.asarray(theta, dtype=float) - np.asarray(theta_star, dtype=float))
    return float(out) if out.ndim == 0 else out


def _check_level_shapes(score: ScoreMap, reg: np.ndarray, label: LevelAssignment,
                        target: np.ndarray) -> None:
    k, h, w = score.values.shape
    if reg.shape != (k, 5, h, w):
        raise ShapeMismatch(
            f"regression map {reg.shape} does not match scores {(k, 5, h, w)}")
    if label.status.shape != (k, h, w):
        raise ShapeMismatch(
            f"label map {label.status.shape} does not match scores {(k, h, w)}")
    if target.shape != (k, 5, h, w):
        raise ShapeMismatch(
            f"target map {target.shape} does not match scores {(k, 5, h, w)}")
    if score.level != label.level:
        raise ShapeMismatch("score map and labels disagree on the level")


def total_loss(scores: Sequence[ScoreMap], regs: Sequence, labels: Sequence[LevelAssignment],
               targets: Sequence[np.ndarray], cfg: LossConfig = LossConfig()) -> LossReport:
    """Combine the three terms over all levels.

    Classification sums over positive and background slots; regression terms
    sum over positives only, comparing prediction and target after decoding
    both through the shared (unit) prior. Both sums are normalized by
    max(1, number of positives).
    """
    if not (len(scores) == len(regs) == len(labels) == len(targets)):
        raise ShapeMismatch("per-level sequences must have equal length")

    reg_arrays = [np.asarray(getattr(r, "values", r), dtype=float) for r in regs]
    target_arrays = [np.asarray(t, dtype=float) for t in targets]
    for sm, reg, lab, tgt in zip(scores, reg_arrays, labels, target_arrays):
        _check_level_shapes(sm, reg, lab, tgt)

    n_pos = sum(lab.positive_count() for lab in labels)
    n_cls = n_reg = max(1, n_pos)

    l_cls = 0.0
    l_dist = 0.0
    l_angle = 0.0
    for sm, reg, lab, tgt in zip(scores, reg_arrays, labels, target_arrays):
        pos = lab.status == POSITIVE
        bg = lab.status == BACKGROUND
        if pos.any():
            l_cls += float(np.sum(focal_loss(sm.values[pos], 1, cfg.alpha,
                                             cfg.gamma, cfg.eps)))
        if bg.any():
            l_cls += float(np.sum(focal_loss(sm.values[bg], 0, cfg.alpha,
                                             cfg.gamma, cfg.eps)))
        if pos.any():
            kk, yy, xx = np.nonzero(pos)
            t_pred = reg[kk, :, yy, xx]
            t_star = tgt[kk, :, yy, xx]
            d_pred = np.exp(t_pred[:, :4])
            d_star = np.exp(t_star[:, :4])
            l_dist += float(np.sum(iou_loss(d_pred, d_star, cfg.eps)))
            th_pred = (2.0 / (1.0 + np.exp(-t_pred[:, 4])) - 1.0) * QUARTER_PI
            th_star = (2.0 / (1.0 + np.exp(-t_star[:, 4])) - 1.0) * QUARTER_PI
            l_angle += float(np.sum(angle_loss(th_pred, th_star)))

    total = l_cls / n_cls + (cfg.lambda_d * l_dist + cfg.lambda_a * l_angle) / n_reg
    return LossReport(l_cls, l_dist, l_angle, total, n_cls, n_reg)
