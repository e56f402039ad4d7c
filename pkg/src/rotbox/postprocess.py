"""Dense-map decoding, score alignment, and rotated NMS.

The pipeline is: threshold+decode every (cell, anchor) slot of each level,
optionally re-score each detection with a sampling pattern, greedily
suppress overlaps on the effective score, and drop survivors below the
final threshold. Everything is deterministic: candidate order is
(level, y, x, anchor) and score ties break on that provenance.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .anchors import AnchorSet, LevelSpec, decode
from .errors import ShapeMismatch
from .geometry import (
    OrientedBox,
    PreparedBoxes,
    _paired_ious,
    boxes_to_array,
)
from .lasa import SamplingPattern, ScoreMap, align_score


@dataclass
class RegressionMap:
    """Per-level regression channels, shaped (K, 5, H, W), finite."""

    level: LevelSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 4 or self.values.shape[1] != 5:
            raise ShapeMismatch(
                f"regression map must be (K, 5, H, W), got {self.values.shape}")
        if self.values.shape[2:] != (self.level.height, self.level.width):
            raise ShapeMismatch(
                f"regression map {self.values.shape} does not match level grid "
                f"{(self.level.height, self.level.width)}")
        if not np.isfinite(self.values).all():
            raise ShapeMismatch("regression map contains non-finite values")

    @property
    def k(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class Detection:
    """A decoded box with raw and aligned scores and its source slot."""

    box: OrientedBox
    score_raw: float
    score_aligned: float
    provenance: tuple[int, int, int, int]  # (level index, y, x, anchor)


@dataclass(frozen=True)
class PipelineConfig:
    score_thresh: float = 0.05
    final_thresh: float = 0.3
    pre_nms_topk: int = 2000
    nms_iou: float = 0.1
    pattern: Optional[SamplingPattern] = None

    def __post_init__(self):
        for name in ("score_thresh", "final_thresh", "nms_iou"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.pre_nms_topk < 1:
            raise ValueError("pre_nms_topk must be at least 1")


def decode_maps(scores: Sequence[ScoreMap], regs: Sequence[RegressionMap],
                anchors: AnchorSet, cfg: PipelineConfig) -> list[Detection]:
    """Threshold and decode all slots, keeping top-k per level by raw score."""
    if len(scores) != len(regs):
        raise ShapeMismatch("need one regression map per score map")
    pairs = sorted(zip(scores, regs), key=lambda p: p[0].level.group)

    dets: list[Detection] = []
    for sm, rm in pairs:
        if sm.level != rm.level:
            raise ShapeMismatch("score/regression maps disagree on the level")
        priors = anchors.group_priors(sm.level.group)
        if sm.k != len(priors) or rm.k != len(priors):
            raise ShapeMismatch(
                f"maps have K={sm.k}/{rm.k} but level {sm.level.name} "
                f"serves {len(priors)} priors")

        kk, yy, xx = np.where(sm.values >= cfg.score_thresh)
        if len(kk) == 0:
            continue
        raw = sm.values[kk, yy, xx]
        if len(kk) > cfg.pre_nms_topk:
            best = np.lexsort((kk, xx, yy, -raw))[:cfg.pre_nms_topk]
            kk, yy, xx, raw = kk[best], yy[best], xx[best], raw[best]
        order = np.lexsort((kk, xx, yy))
        stride = sm.level.stride
        lvl = sm.level.group
        for i in order:
            k, y, x = int(kk[i]), int(yy[i]), int(xx[i])
            ap = ((x + 0.5) * stride, (y + 0.5) * stride)
            box = decode(rm.values[k, :, y, x], priors[k], ap)
            score = float(raw[i])
            dets.append(Detection(box, score, score, (lvl, y, x, k)))
    return dets


# after this many survivors, batch the remaining pairs in one call instead
# of paying per-round overhead (worthwhile only for scatter-heavy sets)
_NMS_BATCH_AFTER = 24
_NMS_BATCH_MIN_REMAINING = 128


def _greedy_keep(boxes: np.ndarray, order: Sequence[int], iou_thresh: float) -> list[int]:
    """Greedy suppression: walk `order`, keep the next survivor, drop every
    remaining candidate whose IoU with it exceeds the threshold.

    Starts with one IoU row per survivor (cheap when few survive) and
    switches to a single batched matrix over the still-alive subset when
    many survive. Every pair flows through _paired_ious either way, so the
    survivor set never depends on the strategy switch.
    """
    n = len(boxes)
    prepared = PreparedBoxes(boxes)
    alive = np.ones(n, dtype=bool)
    kept: list[int] = []
    matrix = None
    sub_map = None
    for i in order:
        if not alive[i]:
            continue
        kept.append(int(i))
        alive[i] = False
        cand = np.nonzero(alive)[0]
        if len(cand) == 0:
            break
        if matrix is not None:
            row = matrix[sub_map[i]]
            alive[cand[row[sub_map[cand]] > iou_thresh]] = False
            continue
        head = np.full(len(cand), i)
        ious = _paired_ious(prepared, head, prepared, cand)
        alive[cand[ious > iou_thresh]] = False
        if len(kept) >= _NMS_BATCH_AFTER:
            live = np.nonzero(alive)[0]
            if len(live) >= _NMS_BATCH_MIN_REMAINING:
                m = len(live)
                ia = np.repeat(live, m)
                ib = np.tile(live, m)
                matrix = _paired_ious(prepared, ia, prepared, ib).reshape(m, m)
                sub_map = np.full(n, -1)
                sub_map[live] = np.arange(m)
    return kept


def rotated_nms(dets: Sequence[Detection], iou_thresh: float) -> list[Detection]:
    """Greedy NMS on effective (aligned) scores; ties break on provenance.

    Survivors come back sorted by score descending.
    """
    if not dets:
        return []
    order = sorted(range(len(dets)),
                   key=lambda i: (-dets[i].score_aligned, dets[i].provenance))
    boxes = boxes_to_array([d.box for d in dets])
    kept = _greedy_keep(boxes, order, iou_thresh)
    return [dets[i] for i in kept]


def nms_indices(boxes, scores, iou_thresh: float) -> list[int]:
    """Greedy NMS over raw (N, 5) box rows; returns surviving input indices.

    Ties between equal scores break on the original index.
    """
    arr = boxes_to_array(boxes)
    sc = np.asarray(scores, dtype=float)
    if len(sc) != len(arr):
        raise ShapeMismatch("scores length must match box count")
    if len(arr) == 0:
        return []
    order = np.lexsort((np.arange(len(arr)), -sc))
    return _greedy_keep(arr, order, iou_thresh)


def run_pipeline(scores: Sequence[ScoreMap], regs: Sequence[RegressionMap],
                 anchors: AnchorSet, cfg: PipelineConfig) -> list[Detection]:
    """decode -> optional score alignment -> NMS -> final threshold."""
    dets = decode_maps(scores, regs, anchors, cfg)
    if cfg.pattern is not None:
        by_group = {sm.level.group: sm for sm in scores}
        dets = [replace(d, score_aligned=align_score(
                    d.box, d.provenance[3], by_group[d.provenance[0]], cfg.pattern))
                for d in dets]
    survivors = rotated_nms(dets, cfg.nms_iou)
    return [d for d in survivors if d.score_aligned >= cfg.final_thresh]
