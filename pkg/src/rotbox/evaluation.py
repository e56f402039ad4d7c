"""Detection-to-ground-truth matching and average precision.

Matching follows the single-match protocol: detections are swept globally
in score order and claim their best-IoU unmatched ground truth when the
overlap clears the threshold. Ground truths flagged difficult are invisible
to both matching and the ground-truth count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import NoGroundTruth
from .geometry import OrientedBox, iou_matrix
from .parallel import parallel_map
from .postprocess import Detection


@dataclass(frozen=True)
class GroundTruth:
    box: OrientedBox
    difficult: bool = False


@dataclass(frozen=True)
class APResult:
    ap: float
    pr_points: tuple[tuple[float, float], ...]
    n_gt: int
    n_det: int

    def as_dict(self) -> dict:
        return {"ap": self.ap, "n_gt": self.n_gt, "n_det": self.n_det,
                "pr_points": [list(p) for p in self.pr_points]}


def match_detections(dets_by_image: Mapping[str, Sequence[Detection]],
                     gts_by_image: Mapping[str, Sequence[GroundTruth]],
                     iou_thresh: float = 0.5,
                     ) -> tuple[np.ndarray, np.ndarray, int]:
    """Flag every detection TP/FP against the ground truth.

    Returns (tp_flags, scores, n_gt) in global sweep order: score
    descending, ties by image id then provenance. n_gt excludes difficult
    boxes.
    """
    image_ids = sorted(set(dets_by_image) | set(gts_by_image))
    n_gt = sum(sum(0 if g.difficult else 1 for g in gts_by_image.get(img, ()))
               for img in image_ids)

    entries = []  # (sort key, image, local det index)
    for img in image_ids:
        for i, det in enumerate(dets_by_image.get(img, ())):
            entries.append(((-det.score_aligned, img, det.provenance), img, i))
    entries.sort(key=lambda e: e[0])

    def image_iou(img: str) -> np.ndarray:
        dets = dets_by_image.get(img, ())
        gts = [g for g in gts_by_image.get(img, ()) if not g.difficult]
        if not dets or not gts:
            return np.zeros((len(dets), len(gts)))
        return iou_matrix([d.box for d in dets], [g.box for g in gts])

    iou_by_image = dict(zip(image_ids, parallel_map(image_iou, image_ids)))
    matched = {img: np.zeros(iou_by_image[img].shape[1], dtype=bool)
               for img in image_ids}

    flags = np.zeros(len(entries), dtype=bool)
    scores = np.zeros(len(entries))
    for rank, (_, img, i) in enumerate(entries):
        scores[rank] = dets_by_image[img][i].score_aligned
        row = iou_by_image[img][i]
        free = ~matched[img]
        if free.any():
            cand = np.nonzero(free)[0]
            j = cand[int(np.argmax(row[cand]))]
            if row[j] >= iou_thresh:
                matched[img][j] = True
                flags[rank] = True
    return flags, scores, n_gt


def average_precision(flags, scores, n_gt: int,
                      method: str = "voc07") -> APResult:
    """Summarize a TP/FP sweep as average precision.

    voc07 averages the max precision at the 11 recall thresholds
    0.0, 0.1, ..., 1.0; all_points integrates the interpolated PR curve.
    """
    if n_gt < 1:
        raise NoGroundTruth("average precision needs at least one ground truth")
    if method not in ("voc07", "all_points"):
        raise ValueError(f"unknown AP method {method!r}")

    flags = np.asarray(flags, dtype=bool)
    scores = np.asarray(scores, dtype=float)
    order = np.lexsort((np.arange(len(scores)), -scores))
    flags = flags[order]

    tp = np.cumsum(flags)
    fp = np.cumsum(~flags)
    recall = tp / n_gt
    precision = tp / np.maximum(tp + fp, 1)
    pr_points = tuple((float(r), float(p)) for r, p in zip(recall, precision))

    if method == "voc07":
        ap = 0.0
        for t in np.linspace(0.0, 1.0, 11):
            mask = recall >= t
            ap += float(precision[mask].max()) if mask.any() else 0.0
        ap /= 11.0
    else:
        mrec = np.concatenate(([0.0], recall, [1.0]))
        mpre = np.concatenate(([0.0], precision, [0.0]))
        for i in range(len(mpre) - 2, -1, -1):
            mpre[i] = max(mpre[i], mpre[i + 1])
        steps = np.nonzero(mrec[1:] != mrec[:-1])[0]
        ap = float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))

    return APResult(float(ap), pr_points, int(n_gt), int(len(flags)))
