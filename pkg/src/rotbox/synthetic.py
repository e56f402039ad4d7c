"""Deterministic synthetic scenes with ideal head maps.

Boxes are rejection-sampled around the anchor priors until they fit the
image, overlap each other by less than 0.1 IoU, and own at least one
positive slot. The score maps then carry 1.0 at every positive slot (0.0
elsewhere) and the regression maps carry the exact encoded targets, so a
correct decode step must reproduce the ground truth.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .anchors import (
    POSITIVE,
    AnchorPrior,
    AnchorSet,
    LevelAssignment,
    LevelSpec,
    assign,
    build_target_maps,
    levels_for_image,
    prior_gt_iou,
)
from .errors import AnnotationError, PlacementFailed
from .evaluation import GroundTruth
from .formats import (
    ImageAnnotation,
    load_anchor_set,
    load_annotations,
    save_anchor_set,
    save_annotations,
)
from .geometry import QUARTER_PI, OrientedBox, contains_point, iou_matrix
from .lasa import ScoreMap
from .postprocess import RegressionMap
from .tensorfile import read_tensor, write_tensor

MAX_PAIR_IOU = 0.1
ATTEMPTS_PER_BOX = 500

# stay clear of the angle-logit clamp so encode/decode is exact
ANGLE_MARGIN = 1e-3

SIZE_JITTER = 0.15


@dataclass
class SyntheticScene:
    seed: int
    width: int
    height: int
    gts: list[OrientedBox]
    levels: list[LevelSpec]
    anchors: AnchorSet
    score_maps: list[ScoreMap]
    reg_maps: list[RegressionMap]
    assignments: list[LevelAssignment]

    @property
    def image_id(self) -> str:
        return f"synth-{self.seed}"


def _has_positive_slot(box: OrientedBox, group: int, anchors: AnchorSet,
                       levels: Sequence[LevelSpec]) -> bool:
    level = next((lv for lv in levels if lv.group == group), None)
    if level is None:
        return False
    if not any(prior_gt_iou(box, p) > 0.5 for p in anchors.group_priors(group)):
        return False
    # some cell center of the level must fall inside the box; checking the
    # 3x3 cell neighborhood around the box center is enough for boxes wider
    # than a stride (rejecting a rare valid thin box only biases sampling)
    ix = int(round(box.cx / level.stride - 0.5))
    iy = int(round(box.cy / level.stride - 0.5))
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            x, y = ix + dx, iy + dy
            if 0 <= x < level.width and 0 <= y < level.height:
                if contains_point(box, level.anchor_point(y, x)):
                    return True
    return False


def synth_scene(seed: int, n_boxes: int, width: int, height: int,
                levels: Sequence[LevelSpec] | None = None,
                anchors: AnchorSet | None = None) -> SyntheticScene:
    """Build a scene with ideal maps; deterministic for a fixed seed."""
    if anchors is None:
        anchors = default_anchor_set()
    levels = list(levels) if levels is not None else levels_for_image(width, height)
    rng = np.random.default_rng(seed)

    gts: list[OrientedBox] = []
    attempts = 0
    budget = ATTEMPTS_PER_BOX * max(n_boxes, 1)
    while len(gts) < n_boxes:
        if attempts >= budget:
            raise PlacementFailed(
                f"placed {len(gts)}/{n_boxes} boxes in {attempts} attempts")
        attempts += 1
        prior = anchors.priors[int(rng.integers(len(anchors.priors)))]
        w = prior.w * float(rng.uniform(1.0 - SIZE_JITTER, 1.0 + SIZE_JITTER))
        h = prior.h * float(rng.uniform(1.0 - SIZE_JITTER, 1.0 + SIZE_JITTER))
        theta = float(rng.uniform(-QUARTER_PI + ANGLE_MARGIN,
                                  QUARTER_PI - ANGLE_MARGIN))
        margin = math.hypot(w, h) / 2.0 + 2.0
        if 2.0 * margin >= min(width, height):
            continue
        cx = float(rng.uniform(margin, width - margin))
        cy = float(rng.uniform(margin, height - margin))
        cand = OrientedBox(cx, cy, w, h, theta)
        if gts and iou_matrix([cand], gts).max() >= MAX_PAIR_IOU:
            continue
        if not _has_positive_slot(cand, prior.group, anchors, levels):
            continue
        gts.append(cand)

    assignments = assign(gts, levels, anchors)
    targets = build_target_maps(gts, anchors, assignments)
    score_maps = []
    reg_maps = []
    for asg, tgt in zip(assignments, targets):
        score_maps.append(ScoreMap(asg.level,
                                   (asg.status == POSITIVE).astype(float)))
        reg_maps.append(RegressionMap(asg.level, tgt))
    return SyntheticScene(seed, width, height, gts, levels, anchors,
                          score_maps, reg_maps, assignments)


def default_anchor_set() -> AnchorSet:
    """Mild-aspect priors sized so every level clears the positivity and
    sampling-margin requirements of the ideal-map round trip."""
    sizes = {
        0: [(28, 24), (40, 26), (48, 32), (56, 40), (64, 48)],
        1: [(72, 56), (88, 64), (104, 80), (120, 88), (136, 104)],
        2: [(160, 128), (192, 144), (224, 168), (256, 192), (288, 224)],
    }
    priors = [AnchorPrior(w, h, g) for g in range(3) for w, h in sizes[g]]
    b1 = (sizes[0][-1][0] * sizes[0][-1][1] + sizes[1][0][0] * sizes[1][0][1]) / 2.0
    b2 = (sizes[1][-1][0] * sizes[1][-1][1] + sizes[2][0][0] * sizes[2][0][1]) / 2.0
    return AnchorSet(tuple(priors), (b1, b2))


# ---------------------------------------------------------------------------
# on-disk layout
# ---------------------------------------------------------------------------

def write_scene(scene: SyntheticScene, directory) -> None:
    """Write manifest, annotations, anchors, and per-level tensors."""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    manifest = {
        "seed": scene.seed,
        "image_id": scene.image_id,
        "width": scene.width,
        "height": scene.height,
        "levels": [{"name": lv.name, "stride": lv.stride,
                    "height": lv.height, "width": lv.width}
                   for lv in scene.levels],
    }
    (root / "scene.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    save_anchor_set(scene.anchors, root / "anchors.json")
    save_annotations(
        [ImageAnnotation(scene.image_id, scene.width, scene.height,
                         [GroundTruth(b) for b in scene.gts])],
        root / "annotations.jsonl")
    for sm, rm in zip(scene.score_maps, scene.reg_maps):
        write_tensor(sm.values, root / f"{sm.level.name}_scores.rbk")
        write_tensor(rm.values, root / f"{rm.level.name}_regs.rbk")


@dataclass
class SceneFiles:
    """A scene directory re-read from disk (map values are float32)."""

    image_id: str
    width: int
    height: int
    levels: list[LevelSpec]
    anchors: AnchorSet
    score_maps: list[ScoreMap]
    reg_maps: list[RegressionMap]
    gts: list[GroundTruth]


def load_scene(directory, score_override: dict[str, str] | None = None,
               reg_override: dict[str, str] | None = None) -> SceneFiles:
    root = Path(directory)
    try:
        manifest = json.loads((root / "scene.json").read_text())
        levels = [LevelSpec(lv["name"], lv["stride"], lv["height"], lv["width"])
                  for lv in manifest["levels"]]
        image_id = str(manifest["image_id"])
        width = int(manifest["width"])
        height = int(manifest["height"])
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise AnnotationError(f"{root}: bad scene manifest ({exc})") from None
    anchors = load_anchor_set(root / "anchors.json")
    annotations = load_annotations(root / "annotations.jsonl")
    gts = annotations[0].objects if annotations else []

    score_override = score_override or {}
    reg_override = reg_override or {}
    score_maps = []
    reg_maps = []
    for lv in levels:
        spath = score_override.get(lv.name, root / f"{lv.name}_scores.rbk")
        rpath = reg_override.get(lv.name, root / f"{lv.name}_regs.rbk")
        score_maps.append(ScoreMap(lv, read_tensor(spath)))
        reg_maps.append(RegressionMap(lv, read_tensor(rpath)))

    scene = SceneFiles(image_id, width, height, levels, anchors,
                       score_maps, reg_maps, gts)
    _check_scene_gts(scene)
    return scene


def _check_scene_gts(scene: SceneFiles) -> None:
    boxes = [g.box for g in scene.gts]
    if len(boxes) > 1:
        m = iou_matrix(boxes, boxes)
        np.fill_diagonal(m, 0.0)
        if m.max() >= MAX_PAIR_IOU:
            raise AnnotationError(
                f"scene ground truths overlap with IoU {m.max():.3f} "
                f">= {MAX_PAIR_IOU}")
