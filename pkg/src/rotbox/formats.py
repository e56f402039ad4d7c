"""Text file formats: annotations, anchor sets, detections, config files.

Annotations and detections are JSON lines (one image per line); anchor sets
are a single JSON document. Angles are stored in degrees in (-45, 45] on
disk (radians everywhere in memory); annotation angles given in [-90, -45]
are folded into range with a width/height swap on load. All writers are
deterministic: sorted keys, no timestamps.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .anchors import AnchorPrior, AnchorSet
from .errors import AnnotationError, ConfigError
from .evaluation import GroundTruth
from .geometry import OrientedBox
from .postprocess import Detection


@dataclass
class ImageAnnotation:
    image_id: str
    width: int
    height: int
    objects: list[GroundTruth]


def _theta_from_degrees(deg: float, w: float, h: float,
                        where: str) -> tuple[float, float, float]:
    if -90.0 <= deg <= -45.0:
        deg += 90.0
        w, h = h, w
    if not -45.0 < deg <= 45.0:
        raise AnnotationError(f"{where}: theta_deg {deg} outside [-90, 45]")
    return w, h, math.radians(deg)


def _parse_object(obj: dict, where: str) -> GroundTruth:
    try:
        cx = float(obj["cx"])
        cy = float(obj["cy"])
        w = float(obj["w"])
        h = float(obj["h"])
        deg = float(obj["theta_deg"])
    except (KeyError, TypeError, ValueError) as exc:
        raise AnnotationError(f"{where}: bad object fields ({exc})") from None
    difficult = bool(obj.get("difficult", False))
    if w <= 0 or h <= 0:
        raise AnnotationError(f"{where}: non-positive box dimensions")
    w, h, theta = _theta_from_degrees(deg, w, h, where)
    return GroundTruth(OrientedBox(cx, cy, w, h, theta), difficult)


def load_annotations(path) -> list[ImageAnnotation]:
    records = []
    seen = set()
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        where = f"{path}:{lineno}"
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise AnnotationError(f"{where}: invalid JSON ({exc.msg})") from None
        if not isinstance(doc, dict):
            raise AnnotationError(f"{where}: expected a JSON object")
        try:
            image_id = str(doc["image_id"])
            width = int(doc["width"])
            height = int(doc["height"])
            objects = doc["objects"]
        except (KeyError, TypeError, ValueError) as exc:
            raise AnnotationError(f"{where}: bad record fields ({exc})") from None
        if width <= 0 or height <= 0:
            raise AnnotationError(f"{where}: non-positive image dimensions")
        if image_id in seen:
            raise AnnotationError(f"{where}: duplicate image_id {image_id!r}")
        seen.add(image_id)
        if not isinstance(objects, list):
            raise AnnotationError(f"{where}: objects must be a list")
        parsed = [_parse_object(o, where) for o in objects]
        records.append(ImageAnnotation(image_id, width, height, parsed))
    return records


def save_annotations(records: Sequence[ImageAnnotation], path) -> None:
    lines = []
    for rec in records:
        objects = [{"cx": g.box.cx, "cy": g.box.cy, "w": g.box.w, "h": g.box.h,
                    "theta_deg": math.degrees(g.box.theta),
                    "difficult": g.difficult} for g in rec.objects]
        lines.append(json.dumps(
            {"image_id": rec.image_id, "width": rec.width,
             "height": rec.height, "objects": objects}, sort_keys=True))
    Path(path).write_text("\n".join(lines) + "\n")


def anchor_set_to_dict(anchors: AnchorSet) -> dict:
    return {"group_boundaries": list(anchors.group_boundaries),
            "priors": [{"w": p.w, "h": p.h, "group": p.group}
                       for p in anchors.priors]}


def save_anchor_set(anchors: AnchorSet, path) -> None:
    Path(path).write_text(
        json.dumps(anchor_set_to_dict(anchors), sort_keys=True, indent=2) + "\n")


def load_anchor_set(path) -> AnchorSet:
    try:
        doc = json.loads(Path(path).read_text())
        priors = tuple(AnchorPrior(p["w"], p["h"], p["group"])
                       for p in doc["priors"])
        return AnchorSet(priors, tuple(doc["group_boundaries"]))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise AnnotationError(f"{path}: bad anchor set ({exc})") from None


def save_detections(dets_by_image: dict[str, Sequence[Detection]], path) -> None:
    lines = []
    for image_id in sorted(dets_by_image):
        rows = [{"cx": d.box.cx, "cy": d.box.cy, "w": d.box.w, "h": d.box.h,
                 "theta_deg": math.degrees(d.box.theta),
                 "score": d.score_aligned, "score_raw": d.score_raw,
                 "level": d.provenance[0], "y": d.provenance[1],
                 "x": d.provenance[2], "k": d.provenance[3]}
                for d in dets_by_image[image_id]]
        lines.append(json.dumps({"image_id": image_id, "detections": rows},
                                sort_keys=True))
    Path(path).write_text("\n".join(lines) + "\n" if lines else "")


def load_detections(path) -> dict[str, list[Detection]]:
    out: dict[str, list[Detection]] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        where = f"{path}:{lineno}"
        try:
            doc = json.loads(line)
            image_id = str(doc["image_id"])
            rows = doc["detections"]
            dets = []
            for r in rows:
                w, h, theta = _theta_from_degrees(
                    float(r["theta_deg"]), float(r["w"]), float(r["h"]), where)
                box = OrientedBox(float(r["cx"]), float(r["cy"]), w, h, theta)
                dets.append(Detection(
                    box, float(r["score_raw"]), float(r["score"]),
                    (int(r["level"]), int(r["y"]), int(r["x"]), int(r["k"]))))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise AnnotationError(f"{where}: bad detection record ({exc})") from None
        if image_id in out:
            raise AnnotationError(f"{where}: duplicate image_id {image_id!r}")
        out[image_id] = dets
    return out


def load_config(path) -> dict[str, str]:
    """Parse a key=value config file; '#' starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        out[key] = value.strip()
    return out
