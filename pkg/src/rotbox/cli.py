"""Command-line interface.

Subcommands: anchors, assign, detect, loss, eval, synth, iou, render, and
the array-facing nms/align used by language bindings. A plain key=value
config file (# comments) supplies defaults; explicit flags win. Exit codes:
0 success, 1 bad input, 2 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .anchors import assign as assign_labels
from .anchors import build_target_maps, fit_anchor_priors
from .errors import RotboxError, ValidationError
from .evaluation import average_precision, match_detections
from .formats import (
    load_annotations,
    load_anchor_set,
    load_config,
    load_detections,
    save_anchor_set,
    save_detections,
    anchor_set_to_dict,
)
from .geometry import QUARTER_PI, OrientedBox, iou_matrix, raster_iou_oracle
from .lasa import PATTERNS, ScoreMap, align_score, pattern_by_name
from .losses import LossConfig, total_loss
from .postprocess import PipelineConfig, nms_indices, run_pipeline
from .svgrender import render_svg
from .synthetic import default_anchor_set, load_scene, synth_scene, write_scene
from .tensorfile import read_tensor, write_tensor


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise _UsageError(message)


def _merged(args, key: str, cast, default):
    """Flag value if given, else config-file value, else default."""
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    cfg = getattr(args, "_config", {})
    if key in cfg:
        try:
            return cast(cfg[key])
        except ValueError:
            raise ValidationError(f"config key {key}={cfg[key]!r} is not valid")
    return default


def _pipeline_config(args) -> PipelineConfig:
    pattern_name = _merged(args, "lasa", str, "none")
    pattern = None if pattern_name == "none" else pattern_by_name(pattern_name)
    return PipelineConfig(
        score_thresh=_merged(args, "score_thresh", float, 0.05),
        final_thresh=_merged(args, "final_thresh", float, 0.3),
        pre_nms_topk=_merged(args, "pre_nms_topk", int, 2000),
        nms_iou=_merged(args, "nms_iou", float, 0.1),
        pattern=pattern,
    )


def _loss_config(args) -> LossConfig:
    return LossConfig(
        alpha=_merged(args, "alpha", float, 0.25),
        gamma=_merged(args, "gamma", float, 2.0),
        lambda_d=_merged(args, "lambda_d", float, 1.0),
        lambda_a=_merged(args, "lambda_a", float, 10.0),
        eps=_merged(args, "eps", float, 1e-9),
    )


def _parse_box_arg(text: str) -> OrientedBox:
    """cx,cy,w,h,theta_degrees with theta in (-45, 45]."""
    parts = text.split(",")
    if len(parts) != 5:
        raise ValidationError(f"expected cx,cy,w,h,deg, got {text!r}")
    cx, cy, w, h, deg = (float(p) for p in parts)
    if not -45.0 < deg <= 45.0:
        raise ValidationError(f"theta {deg} degrees outside (-45, 45]")
    return OrientedBox(cx, cy, w, h, math.radians(deg))


def _load_box_rows(path) -> np.ndarray:
    """JSON array of [cx, cy, w, h, theta_radians] rows, validated."""
    try:
        rows = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc.msg})") from None
    if not isinstance(rows, list):
        raise ValidationError(f"{path}: expected a JSON array of box rows")
    arr = np.zeros((len(rows), 5))
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != 5:
            raise ValidationError(f"{path}: row {i} must hold 5 numbers")
        try:
            arr[i] = [float(v) for v in row]
        except (TypeError, ValueError):
            raise ValidationError(f"{path}: row {i} holds non-numeric values") from None
        if not np.isfinite(arr[i]).all():
            raise ValidationError(f"{path}: row {i} holds non-finite values")
        if arr[i, 2] <= 0 or arr[i, 3] <= 0:
            raise ValidationError(f"{path}: row {i} has non-positive sides")
        if not -QUARTER_PI < arr[i, 4] <= QUARTER_PI:
            raise ValidationError(f"{path}: row {i} angle outside (-pi/4, pi/4]")
    return arr


def _level_kv(pairs) -> dict[str, str]:
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise ValidationError(f"expected LEVEL=PATH, got {item!r}")
        level, path = item.split("=", 1)
        out[level] = path
    return out


def _print_json(doc) -> None:
    print(json.dumps(doc, sort_keys=True))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_anchors(args) -> int:
    records = load_annotations(args.annotations)
    dims = [(g.box.w, g.box.h) for rec in records for g in rec.objects]
    anchors = fit_anchor_priors(dims, args.seed)
    if args.out:
        save_anchor_set(anchors, args.out)
    else:
        _print_json(anchor_set_to_dict(anchors))
    return 0


def _cmd_assign(args) -> int:
    scene = load_scene(args.scene)
    gts = [g.box for g in scene.gts]
    assignments = assign_labels(gts, scene.levels, scene.anchors)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = {}
    for asg in assignments:
        write_tensor(asg.status.astype(np.float32),
                     out_dir / f"{asg.level.name}_labels.rbk")
        write_tensor(asg.gt_index.astype(np.float32),
                     out_dir / f"{asg.level.name}_gtindex.rbk")
        summary[asg.level.name] = {
            "positive": int((asg.status == 2).sum()),
            "ignored": int((asg.status == 1).sum()),
            "background": int((asg.status == 0).sum()),
        }
    _print_json(summary)
    return 0


def _cmd_detect(args) -> int:
    scene = load_scene(args.scene, _level_kv(args.scores), _level_kv(args.regs))
    cfg = _pipeline_config(args)
    dets = run_pipeline(scene.score_maps, scene.reg_maps, scene.anchors, cfg)
    save_detections({scene.image_id: dets}, args.out)
    if args.svg:
        render_svg(scene.width, scene.height, dets, scene.gts, args.svg)
    _print_json({"image_id": scene.image_id, "detections": len(dets)})
    return 0


def _cmd_loss(args) -> int:
    scene = load_scene(args.scene, _level_kv(args.scores), _level_kv(args.regs))
    gts = [g.box for g in scene.gts]
    labels = assign_labels(gts, scene.levels, scene.anchors)
    targets = build_target_maps(gts, scene.anchors, labels)
    report = total_loss(scene.score_maps, scene.reg_maps, labels, targets,
                        _loss_config(args))
    _print_json(report.as_dict())
    return 0


def _pr_curve_svg(pr_points, path) -> None:
    w = h = 320
    pad = 30
    pts = [(pad, h - pad)]
    for r, p in pr_points:
        pts.append((pad + r * (w - 2 * pad), h - pad - p * (h - 2 * pad)))
    poly = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
    body = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">\n'
        f'  <rect x="{pad}" y="{pad}" width="{w - 2 * pad}" height="{h - 2 * pad}"'
        f' fill="none" stroke="#888888"/>\n'
        f'  <polyline points="{poly}" fill="none" stroke="#d33131"'
        f' stroke-width="1.5"/>\n'
        f"</svg>\n")
    Path(path).write_text(body)


def _cmd_eval(args) -> int:
    dets = load_detections(args.detections)
    records = load_annotations(args.annotations)
    gts = {rec.image_id: rec.objects for rec in records}
    iou_thresh = _merged(args, "iou_thresh", float, 0.5)
    method = _merged(args, "method", str, "voc07")
    flags, scores, n_gt = match_detections(dets, gts, iou_thresh)
    result = average_precision(flags, scores, n_gt, method)
    doc = result.as_dict()
    doc.update({"method": method, "iou_thresh": iou_thresh,
                "ap_text": f"{result.ap:.4f}"})
    if args.out:
        Path(args.out).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    if args.pr_svg:
        _pr_curve_svg(result.pr_points, args.pr_svg)
    _print_json(doc)
    return 0


def _cmd_synth(args) -> int:
    anchors = load_anchor_set(args.anchors) if args.anchors else default_anchor_set()
    scene = synth_scene(args.seed, args.boxes, args.width, args.height,
                        anchors=anchors)
    write_scene(scene, args.out)
    _print_json({"image_id": scene.image_id, "boxes": len(scene.gts),
                 "out": str(args.out)})
    return 0


def _cmd_iou(args) -> int:
    if args.box_a or args.box_b:
        if not (args.box_a and args.box_b):
            raise ValidationError("--box-a and --box-b must be given together")
        a = _parse_box_arg(args.box_a)
        b = _parse_box_arg(args.box_b)
        value = float(iou_matrix([a], [b])[0, 0])
        print(f"{value:.4f}")
        if args.oracle:
            cell = min(a.w, a.h, b.w, b.h) / 200.0
            ref = raster_iou_oracle(a, b, cell)
            print(f"oracle {ref:.4f}")
            print(f"delta {abs(value - ref):.2e}")
        return 0
    if not (args.boxes_a and args.boxes_b):
        raise ValidationError("need --box-a/--box-b or --boxes-a/--boxes-b")
    matrix = iou_matrix(_load_box_rows(args.boxes_a), _load_box_rows(args.boxes_b))
    print(json.dumps([[float(v) for v in row] for row in matrix]))
    return 0


def _cmd_render(args) -> int:
    records = load_annotations(args.annotations)
    by_id = {rec.image_id: rec for rec in records}
    image_id = args.image_id or records[0].image_id if records else args.image_id
    if image_id not in by_id:
        raise ValidationError(f"image_id {image_id!r} not present in annotations")
    rec = by_id[image_id]
    dets = []
    if args.detections:
        dets = load_detections(args.detections).get(image_id, [])
    render_svg(rec.width, rec.height, dets, rec.objects, args.out)
    return 0


def _cmd_nms(args) -> int:
    boxes = _load_box_rows(args.boxes)
    try:
        scores = json.loads(Path(args.scores).read_text())
        scores = [float(s) for s in scores]
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise ValidationError(f"{args.scores}: bad score list ({exc})") from None
    kept = nms_indices(boxes, scores, args.iou_thresh)
    print(json.dumps(kept))
    return 0


def _cmd_align(args) -> int:
    from .anchors import LEVEL_STRIDES, LevelSpec

    values = read_tensor(args.map)
    if values.ndim == 2:
        values = values[None]
    if values.ndim != 3:
        raise ValidationError(f"score map must be (H, W) or (K, H, W), "
                              f"got shape {values.shape}")
    names = {s: n for n, s in LEVEL_STRIDES.items()}
    if args.stride not in names:
        raise ValidationError(f"stride must be one of {sorted(names)}")
    level = LevelSpec(names[args.stride], args.stride,
                      values.shape[1], values.shape[2])
    score_map = ScoreMap(level, values.astype(float))
    if not 0 <= args.channel < score_map.k:
        raise ValidationError(f"channel {args.channel} out of range")
    pattern = pattern_by_name(args.pattern)
    boxes = _load_box_rows(args.boxes)
    out = [align_score(OrientedBox(*row), args.channel, score_map, pattern)
           for row in boxes]
    print(json.dumps(out))
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="rotbox", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("anchors", help="fit anchor priors from annotations")
    p.add_argument("--annotations", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_anchors)

    p = sub.add_parser("assign", help="dump assignment label maps for a scene")
    p.add_argument("--scene", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_assign)

    p = sub.add_parser("detect", help="run the detection pipeline on head maps")
    p.add_argument("--scene", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scores", action="append", metavar="LEVEL=PATH")
    p.add_argument("--regs", action="append", metavar="LEVEL=PATH")
    p.add_argument("--score-thresh", dest="score_thresh", type=float)
    p.add_argument("--final-thresh", dest="final_thresh", type=float)
    p.add_argument("--pre-nms-topk", dest="pre_nms_topk", type=int)
    p.add_argument("--nms-iou", dest="nms_iou", type=float)
    p.add_argument("--lasa", choices=["none", *sorted(PATTERNS)])
    p.add_argument("--svg")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("loss", help="evaluate the training objective")
    p.add_argument("--scene", required=True)
    p.add_argument("--scores", action="append", metavar="LEVEL=PATH")
    p.add_argument("--regs", action="append", metavar="LEVEL=PATH")
    p.add_argument("--alpha", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--lambda-d", dest="lambda_d", type=float)
    p.add_argument("--lambda-a", dest="lambda_a", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--config")
    p.set_defaults(func=_cmd_loss)

    p = sub.add_parser("eval", help="match detections and compute AP")
    p.add_argument("--detections", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--iou-thresh", dest="iou_thresh", type=float)
    p.add_argument("--method", choices=["voc07", "all_points"])
    p.add_argument("--pr-svg")
    p.add_argument("--out")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic scene with ideal maps")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--boxes", type=int, default=5)
    p.add_argument("--width", type=int, default=512)
    p.add_argument("--height", type=int, default=512)
    p.add_argument("--anchors")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("iou", help="rotated IoU of box pairs")
    p.add_argument("--box-a", help="cx,cy,w,h,deg")
    p.add_argument("--box-b", help="cx,cy,w,h,deg")
    p.add_argument("--oracle", action="store_true",
                   help="cross-check against the grid-counting oracle")
    p.add_argument("--boxes-a", help="JSON file of [cx,cy,w,h,theta_rad] rows")
    p.add_argument("--boxes-b", help="JSON file of [cx,cy,w,h,theta_rad] rows")
    p.set_defaults(func=_cmd_iou)

    p = sub.add_parser("render", help="render annotations/detections to SVG")
    p.add_argument("--annotations", required=True)
    p.add_argument("--detections")
    p.add_argument("--image-id", dest="image_id")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("nms", help="greedy rotated NMS over box/score arrays")
    p.add_argument("--boxes", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--iou-thresh", dest="iou_thresh", type=float, default=0.1)
    p.set_defaults(func=_cmd_nms)

    p = sub.add_parser("align", help="locality-aware score alignment for boxes")
    p.add_argument("--boxes", required=True)
    p.add_argument("--map", required=True)
    p.add_argument("--stride", type=int, required=True)
    p.add_argument("--pattern", required=True)
    p.add_argument("--channel", type=int, default=0)
    p.set_defaults(func=_cmd_align)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_usage(sys.stderr)
            return 1
        config_path = getattr(args, "config", None)
        args._config = load_config(config_path) if config_path else {}
        return args.func(args)
    except _UsageError:
        return 1
    except (RotboxError, OSError, ValueError, OverflowError) as exc:
        print(f"rotbox: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - map bugs to a distinct exit code
        print(f"rotbox: internal error: {exc!r}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
