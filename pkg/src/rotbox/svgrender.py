"""Static SVG rendering of ground truths and detections.

Output is byte-stable for fixed input: fixed number formatting, fixed
element order, no timestamps. Ground truths draw as dashed outlines,
detections as solid outlines with a score label at their first corner.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

from .errors import IoFailure
from .evaluation import GroundTruth
from .geometry import to_corners
from .postprocess import Detection

GT_STYLE = 'fill="none" stroke="#2a9d44" stroke-width="1.5" stroke-dasharray="6 3"'
DET_STYLE = 'fill="none" stroke="#d33131" stroke-width="1.5"'
LABEL_STYLE = 'font-family="monospace" font-size="10" fill="#d33131"'


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _polygon(corners, style: str) -> str:
    pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in corners)
    return f'  <polygon points="{pts}" {style}/>'


def render_svg(width: int, height: int, detections: Sequence[Detection],
               gts: Sequence[GroundTruth], path) -> None:
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}" '
        f'width="{width}" height="{height}">',
        f'  <rect x="0" y="0" width="{width}" height="{height}" '
        f'fill="#10141c" stroke="#444444"/>',
    ]
    for gt in gts:
        lines.append(_polygon(to_corners(gt.box), GT_STYLE))
    for det in detections:
        corners = to_corners(det.box)
        lines.append(_polygon(corners, DET_STYLE))
        lines.append(
            f'  <text x="{_fmt(corners[0][0])}" y="{_fmt(corners[0][1] - 3)}" '
            f'{LABEL_STYLE}>{det.score_aligned:.3f}</text>')
    lines.append("</svg>")
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoFailure(f"could not write {path}: {exc}") from None
