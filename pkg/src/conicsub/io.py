"""Point-file parsing and CSV/SVG/JSON output emission."""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .config import RefinementConfig
from .engine import DiagnosticsReport
from .errors import ParseError, TooFewPoints
from .metrics import discrete_curvature
from .polyline import Polyline

log = logging.getLogger(__name__)


@dataclass
class JobSpec:
    """One CLI invocation: where the points come from and what to emit."""

    input_path: str
    config: RefinementConfig
    points_csv: str | None = None
    svg: str | None = None
    comb_svg: str | None = None
    report_json: str | None = None

    def __post_init__(self):
        outputs = [p for p in (self.points_csv, self.svg, self.comb_svg, self.report_json) if p]
        if not outputs:
            raise ValueError("at least one output must be selected")
        if len(set(outputs)) != len(outputs):
            raise ValueError("output paths must be distinct")


def parse_points(text: str, closed: bool = False) -> Polyline:
    """Parse one "x,y" decimal pair per line; '#' lines and blanks are
    skipped, consecutive duplicates are collapsed, and a repeated first
    vertex at the end of a closed polyline is dropped."""
    pts: list[tuple[float, float]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(lineno, f"expected 'x,y', got {raw!r}")
        try:
            x, y = float(parts[0]), float(parts[1])
        except ValueError:
            raise ParseError(lineno, f"expected 'x,y', got {raw!r}") from None
        if not (np.isfinite(x) and np.isfinite(y)):
            raise ParseError(lineno, "coordinates must be finite")
        if pts and pts[-1] == (x, y):
            log.warning("line %d: duplicate consecutive point collapsed", lineno)
            continue
        pts.append((x, y))
    if closed and len(pts) > 1 and pts[0] == pts[-1]:
        pts.pop()
    if len(pts) < 3:
        raise TooFewPoints(f"need at least 3 points, got {len(pts)}")
    return Polyline(np.asarray(pts, dtype=float), closed=closed)


def format_points_csv(poly: Polyline) -> str:
    lines = [f"{x:.17g},{y:.17g}" for x, y in poly.vertices]
    return "\n".join(lines) + "\n"


def input_hash(poly: Polyline) -> str:
    return hashlib.sha256(format_points_csv(poly).encode()).hexdigest()


def _svg_header(poly: Polyline) -> tuple[list[str], float]:
    lo, hi = poly.bounding_box()
    span = np.maximum(hi - lo, 1e-12)
    mx, my = 0.05 * span[0], 0.05 * span[1]
    width = span[0] + 2 * mx
    height = span[1] + 2 * my
    diag = float(np.hypot(*span))
    # y axis flipped for screen coordinates
    view = f"{lo[0] - mx:.9g} {-(hi[1] + my):.9g} {width:.9g} {height:.9g}"
    head = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="{view}">',
    ]
    return head, diag


def polyline_svg(result: Polyline, original: Polyline) -> str:
    """Refined polyline as one path, original vertices as circles."""
    head, diag = _svg_header(original)
    sw = 0.002 * diag
    r = 0.008 * diag
    cmds = " ".join(
        f"{'M' if i == 0 else 'L'} {x:.9g} {-y:.9g}" for i, (x, y) in enumerate(result.vertices)
    )
    if result.closed:
        cmds += " Z"
    body = [
        f'<path d="{cmds}" fill="none" stroke="black" stroke-width="{sw:.9g}"/>',
    ]
    for x, y in original.vertices:
        body.append(
            f'<circle cx="{x:.9g}" cy="{-y:.9g}" r="{r:.9g}" fill="none" '
            f'stroke="red" stroke-width="{sw:.9g}"/>'
        )
    return "\n".join(head + body + ["</svg>"]) + "\n"


def comb_svg(result: Polyline, original: Polyline, comb_scale: float | None = None) -> str:
    """Curvature comb: a normal segment per vertex scaled by its discrete
    curvature, drawn over the polyline."""
    head, diag = _svg_header(original)
    sw = 0.002 * diag
    samples = discrete_curvature(result)
    kmax = max((abs(s.curvature) for s in samples), default=0.0)
    if comb_scale is None:
        comb_scale = 0.1 * diag / kmax if kmax > 0 else 0.0
    cmds = " ".join(
        f"{'M' if i == 0 else 'L'} {x:.9g} {-y:.9g}" for i, (x, y) in enumerate(result.vertices)
    )
    if result.closed:
        cmds += " Z"
    body = [f'<path d="{cmds}" fill="none" stroke="black" stroke-width="{sw:.9g}"/>']
    for s in samples:
        tip = s.position + comb_scale * s.curvature * s.normal
        body.append(
            f'<line x1="{s.position[0]:.9g}" y1="{-s.position[1]:.9g}" '
            f'x2="{tip[0]:.9g}" y2="{-tip[1]:.9g}" stroke="blue" '
            f'stroke-width="{sw:.9g}"/>'
        )
    return "\n".join(head + body + ["</svg>"]) + "\n"


def report_json(report: DiagnosticsReport, cfg: RefinementConfig, in_hash: str) -> str:
    doc = {
        "levels": [
            {
                "k": row.k,
                "n_points": row.n_points,
                "d_k": row.d_k,
                "max_tangent_turn": row.max_tangent_turn,
                "min_edge": row.min_edge,
                "max_edge": row.max_edge,
                "inflection_count": row.inflection_count,
                "fallbacks": row.fallbacks,
            }
            for row in report.levels
        ],
        "config": {
            "topology": cfg.topology,
            "levels": cfg.levels,
            "mode": cfg.mode,
            "edge_threshold": cfg.edge_threshold,
            "lambda": cfg.lambda_,
            "rho": cfg.rho,
            "collinearity_tol": cfg.collinearity_tol,
            "strictness": cfg.strictness,
        },
        "input_hash": in_hash,
        "warnings": report.warnings,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_outputs(
    result: Polyline,
    report: DiagnosticsReport,
    spec: JobSpec,
    original: Polyline,
) -> None:
    """Emit every selected output for a finished refinement."""
    if spec.points_csv:
        with open(spec.points_csv, "w", encoding="utf-8") as f:
            f.write(format_points_csv(result))
    if spec.svg:
        with open(spec.svg, "w", encoding="utf-8") as f:
            f.write(polyline_svg(result, original))
    if spec.comb_svg:
        with open(spec.comb_svg, "w", encoding="utf-8") as f:
            f.write(comb_svg(result, original))
    if spec.report_json:
        with open(spec.report_json, "w", encoding="utf-8") as f:
            f.write(report_json(report, spec.config, input_hash(original)))
