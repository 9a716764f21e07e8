"""Command line entry point: refine a point file and write the outputs."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import RefinementConfig
from .engine import subdivide
from .errors import GeometryError, ParseError, TooFewPoints
from .io import JobSpec, parse_points, write_outputs

log = logging.getLogger("conicsub")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="refine",
        description="Convexity-preserving interpolatory subdivision of planar "
        "polylines with exact conic reproduction.",
    )
    p.add_argument("--input", required=True, help="CSV point file, one x,y per line")
    topo = p.add_mutually_exclusive_group()
    topo.add_argument("--closed", action="store_true", help="treat the input as a closed polygon")
    topo.add_argument("--open", dest="open_", action="store_true", help="treat the input as an open polyline (default)")
    p.add_argument("--levels", type=int, default=5, help="number of refinement steps (default 5)")
    p.add_argument("--adaptive", action="store_true", help="subdivide only edges above the length threshold")
    p.add_argument("--edge-threshold", type=float, default=0.01,
                   help="adaptive length threshold, relative to the input bounding-box diagonal (default 0.01)")
    p.add_argument("--lambda", dest="lambda_", type=float, default=0.5,
                   help="left/right tangent blend weight at junction points (default 0.5)")
    p.add_argument("--rho", type=float, default=0.5,
                   help="apex weight of the junction end-point rule (default 0.5)")
    p.add_argument("--lenient", action="store_true",
                   help="degrade gracefully on undersized or degenerate pieces instead of erroring")
    p.add_argument("--out", help="output CSV path for the refined points")
    p.add_argument("--svg", help="output SVG path for the refined curve")
    p.add_argument("--comb-svg", help="output SVG path with the discrete curvature comb")
    p.add_argument("--report", help="output JSON path for per-level diagnostics")
    return p


def run_cli(argv: list[str] | None = None) -> int:
    """Run one refinement job; returns the process exit code.

    0: success.  1: input or validation problem.  2: the scheme hit a
    geometric degeneracy in strict mode.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 1 if e.code else 0

    try:
        cfg = RefinementConfig(
            topology="closed" if args.closed else "open",
            levels=args.levels,
            mode="adaptive" if args.adaptive else "basic",
            edge_threshold=args.edge_threshold,
            lambda_=args.lambda_,
            rho=args.rho,
            strictness="lenient" if args.lenient else "strict",
        )
        spec = JobSpec(
            input_path=args.input,
            config=cfg,
            points_csv=args.out,
            svg=args.svg,
            comb_svg=args.comb_svg,
            report_json=args.report,
        )
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    try:
        with open(spec.input_path, "r", encoding="utf-8") as f:
            text = f.read()
        original = parse_points(text, closed=cfg.closed)
    except OSError as e:
        print(f"error: cannot read {spec.input_path}: {e}", file=sys.stderr)
        return 1
    except (ParseError, TooFewPoints) as e:
        print(f"error: {spec.input_path}: {e}", file=sys.stderr)
        return 1

    try:
        result, report = subdivide(original, cfg)
    except GeometryError as e:
        print(f"error: refinement failed: {e}", file=sys.stderr)
        return 2

    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    try:
        write_outputs(result, report, spec, original)
    except OSError as e:
        print(f"error: cannot write outputs: {e}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING, format="%(message)s")
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
