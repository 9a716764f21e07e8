"""Refinement engine: drives the segment structure through the levels.

Each level proceeds in two phases.  First every vertex gets a tangent line:
interior vertices of totally convex segments from the five-point estimator
over their segment, straight segments from their carrier line, and junction
vertices from the junction rules (which keep per-junction state across
levels).  Then every edge receives at most one new point: exact midpoints on
straight segments, the harmonic construction on convex interiors, and the
apex/midpoint combination on edges next to inflection or convex junction
vertices.  In adaptive mode edges at or below the length threshold are copied
through unchanged.

Vertices are never moved once created, so junction indices and segment
boundaries are simply remapped after every level.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .config import RefinementConfig
from .convex import ANGLE_TIE_TOL, insert_standard_rows
from .errors import CoincidentTangents, TangentApexAtInfinity
from .junctions import (
    JunctionState,
    convex_junction_tangent,
    endpoint_insert,
    inflection_tangent_initial,
    inflection_tangent_update,
)
from .metrics import convexity_signature, tangent_turning
from .polyline import Polyline
from .projective import (
    TAU_ZERO,
    HLine,
    HPoint,
    maxabs_rows,
    normalize_point_rows,
    wedge_rows,
)
from .segmentation import (
    JunctionKind,
    SegmentKind,
    SegmentStructure,
    segment_polyline,
)
from .tangents import FivePointStencil, tangent_field_rows

# provenance rule tags
RULE_SEED = 0
RULE_CONVEX = 1
RULE_MIDLINE = 2
RULE_ENDPOINT = 3
RULE_FALLBACK = 4


@dataclass
class LevelStats:
    """Per-level diagnostics row; d_k and max_tangent_turn describe the step
    that produced this level."""

    k: int
    n_points: int
    d_k: float
    max_tangent_turn: float
    min_edge: float
    max_edge: float
    inflection_count: int
    fallbacks: int
    max_harmonic_dev: float = float("nan")


@dataclass
class DiagnosticsReport:
    levels: list[LevelStats] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    n_input: int = 0


@dataclass
class RefinementState:
    """Everything the engine carries from one level to the next."""

    level: int
    poly: Polyline
    structure: SegmentStructure
    junction_states: dict[int, JunctionState]
    provenance_level: np.ndarray
    provenance_rule: np.ndarray
    level0_diag: float
    tangent_lines: np.ndarray | None = None  # field used to produce this level
    parent_map: np.ndarray | None = None  # parent vertex index -> index here
    last_d: float = 0.0
    last_fallbacks: int = 0
    last_harmonic_dev: float = float("nan")


def initialize_state(poly: Polyline, cfg: RefinementConfig) -> RefinementState:
    """Segment the input once and set up the persistent junction state."""
    if poly.closed != cfg.closed:
        raise ValueError("polyline topology does not match cfg.topology")
    aug, structure = segment_polyline(poly, cfg)
    states: dict[int, JunctionState] = {}
    v = aug.vertices
    n = len(aug)
    for idx, kind in structure.junctions.items():
        if kind is JunctionKind.SEQUENCE_END:
            continue
        st = JunctionState(
            kind=kind,
            vertex=idx,
            lambda_=cfg.junction_lambda(idx),
            rho=cfg.junction_rho(idx),
            anchor_point=HPoint.from_xy(*v[idx]),
        )
        if kind is JunctionKind.INFLECTION_POINT:
            prev_i = (idx - 1) % n
            next_i = (idx + 1) % n
            st.e_i = _line_through(v[prev_i], v[next_i])
        states[idx] = st
    return RefinementState(
        level=0,
        poly=aug,
        structure=structure,
        junction_states=states,
        provenance_level=np.zeros(n, dtype=np.int32),
        provenance_rule=np.full(n, RULE_SEED, dtype=np.int8),
        level0_diag=aug.bbox_diagonal(),
    )


def _line_through(a: np.ndarray, b: np.ndarray) -> HLine:
    l = wedge_rows(np.array([1.0, a[0], a[1]]), np.array([1.0, b[0], b[1]]))
    return HLine.from_array(l)


def _segment_index_lists(st: SegmentStructure) -> list[np.ndarray]:
    return [st.segment_indices(seg) for seg in st.segments]


def _neighbor_segments(st: SegmentStructure) -> dict[int, tuple[int, int]]:
    """junction vertex -> (index of segment ending there, segment starting
    there) in the structure's segment list."""
    ends: dict[int, int] = {}
    starts: dict[int, int] = {}
    n = st.n_vertices
    for k, seg in enumerate(st.segments):
        idx = seg.vertex_indices(n, st.closed)
        starts[int(idx[0])] = k
        ends[int(idx[-1])] = k
    out = {}
    for v in st.junctions:
        if v in ends and v in starts:
            out[v] = (ends[v], starts[v])
    return out


def _stencil(points: np.ndarray, order: list[int]) -> FivePointStencil:
    return FivePointStencil(*[HPoint.from_xy(*points[i]) for i in order])


def compute_tangent_field(
    state: RefinementState, junction_states: dict[int, JunctionState]
) -> np.ndarray:
    """Tangent line per vertex of the current level.

    Junction states are read and updated in place (pass copies to keep a
    state immutable).
    """
    poly = state.poly
    st = state.structure
    v = poly.vertices
    n = len(v)
    lines = np.zeros((n, 3))
    seg_lists = _segment_index_lists(st)

    for seg, idx in zip(st.segments, seg_lists):
        if seg.kind is SegmentKind.STRAIGHT_LINE:
            carrier = _line_through(v[idx[0]], v[idx[-1]]).array()
            lines[np.unique(idx)] = carrier
        elif seg.degraded:
            continue  # midpoint rule; no tangents needed
        else:
            full_loop = st.closed and seg.start == seg.end
            pts = v[idx[:-1]] if full_loop else v[idx]
            fl = tangent_field_rows(pts, closed=full_loop)
            lines[idx[:-1] if full_loop else idx] = fl

    neighbors = _neighbor_segments(st)
    for jv, kind in st.junctions.items():
        if kind is JunctionKind.SEQUENCE_END:
            continue
        left_k, right_k = neighbors[jv]
        left_seg, right_seg = st.segments[left_k], st.segments[right_k]
        left_idx, right_idx = seg_lists[left_k], seg_lists[right_k]
        left_usable = left_seg.kind is SegmentKind.TOTALLY_CONVEX and not left_seg.degraded
        right_usable = (
            right_seg.kind is SegmentKind.TOTALLY_CONVEX and not right_seg.degraded
        )

        if kind is JunctionKind.STRAIGHT_LINE_JUNCTION or not (left_usable and right_usable):
            # fix the tangent to the straight/degraded side's incident line
            if left_seg.kind is SegmentKind.STRAIGHT_LINE:
                lines[jv] = _line_through(v[left_idx[0]], v[left_idx[-1]]).array()
            elif right_seg.kind is SegmentKind.STRAIGHT_LINE:
                lines[jv] = _line_through(v[right_idx[0]], v[right_idx[-1]]).array()
            elif left_seg.degraded:
                lines[jv] = _line_through(v[left_idx[-2]], v[jv]).array()
            else:
                lines[jv] = _line_through(v[jv], v[right_idx[1]]).array()
            continue

        jstate = junction_states[jv]
        if kind is JunctionKind.INFLECTION_POINT and state.level >= 1:
            prev_i = int(left_idx[-2])
            next_i = int(right_idx[1])
            line = inflection_tangent_update(
                jstate,
                _line_through(v[prev_i], v[jv]),
                _line_through(v[jv], v[next_i]),
            )
        else:
            li = left_idx[-5:]
            ri = right_idx[:5]
            left5 = _stencil(v, [li[2], li[3], li[4], li[0], li[1]])
            right5 = _stencil(v, [ri[3], ri[4], ri[0], ri[1], ri[2]])
            if kind is JunctionKind.INFLECTION_POINT:
                line = inflection_tangent_initial(left5, right5, jstate)
            else:
                line = convex_junction_tangent(
                    left5,
                    right5,
                    jstate,
                    HPoint.from_xy(*v[int(left_idx[-2])]),
                    HPoint.from_xy(*v[int(right_idx[1])]),
                )
        lines[jv] = line.array()
    return lines


def _apex_rows(la: np.ndarray, lb: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Normalized tangent intersections with a per-row validity flag."""
    t = wedge_rows(la, lb)
    bad = maxabs_rows(t) <= TAU_ZERO * maxabs_rows(la) * maxabs_rows(lb)
    safe = np.where(bad[:, None], np.array([1.0, 0.0, 0.0]), t)
    return normalize_point_rows(safe), bad


def _refine(state: RefinementState, cfg: RefinementConfig, adaptive: bool) -> RefinementState:
    poly = state.poly
    st = state.structure
    v = poly.vertices
    n = len(v)
    n_edges = poly.n_edges
    strict = cfg.strict

    junction_states = {k: replace(s) for k, s in state.junction_states.items()}
    lines = compute_tangent_field(state, junction_states)

    if adaptive:
        mask = poly.edge_lengths() > cfg.edge_threshold * state.level0_diag
    else:
        mask = np.ones(n_edges, dtype=bool)

    ins = np.zeros((n_edges, 2))
    has_ins = np.zeros(n_edges, dtype=bool)
    rule = np.zeros(n_edges, dtype=np.int8)
    fallbacks = 0
    harmonic_devs: list[np.ndarray] = []
    seg_lists = _segment_index_lists(st)

    for seg, idx in zip(st.segments, seg_lists):
        starts = idx[:-1]
        sel = mask[starts]
        if not np.any(sel):
            continue
        mids = 0.5 * (v[starts] + v[idx[1:]])
        if seg.kind is SegmentKind.STRAIGHT_LINE or seg.degraded:
            ins[starts[sel]] = mids[sel]
            has_ins[starts[sel]] = True
            rule[starts[sel]] = RULE_MIDLINE
            continue

        full_loop = st.closed and seg.start == seg.end
        local = idx[:-1] if full_loop else idx
        m = len(local)
        lpts = v[local]
        llines = lines[local]
        e_local = np.arange(m if full_loop else m - 1)
        la = llines[e_local]
        lb = llines[(e_local + 1) % m]
        apex, apex_bad = _apex_rows(la, lb)
        if strict and np.any(apex_bad & sel):
            raise CoincidentTangents(
                f"coincident adjacent tangents on edges {starts[apex_bad & sel].tolist()}"
            )

        # junction-adjacent edges that use the apex/midpoint endpoint rule
        end_rule = np.zeros(len(e_local), dtype=bool)
        end_state: dict[int, JunctionState] = {}
        start_j = st.junctions.get(int(idx[0]))
        end_j = st.junctions.get(int(idx[-1]))
        if not full_loop:
            if start_j in (JunctionKind.INFLECTION_POINT, JunctionKind.CONVEX_JUNCTION):
                jvtx = int(idx[0])
                if _junction_two_sided(st, seg_lists, jvtx):
                    end_rule[0] = True
                    end_state[0] = junction_states[jvtx]
            if end_j in (JunctionKind.INFLECTION_POINT, JunctionKind.CONVEX_JUNCTION):
                jvtx = int(idx[-1])
                if _junction_two_sided(st, seg_lists, jvtx):
                    end_rule[-1] = True
                    end_state[len(e_local) - 1] = junction_states[jvtx]

        standard = sel & ~end_rule & ~apex_bad
        fallback_rows = sel & ~end_rule & apex_bad

        if np.any(standard):
            batch = insert_standard_rows(
                lpts,
                llines,
                apex,
                full_loop,
                e_local[standard],
                strict,
                ANGLE_TIE_TOL,
            )
            g_edges = starts[standard]
            ins[g_edges] = batch.points
            has_ins[g_edges] = True
            rule[g_edges] = np.where(batch.fallback, RULE_FALLBACK, RULE_CONVEX)
            fallbacks += int(np.sum(batch.fallback))
            harmonic_devs.append(batch.harmonic_dev)

        for t in np.nonzero(end_rule & sel)[0]:
            g = int(starts[t])
            mid = HPoint.from_xy(*mids[t])
            if apex_bad[t]:
                ins[g] = mids[t]
                rule[g] = RULE_FALLBACK
                fallbacks += 1
            else:
                try:
                    p = endpoint_insert(HPoint.from_array(apex[t]), mid, end_state[t])
                    ins[g] = [p.x, p.y]
                    rule[g] = RULE_ENDPOINT
                except TangentApexAtInfinity:
                    ins[g] = mids[t]
                    rule[g] = RULE_FALLBACK
                    fallbacks += 1
            has_ins[g] = True

        for t in np.nonzero(fallback_rows)[0]:
            g = int(starts[t])
            ins[g] = mids[t]
            has_ins[g] = True
            rule[g] = RULE_FALLBACK
            fallbacks += 1

    # assemble the new polyline in edge order
    old2new = np.arange(n) + np.concatenate([[0], np.cumsum(has_ins)])[:n]
    n_new = n + int(np.sum(has_ins))
    out = np.empty((n_new, 2))
    out[old2new] = v
    prov_level = np.empty(n_new, dtype=np.int32)
    prov_rule = np.empty(n_new, dtype=np.int8)
    prov_level[old2new] = state.provenance_level
    prov_rule[old2new] = state.provenance_rule
    ins_pos = old2new[np.arange(n_edges)[has_ins]] + 1
    out[ins_pos] = ins[has_ins]
    prov_level[ins_pos] = state.level + 1
    prov_rule[ins_pos] = rule[has_ins]

    # displacement of the inserted points from their parent edges
    if np.any(has_ins):
        e_ids = np.arange(n_edges)[has_ins]
        pa = v[e_ids]
        pb = v[(e_ids + 1) % n]
        d = pb - pa
        ln = np.hypot(d[:, 0], d[:, 1])
        ln = np.where(ln == 0.0, 1.0, ln)
        pts = ins[has_ins]
        d_k = float(
            np.max(
                np.abs(d[:, 0] * (pts[:, 1] - pa[:, 1]) - d[:, 1] * (pts[:, 0] - pa[:, 0]))
                / ln
            )
        )
    else:
        d_k = 0.0

    new_poly = Polyline(out, closed=poly.closed)
    new_segments = [
        replace(seg, start=int(old2new[seg.start]), end=int(old2new[seg.end]))
        for seg in st.segments
    ]
    new_structure = SegmentStructure(
        segments=new_segments,
        junctions={int(old2new[k]): kind for k, kind in st.junctions.items()},
        closed=st.closed,
        n_vertices=n_new,
        warnings=st.warnings,
    )
    for s in junction_states.values():
        s.vertex = int(old2new[s.vertex])
    new_junctions = {int(old2new[k]): s for k, s in junction_states.items()}

    devs = np.concatenate(harmonic_devs) if harmonic_devs else np.array([np.nan])
    return RefinementState(
        level=state.level + 1,
        poly=new_poly,
        structure=new_structure,
        junction_states=new_junctions,
        provenance_level=prov_level,
        provenance_rule=prov_rule,
        level0_diag=state.level0_diag,
        tangent_lines=lines,
        parent_map=old2new,
        last_d=d_k,
        last_fallbacks=fallbacks,
        last_harmonic_dev=float(np.nanmax(devs)) if np.any(np.isfinite(devs)) else float("nan"),
    )


def _junction_two_sided(st: SegmentStructure, seg_lists, jvtx: int) -> bool:
    """True when both segments at the junction are usable convex pieces, so
    the junction rules (and the endpoint rule) apply."""
    for seg in st.segments:
        idx_arr = seg.vertex_indices(st.n_vertices, st.closed)
        if int(idx_arr[0]) == jvtx or int(idx_arr[-1]) == jvtx:
            if seg.kind is not SegmentKind.TOTALLY_CONVEX or seg.degraded:
                return False
    return True


def refine_once(st: RefinementState, cfg: RefinementConfig) -> RefinementState:
    """One basic refinement step: every edge of every segment receives a new
    point by its segment's rule."""
    return _refine(st, cfg, adaptive=False)


def refine_adaptive_once(st: RefinementState, cfg: RefinementConfig) -> RefinementState:
    """One adaptive step: only edges longer than the threshold (relative to
    the level-0 bounding box diagonal) are subdivided."""
    if cfg.mode != "adaptive":
        raise ValueError("refine_adaptive_once requires cfg.mode == 'adaptive'")
    return _refine(st, cfg, adaptive=True)


def subdivide(poly: Polyline, cfg: RefinementConfig) -> tuple[Polyline, DiagnosticsReport]:
    """Segment once, refine cfg.levels times, and report per-level metrics."""
    poly.require_at_least(3)
    report = DiagnosticsReport(n_input=len(poly))
    if cfg.levels == 0:
        return poly, report

    state = initialize_state(poly, cfg)
    report.warnings.extend(state.structure.warnings)
    adaptive = cfg.mode == "adaptive"

    prev_state = None
    for _ in range(cfg.levels):
        new_state = _refine(state, cfg, adaptive)
        if prev_state is not None:
            # the field that produced this level vs. the previous one
            report.levels[-1].max_tangent_turn = tangent_turning(
                prev_state.tangent_lines,
                new_state.tangent_lines,
                list(enumerate(prev_state.parent_map)) if prev_state.parent_map is not None
                else [],
            )
        lengths = new_state.poly.edge_lengths()
        _, flips = convexity_signature(new_state.poly)
        report.levels.append(
            LevelStats(
                k=new_state.level,
                n_points=len(new_state.poly),
                d_k=new_state.last_d,
                max_tangent_turn=float("nan"),
                min_edge=float(lengths.min()),
                max_edge=float(lengths.max()),
                inflection_count=flips,
                fallbacks=new_state.last_fallbacks,
                max_harmonic_dev=new_state.last_harmonic_dev,
            )
        )
        prev_state = new_state
        state = new_state

    # one extra tangent field over the final polygon for the last turn value
    ghost = {k: replace(s) for k, s in state.junction_states.items()}
    final_lines = compute_tangent_field(state, ghost)
    report.levels[-1].max_tangent_turn = tangent_turning(
        state.tangent_lines,
        final_lines,
        list(enumerate(state.parent_map)),
    )
    return state.poly, report
