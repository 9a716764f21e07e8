"""Preprocessing of arbitrary input into straight and totally convex pieces.

Runs once, before any refinement: consecutive collinear vertices become
straight-line segments, inflection edges get a midpoint vertex inserted (or
an existing flat vertex between opposite turns is identified as the
inflection point), and whatever remains is bisected until every piece is
totally convex.  The resulting partition never changes across subdivision
levels; only vertex indices are remapped as points are inserted.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .config import RefinementConfig
from .errors import (
    DegenerateConfiguration,
    JunctionConditionError,
    TooFewPoints,
    UnsplittableSegment,
)
from .polyline import Polyline, chord_deviations
from .projective import TAU_ZERO

log = logging.getLogger(__name__)

MIN_CONVEX_VERTICES = 5


class JunctionKind(str, Enum):
    INFLECTION_POINT = "InflectionPoint"
    CONVEX_JUNCTION = "ConvexJunction"
    STRAIGHT_LINE_JUNCTION = "StraightLineJunction"
    SEQUENCE_END = "SequenceEnd"


class SegmentKind(str, Enum):
    STRAIGHT_LINE = "StraightLine"
    TOTALLY_CONVEX = "TotallyConvex"


@dataclass(frozen=True)
class Segment:
    """Vertex range [start..end] walked forward (mod n when the polyline is
    closed); start == end encodes a full closed loop.  ``degraded`` marks a
    lenient-mode convex piece that is refined by plain midpoints."""

    kind: SegmentKind
    start: int
    end: int
    degraded: bool = False

    def __post_init__(self):
        object.__setattr__(self, "start", int(self.start))
        object.__setattr__(self, "end", int(self.end))

    def edge_count(self, n: int, closed: bool) -> int:
        if closed:
            span = (self.end - self.start) % n
            return n if span == 0 else span
        return self.end - self.start

    def vertex_indices(self, n: int, closed: bool) -> np.ndarray:
        e = self.edge_count(n, closed)
        idx = self.start + np.arange(e + 1)
        return idx % n if closed else idx


@dataclass
class SegmentStructure:
    """Partition of a polyline into typed segments with typed junctions."""

    segments: list[Segment]
    junctions: dict[int, JunctionKind]
    closed: bool
    n_vertices: int
    warnings: list[str] = field(default_factory=list)

    def segment_indices(self, seg: Segment) -> np.ndarray:
        return seg.vertex_indices(self.n_vertices, self.closed)


def _signs(values: np.ndarray, scale: np.ndarray) -> np.ndarray:
    out = np.sign(values)
    out[np.abs(values) <= TAU_ZERO * scale] = 0.0
    return out


def _turn_signs(v: np.ndarray, closed: bool) -> np.ndarray:
    """Turning sign per vertex (0 on the open boundary)."""
    n = len(v)
    out = np.zeros(n)
    if closed:
        e = np.roll(v, -1, axis=0) - v
        prev = np.roll(e, 1, axis=0)
        cr = prev[:, 0] * e[:, 1] - prev[:, 1] * e[:, 0]
        ln = np.hypot(e[:, 0], e[:, 1])
        out[:] = _signs(cr, np.roll(ln, 1) * ln)
    else:
        e = v[1:] - v[:-1]
        cr = e[:-1, 0] * e[1:, 1] - e[:-1, 1] * e[1:, 0]
        ln = np.hypot(e[:, 0], e[:, 1])
        out[1:-1] = _signs(cr, ln[:-1] * ln[1:])
    return out


def detect_collinear_runs(poly: Polyline, tol: float) -> list[tuple[int, int]]:
    """Maximal runs of >= 3 consecutive vertices within ``tol`` times the
    bounding-box diagonal of their end-point chord.

    Runs are returned as inclusive (start, end) index pairs; on closed
    polylines a run may wrap, in which case end < start.
    """
    v = poly.vertices
    n = len(v)
    if n < 3:
        return []
    tol_abs = tol * poly.bbox_diagonal()

    def run_ok(idx: np.ndarray) -> bool:
        return bool(
            np.all(chord_deviations(v[idx[1:-1]], v[idx[0]], v[idx[-1]]) <= tol_abs)
        )

    if not poly.closed:
        runs = []
        i = 0
        while i <= n - 3:
            e = i + 2
            if not run_ok(np.arange(i, e + 1)):
                i += 1
                continue
            while e + 1 <= n - 1 and run_ok(np.arange(i, e + 2)):
                e += 1
            runs.append((i, e))
            i = e
        return runs

    # closed: anchor the scan at a corner so runs can wrap freely
    corner = -1
    for c in range(n):
        trip = np.array([(c - 1) % n, c, (c + 1) % n])
        if not run_ok(trip):
            corner = c
            break
    if corner < 0:
        # every triple is flat: the whole polyline is one degenerate run
        return [(0, n - 1)]
    runs = []
    i = corner
    while i < corner + n - 2:
        e = i + 2
        if not run_ok(np.arange(i, e + 1) % n):
            i += 1
            continue
        while e + 1 <= corner + n and run_ok(np.arange(i, e + 2) % n):
            e += 1
        e = min(e, i + n - 1)
        runs.append((i % n, e % n))
        i = e
    runs.sort(key=lambda r: r[0])
    return runs


def detect_inflection_edges(poly: Polyline) -> list[int]:
    """Edges whose two outer neighbor vertices lie strictly in opposite
    half-planes of the edge line."""
    v = poly.vertices
    n = len(v)
    flagged = []
    edge_ids = range(n) if poly.closed else range(1, n - 2)
    for i in edge_ids:
        a, b = v[i % n], v[(i + 1) % n]
        prev_i = (i - 1) % n if poly.closed else i - 1
        next_i = (i + 2) % n if poly.closed else i + 2
        e = b - a
        ln = np.hypot(e[0], e[1])
        c1 = e[0] * (v[prev_i][1] - a[1]) - e[1] * (v[prev_i][0] - a[0])
        c2 = e[0] * (v[next_i][1] - a[1]) - e[1] * (v[next_i][0] - a[0])
        s1 = _signs(np.array([c1]), np.array([ln * np.hypot(*(v[prev_i] - a))]))[0]
        s2 = _signs(np.array([c2]), np.array([ln * np.hypot(*(v[next_i] - a))]))[0]
        if s1 * s2 < 0:
            flagged.append(i)
    return flagged


def identify_inflection_vertices(poly: Polyline, tol: float) -> list[int]:
    """Existing vertices that already sit on an inflection: locally flat
    (both incident edges collinear within tolerance) with strictly opposite
    turning on the two sides."""
    v = poly.vertices
    n = len(v)
    tol_abs = tol * poly.bbox_diagonal()
    turns = _turn_signs(v, poly.closed)
    out = []
    ids = range(n) if poly.closed else range(2, n - 2)
    for i in ids:
        prev_i, next_i = (i - 1) % n, (i + 1) % n
        dev = chord_deviations(v[i][None, :], v[prev_i], v[next_i])[0]
        if dev > tol_abs:
            continue
        if turns[prev_i] * turns[next_i] < 0:
            out.append(i)
    return out


def is_totally_convex(poly: Polyline, rng, tol: float = 1e-9) -> bool:
    """True when, for every edge of the subpolygon, all its vertices lie on
    the edge line or strictly in one common half-plane."""
    v = poly.vertices
    n = len(v)
    idx = np.asarray(list(rng), dtype=int) % n
    m = len(idx)
    if m < 3:
        return m == 3
    pts = v[idx]
    full_closed = poly.closed and m == n
    tol_abs = tol * poly.bbox_diagonal()
    e_count = m if full_closed else m - 1
    for k in range(e_count):
        a = pts[k]
        b = pts[(k + 1) % m]
        d = b - a
        ln = np.hypot(d[0], d[1])
        if ln == 0.0:
            return False
        cr = d[0] * (pts[:, 1] - a[1]) - d[1] * (pts[:, 0] - a[0])
        dist = np.abs(cr) / ln
        off = dist > tol_abs
        if not off.any():
            continue
        s = np.sign(cr[off])
        if not (np.all(s > 0) or np.all(s < 0)):
            return False
    return True


def split_until_convex(poly: Polyline, rng, strict: bool = True) -> list[tuple[int, int]]:
    """Bisect a locally convex range at the midpoint index until every piece
    is totally convex; adjacent pieces share the split vertex."""
    n = len(poly)
    start, end = rng if isinstance(rng, tuple) else (rng[0], rng[-1])
    span = (end - start) % n if poly.closed else end - start

    def rec(j: int, length: int) -> list[tuple[int, int]]:
        l = j + length
        idx = np.arange(j, l + 1) % n if poly.closed else np.arange(j, l + 1)
        if is_totally_convex(poly, idx):
            return [(j % n, l % n)]
        i = j + (length + 1) // 2
        if i - j + 1 < MIN_CONVEX_VERTICES or l - i + 1 < MIN_CONVEX_VERTICES:
            if strict:
                raise UnsplittableSegment(
                    f"splitting [{j % n}..{l % n}] would leave a piece with fewer "
                    f"than {MIN_CONVEX_VERTICES} vertices"
                )
            return [(j % n, l % n)]
        return rec(j, i - j) + rec(i, l - i)

    return rec(start, span)


def _check_convex_junction(v: np.ndarray, i: int, n: int, closed: bool) -> bool:
    """Half-plane condition at a convex junction: both neighbor-edge
    intersections must be on the junction's side of the chord."""

    def at(k):
        return v[k % n] if closed else v[k]

    if not closed and (i < 2 or i > n - 3):
        return True
    p_m2, p_m1, p0, p1, p2 = (at(i - 2), at(i - 1), v[i], at(i + 1), at(i + 2))

    def inter(a, b, c, d):
        # homogeneous meet of lines ab and cd; representative with w >= 0
        l1 = np.cross(np.array([1.0, *a]), np.array([1.0, *b]))
        l2 = np.cross(np.array([1.0, *c]), np.array([1.0, *d]))
        q = np.cross(l1, l2)
        return q if q[0] >= 0 else -q

    chord = np.cross(np.array([1.0, *p_m1]), np.array([1.0, *p1]))
    q1 = inter(p_m2, p_m1, p0, p1)
    q2 = inter(p_m1, p0, p1, p2)
    s0 = float(chord @ np.array([1.0, *p0]))
    s1 = float(chord @ q1)
    s2 = float(chord @ q2)
    if q1[0] == 0.0 or q2[0] == 0.0 or s0 == 0.0:
        return False
    return (np.sign(s1) == np.sign(s0)) and (np.sign(s2) == np.sign(s0))


def segment_polyline(poly: Polyline, cfg: RefinementConfig) -> tuple[Polyline, SegmentStructure]:
    """Classify the input into straight and totally convex pieces.

    Collinear runs are handled first, then inflection edges get midpoint
    vertices inserted (pre-existing flat inflection vertices are identified
    in place), and the remaining stretches are bisected until totally convex.
    The returned polyline is the augmented one; the structure's indices refer
    to it.
    """
    poly.require_at_least(3)
    v = poly.vertices
    n = len(v)
    closed = poly.closed
    warnings: list[str] = []

    runs = detect_collinear_runs(poly, cfg.collinearity_tol)
    if closed and len(runs) == 1 and runs[0] == (0, n - 1):
        raise DegenerateConfiguration("closed polyline is entirely collinear")

    # a 3-vertex "run" whose outer neighbors straddle its line is a flat
    # inflection, not a straight feature
    kept_runs: list[tuple[int, int]] = []
    flat_inflections: set[int] = set()
    for s, e in runs:
        length = (e - s) % n if closed else e - s
        if length == 2:
            before = (s - 1) % n if closed else s - 1
            after = (e + 1) % n if closed else e + 1
            if (closed or (before >= 0 and after <= n - 1)) and _straddles(
                v, s, e, before, after, n
            ):
                flat_inflections.add((s + 1) % n)
                continue
        kept_runs.append((s, e))

    in_run = np.zeros(n, dtype=bool)
    run_boundary: set[int] = set()
    for s, e in kept_runs:
        idx = _span(s, e, n, closed)
        in_run[idx] = True
        run_boundary.update((idx[0], idx[-1]))

    # stretches between straight runs (or the whole polyline)
    stretches = _complement_stretches(kept_runs, n, closed)

    infl_edges: list[int] = []
    infl_vertices: set[int] = set(flat_inflections)
    for st in stretches:
        sub = Polyline(v[st], closed=(closed and len(st) == n and not kept_runs))
        for le in detect_inflection_edges(sub):
            infl_edges.append(int(st[le]))
        for lv in identify_inflection_vertices(sub, cfg.collinearity_tol):
            infl_vertices.add(int(st[lv]))

    # insert inflection midpoints, remapping every recorded index
    infl_edges = sorted(set(infl_edges))
    aug = v
    if infl_edges:
        pieces = []
        inserted_at = []
        prev = 0
        for k, e in enumerate(infl_edges):
            pieces.append(v[prev : e + 1])
            mid = 0.5 * (v[e] + v[(e + 1) % n])
            pieces.append(mid[None, :])
            inserted_at.append(e + 1 + k)
            prev = e + 1
        pieces.append(v[prev:])
        aug = np.vstack(pieces)

        def remap(i: int) -> int:
            # vertex i shifts by one for every midpoint inserted on an edge
            # strictly before it
            return i + int(np.searchsorted(np.asarray(infl_edges), i, side="left"))

        kept_runs = [(remap(s), remap(e)) for s, e in kept_runs]
        run_boundary = {remap(i) for i in run_boundary}
        infl_vertices = {remap(i) for i in infl_vertices}
        infl_vertices.update(inserted_at)
    n_aug = len(aug)
    aug_poly = Polyline(aug, closed=closed)

    junctions: dict[int, JunctionKind] = {}
    if not closed:
        junctions[0] = JunctionKind.SEQUENCE_END
        junctions[n_aug - 1] = JunctionKind.SEQUENCE_END
    for i in sorted(infl_vertices):
        junctions.setdefault(i, JunctionKind.INFLECTION_POINT)
    for i in sorted(run_boundary):
        junctions.setdefault(i, JunctionKind.STRAIGHT_LINE_JUNCTION)

    segments: list[Segment] = []
    run_set = {(s, e) for s, e in kept_runs}

    def add_convex(span_start: int, span_end: int):
        if closed:
            span = (span_end - span_start) % n_aug
            length = n_aug if span == 0 else span
            n_distinct = n_aug if span == 0 else length + 1
        else:
            length = span_end - span_start
            if length == 0:
                return
            n_distinct = length + 1
        if n_distinct < MIN_CONVEX_VERTICES:
            if cfg.strict:
                raise TooFewPoints(
                    f"totally convex piece [{span_start}..{span_end}] has fewer "
                    f"than {MIN_CONVEX_VERTICES} vertices"
                )
            warnings.append(
                f"piece [{span_start}..{span_end}] too small for the convex rule; "
                "refining by midpoints only"
            )
            segments.append(
                Segment(SegmentKind.TOTALLY_CONVEX, span_start, span_end, degraded=True)
            )
            return
        idx = _span(span_start, span_end, n_aug, closed)
        if is_totally_convex(aug_poly, idx):
            segments.append(Segment(SegmentKind.TOTALLY_CONVEX, span_start, span_end))
            return
        try:
            parts = split_until_convex(aug_poly, (span_start, span_end), strict=cfg.strict)
        except UnsplittableSegment:
            if cfg.strict:
                raise
            parts = [(span_start, span_end)]
        for k, (s, e) in enumerate(parts):
            ok = (
                len(_span(s, e, n_aug, closed)) >= MIN_CONVEX_VERTICES
                and is_totally_convex(aug_poly, _span(s, e, n_aug, closed))
            )
            if not ok:
                warnings.append(
                    f"piece [{s}..{e}] could not be made totally convex; "
                    "refining by midpoints only"
                )
            segments.append(
                Segment(SegmentKind.TOTALLY_CONVEX, s, e, degraded=not ok)
            )
            if k > 0:
                junctions.setdefault(s, JunctionKind.CONVEX_JUNCTION)

    # walk the polyline junction to junction
    junction_list = sorted(junctions)
    if closed and not junction_list:
        if n_aug < MIN_CONVEX_VERTICES:
            if cfg.strict:
                raise TooFewPoints(
                    f"closed convex input needs >= {MIN_CONVEX_VERTICES} vertices, "
                    f"got {n_aug}"
                )
            warnings.append("closed input too small for the convex rule; midpoints only")
            segments.append(Segment(SegmentKind.TOTALLY_CONVEX, 0, 0, degraded=True))
        elif is_totally_convex(aug_poly, range(n_aug)):
            segments.append(Segment(SegmentKind.TOTALLY_CONVEX, 0, 0))
        else:
            # locally convex ring that is not totally convex: cut it in two
            junctions[0] = JunctionKind.CONVEX_JUNCTION
            half = n_aug // 2
            junctions[half] = JunctionKind.CONVEX_JUNCTION
            add_convex(0, half)
            add_convex(half, 0)
            junction_list = sorted(junctions)
    else:
        if closed:
            starts = junction_list
            spans = [
                (starts[k], starts[(k + 1) % len(starts)]) for k in range(len(starts))
            ]
            if len(starts) == 1:
                spans = [(starts[0], starts[0])]
        else:
            starts = [0] + [j for j in junction_list if j not in (0, n_aug - 1)] + [n_aug - 1]
            spans = list(zip(starts[:-1], starts[1:]))
        for s, e in spans:
            if (s, e) in run_set:
                segments.append(Segment(SegmentKind.STRAIGHT_LINE, s, e))
            else:
                add_convex(s, e)

    # half-plane condition at convex junctions
    for i, kind in junctions.items():
        if kind is JunctionKind.CONVEX_JUNCTION:
            if not _check_convex_junction(aug, i, n_aug, closed):
                msg = f"convex junction at vertex {i} violates the half-plane condition"
                if cfg.strict:
                    raise JunctionConditionError(msg)
                warnings.append(msg)

    for w in warnings:
        log.warning("%s", w)
    structure = SegmentStructure(
        segments=segments,
        junctions=junctions,
        closed=closed,
        n_vertices=n_aug,
        warnings=warnings,
    )
    _validate_tiling(structure)
    return aug_poly, structure


def _straddles(v: np.ndarray, s: int, e: int, before: int, after: int, n: int) -> bool:
    a, b = v[s % n], v[e % n]
    d = b - a
    ln = np.hypot(d[0], d[1])
    c1 = d[0] * (v[before % n][1] - a[1]) - d[1] * (v[before % n][0] - a[0])
    c2 = d[0] * (v[after % n][1] - a[1]) - d[1] * (v[after % n][0] - a[0])
    s1 = _signs(np.array([c1]), np.array([ln * np.hypot(*(v[before % n] - a))]))[0]
    s2 = _signs(np.array([c2]), np.array([ln * np.hypot(*(v[after % n] - a))]))[0]
    return s1 * s2 < 0


def _span(s: int, e: int, n: int, closed: bool) -> np.ndarray:
    if closed:
        length = (e - s) % n
        length = n if length == 0 else length
        return (s + np.arange(length + 1)) % n
    return np.arange(s, e + 1)


def _complement_stretches(runs: list[tuple[int, int]], n: int, closed: bool) -> list[np.ndarray]:
    if not runs:
        if closed:
            return [np.arange(n)]
        return [np.arange(n)]
    out = []
    if closed:
        for k, (_, e) in enumerate(runs):
            s_next = runs[(k + 1) % len(runs)][0]
            span = (s_next - e) % n
            if span >= 1:
                out.append((e + np.arange(span + 1)) % n)
    else:
        prev = 0
        for s, e in runs:
            if s > prev:
                out.append(np.arange(prev, s + 1))
            prev = e
        if prev < n - 1:
            out.append(np.arange(prev, n))
    return [st for st in out if len(st) >= 2]


def _validate_tiling(st: SegmentStructure) -> None:
    n = st.n_vertices
    covered = np.zeros(n if st.closed else n - 1, dtype=int)
    for seg in st.segments:
        idx = st.segment_indices(seg)
        for a in idx[:-1]:
            covered[a] += 1
    if not np.all(covered == 1):
        raise DegenerateConfiguration(
            f"segments do not tile the polyline exactly (edge coverage {covered.tolist()})"
        )
