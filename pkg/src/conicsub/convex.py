"""One refinement step on a totally convex (sub)polygon.

Between every two vertices the scheme inserts the fourth harmonic point of a
chosen polygon vertex with respect to the edge/tangent frame: the tangents at
the edge corners meet in the apex ``T``, a parameter vertex ``P_j`` is picked
by an angle criterion, the line ``P_j T`` cuts the edge in ``X``, and the new
point is the harmonic conjugate of ``P_j`` w.r.t. ``(X, T)``.  If the data
sits on a conic the construction returns points of that same conic, and every
inserted point lands strictly inside the triangle spanned by the edge and the
two tangents, which is what preserves convexity.

The batch kernels here operate on plain arrays and are shared with the
engine; the module-level operations wrap them for single edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    CoincidentTangents,
    DegenerateFrame,
    NoCandidates,
    ParameterOutsideRegion,
    TooFewPoints,
)
from .polyline import Polyline
from .projective import (
    TAU_ZERO,
    HLine,
    HPoint,
    cross_ratio_rows,
    embed_affine,
    harmonic_rows,
    maxabs_rows,
    normalize_point_rows,
    renorm_rows,
    wedge_rows,
)
from .tangents import TangentField, build_tangent_field

# Two angles closer than this count as a tie; the candidate with the lower
# index offset wins.  Keeps symmetric configurations deterministic under
# floating-point noise while staying far below geometric significance.
ANGLE_TIE_TOL = 1e-9


@dataclass(frozen=True)
class ConvexLevelData:
    """Strictly convex vertex ring/chain plus one tangent line per vertex."""

    vertices: np.ndarray  # (n, 2) affine
    tangents: np.ndarray  # (n, 3) line coefficients
    closed: bool = True

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=float))
        t = np.ascontiguousarray(np.asarray(self.tangents, dtype=float))
        if v.ndim != 2 or v.shape[1] != 2:
            raise ValueError("vertices must have shape (n, 2)")
        if t.shape != (v.shape[0], 3):
            raise ValueError("need exactly one tangent line per vertex")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "tangents", t)

    def __len__(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_edges(self) -> int:
        return len(self) if self.closed else len(self) - 1

    @classmethod
    def from_polyline(cls, poly: Polyline, field: TangentField | None = None):
        field = field or build_tangent_field(poly)
        return cls(vertices=poly.vertices, tangents=field.lines, closed=poly.closed)


def turning_crosses(vertices: np.ndarray, closed: bool) -> np.ndarray:
    """Cross products of consecutive edge vectors (one per interior vertex,
    or per vertex when closed)."""
    v = np.asarray(vertices, dtype=float)
    if closed:
        e = np.roll(v, -1, axis=0) - v
        e_prev = np.roll(e, 1, axis=0)
    else:
        e = v[1:] - v[:-1]
        e_prev, e = e[:-1], e[1:]
    return e_prev[:, 0] * e[:, 1] - e_prev[:, 1] * e[:, 0]


def is_strictly_convex(vertices: np.ndarray, closed: bool) -> bool:
    cr = turning_crosses(vertices, closed)
    if len(cr) == 0:
        return False
    v = np.asarray(vertices, dtype=float)
    if closed:
        e = np.roll(v, -1, axis=0) - v
        lens = np.hypot(e[:, 0], e[:, 1])
        scale = lens * np.roll(lens, -1)
        scale = np.roll(scale, 1)
    else:
        e = v[1:] - v[:-1]
        lens = np.hypot(e[:, 0], e[:, 1])
        scale = lens[:-1] * lens[1:]
    nonzero = np.abs(cr) > TAU_ZERO * scale
    return bool(np.all(nonzero)) and (np.all(cr > 0) or np.all(cr < 0))


def _validate(d: ConvexLevelData) -> None:
    if len(d) < 5:
        raise TooFewPoints(f"convex refinement needs >= 5 vertices, got {len(d)}")
    if not is_strictly_convex(d.vertices, d.closed):
        raise DegenerateFrame("vertex sequence is not strictly convex")


# ---------------------------------------------------------------------------
# tangent intersections
# ---------------------------------------------------------------------------

def edge_apex_rows(lines: np.ndarray, closed: bool) -> np.ndarray:
    """Normalized intersection point of consecutive tangents, one per edge."""
    lines = np.asarray(lines, dtype=float)
    nxt = np.roll(lines, -1, axis=0) if closed else lines[1:]
    cur = lines if closed else lines[:-1]
    t = wedge_rows(cur, nxt)
    bad = maxabs_rows(t) <= TAU_ZERO * maxabs_rows(cur) * maxabs_rows(nxt)
    if np.any(bad):
        raise CoincidentTangents(
            f"coincident tangents at edges {np.nonzero(bad)[0].tolist()}"
        )
    return normalize_point_rows(t)


def tangent_intersections(d: ConvexLevelData) -> list[HPoint]:
    """Apex T_i of every edge's tangent pair; parallel tangents meet at
    infinity, which is a legal value."""
    return [HPoint.from_array(r) for r in edge_apex_rows(d.tangents, d.closed)]


# ---------------------------------------------------------------------------
# angle criterion
# ---------------------------------------------------------------------------

def _angle_table(
    vertices: np.ndarray, apexes: np.ndarray, edge_starts: np.ndarray
) -> np.ndarray:
    """Angles alpha[e, j] between apex->midpoint and apex->vertex_j.

    Folded into [0, pi/2].  When the apex is at infinity the pencil through
    it consists of parallel lines, and the criterion degenerates to the angle
    between the pencil direction and midpoint->vertex.  Unusable candidates
    come back as +inf.
    """
    v = np.asarray(vertices, dtype=float)
    n = len(v)
    a = edge_starts
    b = (a + 1) % n
    mid = 0.5 * (v[a] + v[b])  # (E, 2)

    finite = apexes[:, 0] != 0.0
    txy = np.where(finite[:, None], apexes[:, 1:] / np.where(finite, apexes[:, 0], 1.0)[:, None], 0.0)
    # reference direction of the line g through the apex and the midpoint
    ref = np.where(finite[:, None], mid - txy, apexes[:, 1:])  # (E, 2)
    # candidate direction: apex->vertex when finite, midpoint->vertex otherwise
    base = np.where(finite[:, None], txy, mid)  # (E, 2)
    cand = v[None, :, :] - base[:, None, :]  # (E, n, 2)

    cross = np.abs(ref[:, None, 0] * cand[:, :, 1] - ref[:, None, 1] * cand[:, :, 0])
    dot = np.abs(ref[:, None, 0] * cand[:, :, 0] + ref[:, None, 1] * cand[:, :, 1])
    ang = np.arctan2(cross, dot)

    ref_n = np.hypot(ref[:, 0], ref[:, 1])
    cand_n = np.hypot(cand[:, :, 0], cand[:, :, 1])
    unusable = (cand_n <= TAU_ZERO * np.maximum(ref_n, 1.0)[:, None]) | (
        ref_n[:, None] == 0.0
    )
    ang[unusable] = np.inf
    cols = np.arange(n)[None, :]
    ang[cols == a[:, None]] = np.inf
    ang[cols == b[:, None]] = np.inf
    return ang


def _select_rows(
    angles: np.ndarray, edge_starts: np.ndarray, tie_tol: float = ANGLE_TIE_TOL
) -> np.ndarray:
    """Per edge, the candidate of minimum angle; ties go to the smallest
    offset (j - i) mod n."""
    n = angles.shape[1]
    offs = (np.arange(n)[None, :] - edge_starts[:, None]) % n
    best = np.min(angles, axis=1)
    if np.any(~np.isfinite(best)):
        raise NoCandidates("no usable parameter candidates for some edge")
    eligible = angles <= (best[:, None] + tie_tol)
    ranked = np.where(eligible, offs, n + 1)
    return np.argmin(np.where(ranked[:, :] == 0, n + 1, ranked), axis=1)


def select_parameter_index(i: int, d: ConvexLevelData, t_i: HPoint) -> int:
    """Vertex index whose sight line from the apex hugs the edge midline best.

    Candidates are every vertex except the edge's own corners, enumerated by
    offset from the edge for deterministic tie-breaking.
    """
    n = len(d)
    if n < 3:
        raise NoCandidates("need at least one candidate vertex")
    if not (0 <= i < d.n_edges):
        raise ValueError(f"edge index {i} out of range")
    apex = np.asarray(normalize_point_rows(t_i.array()[None, :]))
    ang = _angle_table(d.vertices, apex, np.array([i]))
    return int(_select_rows(ang, np.array([i]))[0])


# ---------------------------------------------------------------------------
# harmonic insertion
# ---------------------------------------------------------------------------

def _signed(dots: np.ndarray, scale: np.ndarray) -> np.ndarray:
    """Sign with a relative dead zone: 0 when |dot| is below noise."""
    out = np.sign(dots)
    out[np.abs(dots) <= TAU_ZERO * scale] = 0.0
    return out


def _region_ok(
    ph: np.ndarray,
    edge_lines: np.ndarray,
    la: np.ndarray,
    lb: np.ndarray,
    side_ref: np.ndarray,
    a: np.ndarray,
    b: np.ndarray,
    j: np.ndarray,
) -> np.ndarray:
    """Sign tests that P_j lies in the admissible region of each edge."""
    pj = ph[j]
    sc_edge = maxabs_rows(edge_lines) * maxabs_rows(pj)
    s1 = _signed(np.sum(edge_lines * pj, axis=-1), sc_edge)
    s2 = _signed(np.sum(la * pj, axis=-1), maxabs_rows(la) * maxabs_rows(pj))
    s2_ref = _signed(np.sum(la * ph[b], axis=-1), maxabs_rows(la) * maxabs_rows(ph[b]))
    s3 = _signed(np.sum(lb * pj, axis=-1), maxabs_rows(lb) * maxabs_rows(pj))
    s3_ref = _signed(np.sum(lb * ph[a], axis=-1), maxabs_rows(lb) * maxabs_rows(ph[a]))
    return (
        (s1 == side_ref)
        & (s1 != 0)
        & (s2 == s2_ref)
        & (s2 != 0)
        & (s3 == s3_ref)
        & (s3 != 0)
    )


@dataclass
class InsertionBatch:
    """Result of inserting points on a batch of edges."""

    points: np.ndarray  # (E, 2) affine inserted points
    fallback: np.ndarray  # (E,) bool, midpoint fallback taken
    harmonic_dev: np.ndarray  # (E,) |cr + 1| for audited rows, nan on fallback


def insert_standard_rows(
    vertices: np.ndarray,
    lines: np.ndarray,
    apexes: np.ndarray,
    closed: bool,
    edge_starts: np.ndarray,
    strict: bool,
    tie_tol: float = ANGLE_TIE_TOL,
) -> InsertionBatch:
    """Angle-criterion insertion on the given edges of one convex polygon.

    Applies the harmonic construction with the best admissible parameter
    vertex per edge; inadmissible best candidates are replaced by the next
    candidate in angle order.  Degenerate rows fall back to the edge midpoint
    (lenient) or raise (strict).
    """
    v = np.asarray(vertices, dtype=float)
    n = len(v)
    ph = embed_affine(v)
    a = np.asarray(edge_starts, dtype=int)
    b = (a + 1) % n
    la, lb = lines[a], lines[b]
    tv = apexes[a]

    edge_lines = wedge_rows(ph[a], ph[b])
    # reference vertex fixing the polygon's side of each edge line
    r = np.where(b + 1 < n, b + 1, (b + 1) % n if closed else a - 1)
    side_ref = _signed(
        np.sum(edge_lines * ph[r], axis=-1), maxabs_rows(edge_lines) * maxabs_rows(ph[r])
    )

    ang = _angle_table(v, tv, a)
    order = np.argsort(ang + 1e-12 * ((np.arange(n)[None, :] - a[:, None]) % n), axis=1)

    j = _select_rows(ang, a, tie_tol)
    ok = _region_ok(ph, edge_lines, la, lb, side_ref, a, b, j)
    if not np.all(ok):
        for e in np.nonzero(~ok)[0]:
            for cand in order[e]:
                if not np.isfinite(ang[e, cand]):
                    break
                if _region_ok(
                    ph,
                    edge_lines[e : e + 1],
                    la[e : e + 1],
                    lb[e : e + 1],
                    side_ref[e : e + 1],
                    a[e : e + 1],
                    b[e : e + 1],
                    np.array([cand]),
                )[0]:
                    j[e] = cand
                    ok[e] = True
                    break
        if strict and not np.all(ok):
            raise ParameterOutsideRegion(
                f"no admissible parameter vertex for edges {a[~ok].tolist()}"
            )

    pj = ph[j]
    lam = wedge_rows(pj, tv)
    x = wedge_rows(edge_lines, lam)
    u, h_ok = harmonic_rows(x, tv, pj)
    # fix the representative's sign (w >= 0) so the sign tests below are valid
    u = u * np.where(u[:, 0] < 0, -1.0, 1.0)[:, None]

    # containment: u strictly inside the triangle (corner, apex, corner)
    su = _signed(np.sum(edge_lines * u, axis=-1), maxabs_rows(edge_lines) * maxabs_rows(u))
    s2 = _signed(np.sum(la * u, axis=-1), maxabs_rows(la) * maxabs_rows(u))
    s2_ref = _signed(np.sum(la * ph[b], axis=-1), maxabs_rows(la) * maxabs_rows(ph[b]))
    s3 = _signed(np.sum(lb * u, axis=-1), maxabs_rows(lb) * maxabs_rows(u))
    s3_ref = _signed(np.sum(lb * ph[a], axis=-1), maxabs_rows(lb) * maxabs_rows(ph[a]))
    finite = np.abs(u[:, 0]) > TAU_ZERO * maxabs_rows(u)
    contained = (
        finite
        & (su == -side_ref)
        & (su != 0)
        & (s2 == s2_ref)
        & (s2 != 0)
        & (s3 == s3_ref)
        & (s3 != 0)
    )

    good = ok & h_ok & contained
    if strict and not np.all(h_ok):
        raise DegenerateFrame(
            f"degenerate harmonic frame on edges {a[~h_ok].tolist()}"
        )
    if strict and not np.all(good):
        raise DegenerateFrame(
            f"inserted point escaped its tangent triangle on edges {a[~good].tolist()}"
        )

    mids = 0.5 * (v[a] + v[b])
    pts = np.where(
        good[:, None], normalize_point_rows(np.where(good[:, None], u, ph[a]))[:, 1:], mids
    )

    dev = np.full(len(a), np.nan)
    if np.any(good):
        cr = cross_ratio_rows(u[good], pj[good], x[good], tv[good])
        dev[good] = np.abs(cr + 1.0)
    return InsertionBatch(points=pts, fallback=~good, harmonic_dev=dev)


def insert_edge_point(i: int, d: ConvexLevelData, t_i: HPoint, j_i: int) -> HPoint:
    """Harmonic insertion on edge i using vertex j_i as parameter point.

    Verifies that the parameter vertex lies in the admissible region bounded
    by the two tangents and the edge line, and that the result lands strictly
    inside the tangent triangle.
    """
    n = len(d)
    if j_i in (i, (i + 1) % n) or not (0 <= j_i < n):
        raise ParameterOutsideRegion(f"vertex {j_i} is not a valid parameter for edge {i}")
    ph = embed_affine(d.vertices)
    a = np.array([i])
    b = (a + 1) % n
    tv = normalize_point_rows(t_i.array()[None, :])
    edge_lines = wedge_rows(ph[a], ph[b])
    r = np.where(b + 1 < n, b + 1, (b + 1) % n if d.closed else a - 1)
    side_ref = _signed(
        np.sum(edge_lines * ph[r], axis=-1), maxabs_rows(edge_lines) * maxabs_rows(ph[r])
    )
    la, lb = d.tangents[a], d.tangents[b]
    if not _region_ok(ph, edge_lines, la, lb, side_ref, a, b, np.array([j_i]))[0]:
        raise ParameterOutsideRegion(
            f"vertex {j_i} lies outside the admissible region of edge {i}"
        )
    pj = ph[[j_i]]
    lam = wedge_rows(pj, tv)
    x = wedge_rows(edge_lines, lam)
    u, h_ok = harmonic_rows(x, tv, pj)
    u = u * np.where(u[:, 0] < 0, -1.0, 1.0)[:, None]
    if not bool(h_ok[0]):
        raise DegenerateFrame("all harmonic minors degenerate on this edge")
    su = _signed(np.sum(edge_lines * u, axis=-1), maxabs_rows(edge_lines) * maxabs_rows(u))
    s2 = _signed(np.sum(la * u, axis=-1), maxabs_rows(la) * maxabs_rows(u))
    s2r = _signed(np.sum(la * ph[b], axis=-1), maxabs_rows(la) * maxabs_rows(ph[b]))
    s3 = _signed(np.sum(lb * u, axis=-1), maxabs_rows(lb) * maxabs_rows(u))
    s3r = _signed(np.sum(lb * ph[a], axis=-1), maxabs_rows(lb) * maxabs_rows(ph[a]))
    inside = (
        (su == -side_ref) & (su != 0) & (s2 == s2r) & (s2 != 0) & (s3 == s3r) & (s3 != 0)
    )
    if not bool(inside[0]):
        raise DegenerateFrame(f"inserted point escaped the tangent triangle of edge {i}")
    return HPoint.from_array(normalize_point_rows(u)[0])


def refine_convex_level(d: ConvexLevelData, cfg=None) -> ConvexLevelData:
    """One full refinement step: old vertices keep the even slots, inserted
    points the odd ones, and the tangent field is rebuilt from scratch for
    the next level."""
    _validate(d)
    strict = cfg is None or getattr(cfg, "strict", True)
    apexes = edge_apex_rows(d.tangents, d.closed)
    edges = np.arange(d.n_edges)
    batch = insert_standard_rows(d.vertices, d.tangents, apexes, d.closed, edges, strict)
    out = _interleave(d.vertices, batch.points, d.closed)
    poly = Polyline(out, closed=d.closed)
    return ConvexLevelData.from_polyline(poly)


def _interleave(old: np.ndarray, inserted: np.ndarray, closed: bool) -> np.ndarray:
    n = len(old)
    m = n + len(inserted)
    out = np.empty((m, 2), dtype=float)
    out[0::2] = old
    out[1::2] = inserted
    return out
