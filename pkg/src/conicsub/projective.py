"""Homogeneous-coordinate primitives for the plane.

Points are triples ``(w, x, y)`` representing the affine point ``(x/w, y/w)``
or, when ``w = 0``, the point at infinity with direction ``(x, y)``.  Lines
are coefficient triples ``(l0, l1, l2)`` of ``l0*w + l1*x + l2*y = 0``.  With
this ordering both the join of two points and the meet of two lines are plain
3-vector cross products, which keeps every construction here a short chain of
wedges.

All tolerances are scale-relative: ``TAU_ZERO`` is measured against the
largest absolute component of the operands, ``TAU_COLL`` / ``TAU_PROJ``
against unit-normalized representatives, so the whole layer is invariant
under similarity transforms of the input data.

The ``*_rows`` helpers are the batched forms used by the refinement engine;
the scalar operations delegate to them on single-row arrays, so looping over
scalars and evaluating a whole level at once produce bit-identical results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    CoincidentLines,
    CoincidentPoints,
    DegenerateFrame,
    NotCollinear,
    ZeroVector,
)

# Degeneracy threshold, relative to the largest absolute component involved.
TAU_ZERO = 1e-12
# Collinearity / projective-equality thresholds for unit-scaled data.
TAU_COLL = 1e-9
TAU_PROJ = 1e-9


@dataclass(frozen=True)
class HPoint:
    """Homogeneous point (w, x, y); w=0 encodes a point at infinity."""

    w: float
    x: float
    y: float

    @classmethod
    def from_xy(cls, x: float, y: float) -> "HPoint":
        return cls(1.0, float(x), float(y))

    @classmethod
    def at_infinity(cls, dx: float, dy: float) -> "HPoint":
        return cls(0.0, float(dx), float(dy))

    @classmethod
    def from_array(cls, a) -> "HPoint":
        return cls(float(a[0]), float(a[1]), float(a[2]))

    def array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y], dtype=float)

    def is_infinite(self, tau: float = TAU_ZERO) -> bool:
        m = max(abs(self.w), abs(self.x), abs(self.y))
        return m == 0.0 or abs(self.w) <= tau * m

    def to_xy(self) -> tuple[float, float]:
        if self.is_infinite():
            raise ZeroVector("point at infinity has no affine coordinates")
        return self.x / self.w, self.y / self.w


@dataclass(frozen=True)
class HLine:
    """Line with coefficients (l0, l1, l2) of l0*w + l1*x + l2*y = 0."""

    l0: float
    l1: float
    l2: float

    @classmethod
    def from_array(cls, a) -> "HLine":
        return cls(float(a[0]), float(a[1]), float(a[2]))

    def array(self) -> np.ndarray:
        return np.array([self.l0, self.l1, self.l2], dtype=float)

    def normal(self) -> tuple[float, float]:
        return self.l1, self.l2

    def direction(self) -> tuple[float, float]:
        """A vector along the line (rotate the normal by 90 degrees)."""
        return self.l2, -self.l1


# ---------------------------------------------------------------------------
# row kernels (arrays of shape (..., 3))
# ---------------------------------------------------------------------------

def wedge_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise cross product; join of points and meet of lines alike."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.empty(np.broadcast_shapes(a.shape, b.shape), dtype=float)
    out[..., 0] = a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1]
    out[..., 1] = a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2]
    out[..., 2] = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    return out


def maxabs_rows(a: np.ndarray) -> np.ndarray:
    return np.max(np.abs(a), axis=-1)


def renorm_rows(a: np.ndarray) -> np.ndarray:
    """Scale each row to max-abs-component 1 (rows of zeros stay zero)."""
    m = maxabs_rows(a)
    safe = np.where(m == 0.0, 1.0, m)
    return a / safe[..., None]


def normalize_point_rows(p: np.ndarray, tau: float = TAU_ZERO) -> np.ndarray:
    """Normalize homogeneous points so w is exactly 0 or 1 per row."""
    p = np.asarray(p, dtype=float)
    m = maxabs_rows(p)
    if np.any(m == 0.0):
        raise ZeroVector("zero homogeneous vector")
    finite = np.abs(p[..., 0]) > tau * m
    out = np.empty_like(p)
    w = np.where(finite, p[..., 0], 1.0)
    out[..., 1] = p[..., 1] / w
    out[..., 2] = p[..., 2] / w
    out[..., 0] = 1.0
    if not np.all(finite):
        inf = ~finite
        d = np.hypot(p[..., 1], p[..., 2])
        if np.any(d[inf] == 0.0):
            raise ZeroVector("point at infinity with zero direction")
        out[..., 0] = np.where(inf, 0.0, out[..., 0])
        out[..., 1] = np.where(inf, p[..., 1] / d, out[..., 1])
        out[..., 2] = np.where(inf, p[..., 2] / d, out[..., 2])
    return out


def embed_affine(xy: np.ndarray) -> np.ndarray:
    """Lift (n, 2) affine coordinates to (n, 3) homogeneous points."""
    xy = np.asarray(xy, dtype=float)
    out = np.empty(xy.shape[:-1] + (3,), dtype=float)
    out[..., 0] = 1.0
    out[..., 1] = xy[..., 0]
    out[..., 2] = xy[..., 1]
    return out


# Index pairs (l, m) addressed by the argmax component of the cross product:
# component 0 of x ^ t equals det over rows (1, 2), component 1 is -det over
# (0, 2), component 2 is det over (0, 1).
_MINOR_L = np.array([1, 0, 0])
_MINOR_M = np.array([2, 2, 1])


def harmonic_rows(
    x: np.ndarray, t: np.ndarray, p: np.ndarray, tau: float = TAU_ZERO
) -> tuple[np.ndarray, np.ndarray]:
    """Harmonic conjugate of p with respect to (x, t), row-wise.

    Solves gamma*x + mu*t = p on the best-conditioned coordinate pair and
    returns ``(u, ok)`` where ``u = D1*x - D2*t`` and ``ok`` flags rows whose
    largest 2x2 minor stayed above the degeneracy threshold.  Callers decide
    how to treat bad rows.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    t = np.atleast_2d(np.asarray(t, dtype=float))
    p = np.atleast_2d(np.asarray(p, dtype=float))
    c = wedge_rows(x, t)
    k = np.argmax(np.abs(c), axis=-1)
    ok = np.abs(c[np.arange(len(k)), k]) > tau * maxabs_rows(x) * maxabs_rows(t)
    l = _MINOR_L[k]
    m = _MINOR_M[k]
    rows = np.arange(len(k))
    xl, xm = x[rows, l], x[rows, m]
    tl, tm = t[rows, l], t[rows, m]
    pl, pm = p[rows, l], p[rows, m]
    d1 = pl * tm - pm * tl
    d2 = xl * pm - xm * pl
    u = d1[:, None] * x - d2[:, None] * t
    return u, ok


def _frame_solve_rows(
    e0: np.ndarray, e1: np.ndarray, rhs: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise solve of a*e0 + b*e1 = rhs on the best-conditioned minors."""
    c = wedge_rows(e0, e1)
    k = np.argmax(np.abs(c), axis=-1)
    rows = np.arange(len(k))
    l = _MINOR_L[k]
    m = _MINOR_M[k]
    det = e0[rows, l] * e1[rows, m] - e0[rows, m] * e1[rows, l]
    a = (rhs[rows, l] * e1[rows, m] - rhs[rows, m] * e1[rows, l]) / det
    b = (e0[rows, l] * rhs[rows, m] - e0[rows, m] * rhs[rows, l]) / det
    return a, b


def cross_ratio_rows(
    x: np.ndarray, e: np.ndarray, e0: np.ndarray, e1: np.ndarray
) -> np.ndarray:
    """Row-wise cross ratio of collinear quadruples (no validation)."""
    x = np.atleast_2d(x)
    e = np.atleast_2d(e)
    e0 = np.atleast_2d(e0)
    e1 = np.atleast_2d(e1)
    a, b = _frame_solve_rows(e0, e1, e)
    x0, x1 = _frame_solve_rows(a[:, None] * e0, b[:, None] * e1, x)
    with np.errstate(divide="ignore", invalid="ignore"):
        return x1 / x0


def incidence_residual_rows(p: np.ndarray, line: np.ndarray) -> np.ndarray:
    """|<p, line>| scaled by the Euclidean norms of both triples."""
    p = np.asarray(p, dtype=float)
    line = np.asarray(line, dtype=float)
    dot = np.abs(np.sum(p * line, axis=-1))
    np_ = np.linalg.norm(p, axis=-1)
    nl = np.linalg.norm(line, axis=-1)
    safe = np.where((np_ == 0) | (nl == 0), 1.0, np_ * nl)
    return dot / safe


# ---------------------------------------------------------------------------
# scalar operations
# ---------------------------------------------------------------------------

def join(p: HPoint, q: HPoint) -> HLine:
    """Line through two projectively distinct points."""
    a, b = p.array(), q.array()
    c = wedge_rows(a, b)
    if maxabs_rows(c) <= TAU_ZERO * maxabs_rows(a) * maxabs_rows(b):
        raise CoincidentPoints(f"join of coincident points {p} and {q}")
    return HLine.from_array(c)


def meet(a: HLine, b: HLine) -> HPoint:
    """Intersection point of two lines; parallel lines meet at infinity."""
    av, bv = a.array(), b.array()
    c = wedge_rows(av, bv)
    if maxabs_rows(c) <= TAU_ZERO * maxabs_rows(av) * maxabs_rows(bv):
        raise CoincidentLines(f"meet of coincident lines {a} and {b}")
    return HPoint.from_array(c)


def normalize(p: HPoint) -> HPoint:
    """Canonical representative with w in {0, 1}; infinite directions get
    unit Euclidean norm."""
    return HPoint.from_array(normalize_point_rows(p.array()[None, :])[0])


def oriented_normalize(line: HLine) -> HLine:
    """Scale line coefficients so the normal (l1, l2) has unit norm."""
    n = np.hypot(line.l1, line.l2)
    if n <= TAU_ZERO * max(abs(line.l0), 1.0):
        raise ZeroVector("line with vanishing normal (the line at infinity)")
    return HLine(line.l0 / n, line.l1 / n, line.l2 / n)


def proj_equal(a, b, tol: float = TAU_PROJ) -> bool:
    """Projective equality of two coordinate triples (points or lines)."""
    av = a.array() if hasattr(a, "array") else np.asarray(a, dtype=float)
    bv = b.array() if hasattr(b, "array") else np.asarray(b, dtype=float)
    c = wedge_rows(av, bv)
    return float(np.linalg.norm(c)) <= tol * float(
        np.linalg.norm(av) * np.linalg.norm(bv)
    )


def incident(p: HPoint, line: HLine, tol: float = TAU_PROJ) -> bool:
    return float(incidence_residual_rows(p.array(), line.array())) <= tol


def _frame_solve(e0: np.ndarray, e1: np.ndarray, rhs: np.ndarray) -> tuple[float, float]:
    """Solve a*e0 + b*e1 = rhs on the best-conditioned coordinate pair."""
    c = wedge_rows(e0, e1)
    k = int(np.argmax(np.abs(c)))
    if abs(c[k]) <= TAU_ZERO * maxabs_rows(e0) * maxabs_rows(e1):
        raise DegenerateFrame("projectively equal frame points")
    l, m = int(_MINOR_L[k]), int(_MINOR_M[k])
    det = e0[l] * e1[m] - e0[m] * e1[l]
    a = (rhs[l] * e1[m] - rhs[m] * e1[l]) / det
    b = (e0[l] * rhs[m] - e0[m] * rhs[l]) / det
    return a, b


def cross_ratio(x: HPoint, e: HPoint, e0: HPoint, e1: HPoint) -> float:
    """Cross ratio of four collinear points, as x1/x0 in the frame {e0,e1;e}.

    Returns -1 exactly when the quadruple is harmonic, 0 for x = e0 and 1 for
    x = e (the unit point).
    """
    xv, ev, e0v, e1v = x.array(), e.array(), e0.array(), e1.array()
    carrier = wedge_rows(e0v, e1v)
    if maxabs_rows(carrier) <= TAU_ZERO * maxabs_rows(e0v) * maxabs_rows(e1v):
        raise DegenerateFrame("e0 and e1 coincide")
    for name, v in (("x", xv), ("e", ev)):
        if float(incidence_residual_rows(v, carrier)) > TAU_COLL:
            raise NotCollinear(f"point {name} is not on the line e0 e1")
    if proj_equal(e, e0) or proj_equal(e, e1):
        raise DegenerateFrame("unit point coincides with a frame point")
    a, b = _frame_solve(e0v, e1v, ev)
    x0, x1 = _frame_solve(a * e0v, b * e1v, xv)
    with np.errstate(divide="ignore", invalid="ignore"):
        return float(x1 / x0)


def harmonic_insert(x: HPoint, t: HPoint, p_ref: HPoint) -> HPoint:
    """Fourth harmonic point u with cross_ratio(u, p_ref, x, t) = -1.

    Computed from the 2x2 minors of the pair (x, t) on the coordinate rows
    where they are best conditioned.
    """
    xv, tv, pv = x.array(), t.array(), p_ref.array()
    carrier = wedge_rows(xv, tv)
    if maxabs_rows(carrier) <= TAU_ZERO * maxabs_rows(xv) * maxabs_rows(tv):
        raise DegenerateFrame("x and t are projectively equal")
    if float(incidence_residual_rows(pv, carrier)) > TAU_COLL:
        raise NotCollinear("p_ref is not on the line x t")
    if proj_equal(p_ref, x) or proj_equal(p_ref, t):
        raise DegenerateFrame("p_ref coincides with a frame point")
    u, ok = harmonic_rows(xv[None, :], tv[None, :], pv[None, :])
    if not bool(ok[0]):
        raise DegenerateFrame("all 2x2 minors of (x, t) are degenerate")
    return normalize(HPoint.from_array(u[0]))
