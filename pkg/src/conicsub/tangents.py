"""Five-point conic tangent estimation and conic test oracles.

The estimator takes five points with the target point in the middle slot and
builds the tangent there from a fixed chain of joins and meets.  When the
five points lie on a conic the result is that conic's exact tangent at the
target; for smooth non-conic data it approximates the tangent with fourth
order accuracy.  Everything is a cross product, so the construction commutes
with projective maps.

The conic oracles (``conic_through_five`` / ``conic_tangent_at``) provide an
independent route to the same tangent and also back the conic-residual
diagnostics; they are deliberately implemented via a nullspace solve rather
than wedges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateConfiguration,
    DegenerateStencil,
    GradientVanishes,
    PointNotOnConic,
    TooFewPoints,
)
from .polyline import Polyline
from .projective import (
    TAU_ZERO,
    HLine,
    HPoint,
    embed_affine,
    maxabs_rows,
    renorm_rows,
    wedge_rows,
)


@dataclass(frozen=True)
class FivePointStencil:
    """Five pairwise distinct points; the tangent is sought at q3."""

    q1: HPoint
    q2: HPoint
    q3: HPoint
    q4: HPoint
    q5: HPoint

    def rows(self) -> np.ndarray:
        return np.stack(
            [self.q1.array(), self.q2.array(), self.q3.array(), self.q4.array(), self.q5.array()]
        )


@dataclass(frozen=True)
class ConicCoefficients:
    """Coefficients (a, b, c, d, e, f) of a*x^2+b*xy+c*y^2+d*x+e*y+f = 0,
    scaled to unit Euclidean norm."""

    c: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.c, dtype=float)
        n = np.linalg.norm(v)
        if v.shape != (6,) or n == 0.0:
            raise DegenerateConfiguration("need six coefficients, not all zero")
        object.__setattr__(self, "c", v / n)

    def matrix(self) -> np.ndarray:
        """Symmetric matrix in (w, x, y) coordinates."""
        a, b, cc, d, e, f = self.c
        return np.array(
            [[f, d / 2, e / 2], [d / 2, a, b / 2], [e / 2, b / 2, cc]]
        )

    def residual(self, x: float, y: float) -> float:
        a, b, cc, d, e, f = self.c
        return a * x * x + b * x * y + cc * y * y + d * x + e * y + f

    def gradient(self, x: float, y: float) -> np.ndarray:
        a, b, cc, d, e, _ = self.c
        return np.array([2 * a * x + b * y + d, b * x + 2 * cc * y + e])


@dataclass(frozen=True)
class TangentField:
    """One tangent line per vertex of the range it was built over."""

    lines: np.ndarray  # (m, 3)

    def __len__(self) -> int:
        return self.lines.shape[0]

    def line(self, i: int) -> HLine:
        return HLine.from_array(self.lines[i])


def estimate_tangent_rows(stencils: np.ndarray) -> np.ndarray:
    """Batched estimator on an (m, 5, 3) array of homogeneous stencils.

    Intermediates are renormalized to max-abs 1 after every wedge so the
    chain neither overflows nor underflows; a wedge collapsing below the
    degeneracy threshold raises DegenerateStencil.
    """
    q = renorm_rows(np.asarray(stencils, dtype=float))
    if q.ndim != 3 or q.shape[1:] != (5, 3):
        raise ValueError("stencil array must have shape (m, 5, 3)")
    q1, q2, q3, q4, q5 = (q[:, i, :] for i in range(5))

    def step(a, b, what):
        c = wedge_rows(a, b)
        if np.any(maxabs_rows(c) <= TAU_ZERO):
            raise DegenerateStencil(f"degenerate wedge while forming {what}")
        return renorm_rows(c)

    m12 = step(q1, q2, "M12")
    m34 = step(q3, q4, "M34")
    m54 = step(q5, q4, "M54")
    m32 = step(q3, q2, "M32")
    m15 = step(q1, q5, "M15")
    a = step(m12, m34, "A")
    b = step(m54, m32, "B")
    ab = step(a, b, "A^B")
    pivot = step(m15, ab, "M15^(A^B)")
    return step(q3, pivot, "tangent")


def estimate_tangent(s: FivePointStencil) -> HLine:
    """Tangent line at s.q3; exact if the stencil lies on a conic."""
    return HLine.from_array(estimate_tangent_rows(s.rows()[None, :, :])[0])


def stencil_indices(n: int, closed: bool) -> np.ndarray:
    """(n, 5) vertex indices giving each vertex its five-point stencil.

    Closed ranges wrap around; open ranges reuse the first/last five points
    at the boundary via ghost indices, so every stencil is a permutation of
    five real vertices.
    """
    if n < 5:
        raise TooFewPoints(f"tangent stencils need at least 5 vertices, got {n}")
    offs = np.arange(-2, 3)
    idx = np.arange(n)[:, None] + offs[None, :]
    if closed:
        return idx % n
    ghost = {-2: 3, -1: 4, n: n - 5, n + 1: n - 4}
    idx = idx.copy()
    for src, dst in ghost.items():
        idx[idx == src] = dst
    return idx


def tangent_field_rows(points_xy: np.ndarray, closed: bool) -> np.ndarray:
    """Tangent lines, one per vertex, for an (n, 2) coordinate array."""
    pts = embed_affine(points_xy)
    idx = stencil_indices(len(pts), closed)
    return estimate_tangent_rows(pts[idx])


def build_tangent_field(poly: Polyline, rng=None) -> TangentField:
    """Per-vertex tangents over a polyline or one of its index ranges.

    With ``rng`` omitted the whole polyline is used and closed topology wraps
    the stencils; an explicit index range is always treated as an open
    subpolygon.
    """
    if rng is None:
        pts = poly.vertices
        closed = poly.closed
    else:
        idx = np.asarray(list(rng), dtype=int)
        pts = poly.vertices[idx]
        closed = False
    return TangentField(lines=tangent_field_rows(pts, closed))


def conic_through_five(points) -> ConicCoefficients:
    """Unique conic through five points, via the nullspace of the incidence
    system; raises if the configuration is rank deficient (e.g. four
    collinear points)."""
    rows = []
    for p in points:
        a = p.array() if isinstance(p, HPoint) else np.asarray(p, dtype=float)
        if a.shape == (2,):
            a = np.array([1.0, a[0], a[1]])
        w, x, y = a
        rows.append([x * x, x * y, y * y, x * w, y * w, w * w])
    m = np.asarray(rows, dtype=float)
    if m.shape != (5, 6):
        raise DegenerateConfiguration("exactly five points required")
    _, s, vh = np.linalg.svd(m)
    if s[0] == 0.0 or s[4] <= 1e-10 * s[0]:
        raise DegenerateConfiguration("five points do not determine a conic")
    return ConicCoefficients(vh[-1])


def conic_tangent_at(c: ConicCoefficients, p: HPoint) -> HLine:
    """Polar line of an on-conic point, i.e. the tangent there."""
    x, y = p.to_xy()
    grad = c.gradient(x, y)
    gn = float(np.hypot(grad[0], grad[1]))
    if gn <= TAU_ZERO:
        raise GradientVanishes(f"conic gradient vanishes at ({x}, {y})")
    if abs(c.residual(x, y)) / gn > 1e-8:
        raise PointNotOnConic(f"point ({x}, {y}) is not on the conic")
    line = c.matrix() @ np.array([1.0, x, y])
    return HLine.from_array(line)


def line_angle(u: np.ndarray, v: np.ndarray) -> float:
    """Angle between two undirected directions, folded into [0, pi/2]."""
    cross = abs(u[0] * v[1] - u[1] * v[0])
    dot = abs(u[0] * v[0] + u[1] * v[1])
    return float(np.arctan2(cross, dot))


def line_angle_between(a: HLine, b: HLine) -> float:
    return line_angle(np.asarray(a.direction()), np.asarray(b.direction()))
