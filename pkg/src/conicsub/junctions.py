"""Tangent construction and point insertion at junction vertices.

Junction vertices separate the totally convex pieces of a segmented
polyline.  At an inflection point the tangent starts as a blend of the two
one-sided estimates and is then pulled, level by level, toward the incident
edge that has opened the widest angle against the initial inflection edge.
At a convex junction both one-sided tangents are re-estimated every level and
blended.  The first and last new point of a subpolygon next to such a
junction is placed on the segment from the edge midpoint to the tangent apex,
which closes the gap that plain harmonic insertion would leave around the
junction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OppositeLines, TangentApexAtInfinity
from .projective import (
    TAU_PROJ,
    TAU_ZERO,
    HLine,
    HPoint,
    incidence_residual_rows,
    join,
    normalize,
)
from .segmentation import JunctionKind
from .tangents import FivePointStencil, estimate_tangent, line_angle

# Two edge angles closer than this tie; the left edge wins.
GAMMA_TIE_TOL = 1e-9


@dataclass
class JunctionState:
    """Per-junction data carried across refinement levels.

    ``vertex`` is the junction's index in the current polyline (remapped by
    the engine after every level); the vertex itself never moves, so its
    position is stored once as ``anchor_point``.  ``e_i`` is the level-0
    inflection edge line and never changes; ``prev_tangent`` is the tangent
    produced at the previous level.
    """

    kind: JunctionKind
    vertex: int
    lambda_: float = 0.5
    rho: float = 0.5
    e_i: HLine | None = None
    prev_tangent: HLine | None = None
    anchor_point: HPoint | None = None

    def __post_init__(self):
        if not 0.0 < self.lambda_ < 1.0:
            raise ValueError("lambda must lie strictly in (0, 1)")
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must lie strictly in (0, 1)")

    @property
    def mu(self) -> float:
        return 1.0 - self.lambda_

    @property
    def sigma(self) -> float:
        return 1.0 - self.rho


def _oriented_unit(line: HLine) -> np.ndarray:
    a = line.array()
    n = np.hypot(a[1], a[2])
    if n <= TAU_ZERO * max(abs(a[0]), 1.0):
        raise OppositeLines("cannot orient a line with vanishing normal")
    return a / n


def blend_lines(a: HLine, b: HLine, lambda_: float, anchor: HPoint) -> HLine:
    """Convex combination of two concurrent lines on unit-normal
    representatives.

    Both lines must pass through the anchor.  b's normal is flipped to agree
    with a's, so for lambda = 1/2 the blend is the exact angle bisector.
    """
    if not 0.0 < lambda_ <= 1.0:
        raise ValueError("lambda must lie in (0, 1]")
    av = _oriented_unit(a)
    bv = _oriented_unit(b)
    anc = anchor.array()
    for name, lv in (("a", av), ("b", bv)):
        if float(incidence_residual_rows(anc, lv)) > TAU_PROJ:
            raise ValueError(f"line {name} is not incident with the anchor point")
    dot = av[1] * bv[1] + av[2] * bv[2]
    if dot < 0.0:
        bv = -bv
    out = lambda_ * av + (1.0 - lambda_) * bv
    if np.hypot(out[1], out[2]) <= TAU_ZERO:
        raise OppositeLines("blend of anti-parallel lines vanished")
    return HLine.from_array(out)


def inflection_tangent_initial(
    left5: FivePointStencil, right5: FivePointStencil, st: JunctionState
) -> HLine:
    """Level-0 tangent at an inflection vertex: blend of the one-sided
    five-point estimates, anchored at the vertex (q3 of both stencils)."""
    l_left = estimate_tangent(left5)
    l_right = estimate_tangent(right5)
    line = blend_lines(l_left, l_right, st.lambda_, left5.q3)
    st.prev_tangent = line
    return line


def inflection_tangent_update(
    st: JunctionState, left_edge: HLine, right_edge: HLine
) -> HLine:
    """Level-k tangent at an inflection vertex.

    Of the two incident edges, the one forming the larger angle with the
    stored level-0 inflection edge is blended into the previous tangent.
    """
    if st.e_i is None or st.prev_tangent is None or st.anchor_point is None:
        raise ValueError("junction state is missing e_i, anchor, or the previous tangent")
    e = np.asarray(st.e_i.direction())
    g_l = line_angle(np.asarray(left_edge.direction()), e)
    g_r = line_angle(np.asarray(right_edge.direction()), e)
    chosen = left_edge if g_l >= g_r - GAMMA_TIE_TOL else right_edge
    line = blend_lines(st.prev_tangent, chosen, st.lambda_, st.anchor_point)
    st.prev_tangent = line
    return line


def convex_junction_tangent(
    left5: FivePointStencil,
    right5: FivePointStencil,
    st: JunctionState,
    p_prev: HPoint,
    p_next: HPoint,
) -> HLine:
    """Tangent at a convex junction: blend of the one-sided estimates, with
    either side replaced by the incident chord when the immediate neighbors
    end up in different half-planes of that estimate."""
    vertex = left5.q3
    l_left = estimate_tangent(left5)
    l_right = estimate_tangent(right5)
    if _straddle(l_left, p_prev, p_next):
        l_left = join(vertex, p_next)
    if _straddle(l_right, p_prev, p_next):
        l_right = join(p_prev, vertex)
    line = blend_lines(l_left, l_right, st.lambda_, vertex)
    st.prev_tangent = line
    return line


def _straddle(line: HLine, p: HPoint, q: HPoint) -> bool:
    lv = line.array()
    sp = float(lv @ normalize(p).array())
    sq = float(lv @ normalize(q).array())
    scale = float(np.max(np.abs(lv)))
    if abs(sp) <= TAU_ZERO * scale or abs(sq) <= TAU_ZERO * scale:
        return False
    return (sp > 0) != (sq > 0)


def endpoint_insert(t: HPoint, m: HPoint, st: JunctionState) -> HPoint:
    """First/last new point of a subpolygon next to a junction: the affine
    combination rho*t + sigma*m of the tangent apex and the edge midpoint.
    Falls back to the midpoint when the apex is at infinity."""
    tn = normalize(t)
    mn = normalize(m)
    if tn.is_infinite():
        raise TangentApexAtInfinity("tangent apex at infinity next to a junction")
    return HPoint(
        1.0,
        st.rho * tn.x + st.sigma * mn.x,
        st.rho * tn.y + st.sigma * mn.y,
    )
