"""Diagnostics: discrete curvature, convexity signature, conic residual and
the per-level convergence gauges."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GradientVanishes, ProvenanceMismatch
from .polyline import Polyline
from .projective import TAU_ZERO
from .tangents import ConicCoefficients, line_angle


@dataclass(frozen=True)
class CurvatureSample:
    """Signed inverse circumradius at one vertex plus the comb normal."""

    index: int
    position: np.ndarray
    curvature: float
    normal: np.ndarray
    degenerate: bool = False


def discrete_curvature(poly: Polyline) -> list[CurvatureSample]:
    """Menger curvature per interior vertex (every vertex when closed).

    The sign follows the local turning direction; exactly collinear triples
    report zero with the degenerate flag set.
    """
    poly.require_at_least(3)
    v = poly.vertices
    n = len(v)
    ids = range(n) if poly.closed else range(1, n - 1)
    out = []
    for i in ids:
        a, b, c = v[(i - 1) % n], v[i], v[(i + 1) % n]
        e1, e2 = b - a, c - b
        chord = c - a
        cross = e1[0] * e2[1] - e1[1] * e2[0]
        l1, l2, l3 = np.hypot(*e1), np.hypot(*e2), np.hypot(*chord)
        degenerate = l1 * l2 * l3 == 0.0 or abs(cross) <= TAU_ZERO * l1 * l2
        kappa = 0.0 if degenerate else 2.0 * cross / (l1 * l2 * l3)
        if l3 > 0:
            normal = np.array([-chord[1], chord[0]]) / l3
        else:
            normal = np.zeros(2)
        out.append(
            CurvatureSample(
                index=i, position=b.copy(), curvature=float(kappa), normal=normal,
                degenerate=bool(degenerate),
            )
        )
    return out


def convexity_signature(poly: Polyline) -> tuple[np.ndarray, int]:
    """Turning-sign sequence (-1, 0, +1) and the number of strict sign
    alternations, the executable form of shape preservation."""
    poly.require_at_least(3)
    v = poly.vertices
    n = len(v)
    if poly.closed:
        e = np.roll(v, -1, axis=0) - v
        prev = np.roll(e, 1, axis=0)
        cross = prev[:, 0] * e[:, 1] - prev[:, 1] * e[:, 0]
        ln = np.hypot(e[:, 0], e[:, 1])
        scale = np.roll(ln, 1) * ln
    else:
        e = v[1:] - v[:-1]
        cross = e[:-1, 0] * e[1:, 1] - e[:-1, 1] * e[1:, 0]
        ln = np.hypot(e[:, 0], e[:, 1])
        scale = ln[:-1] * ln[1:]
    signs = np.sign(cross)
    signs[np.abs(cross) <= TAU_ZERO * scale] = 0.0
    nonzero = signs[signs != 0]
    if poly.closed and len(nonzero) > 1:
        flips = int(np.sum(nonzero != np.roll(nonzero, 1)))
    else:
        flips = int(np.sum(nonzero[1:] != nonzero[:-1]))
    return signs.astype(int), flips


def conic_residual(points, c: ConicCoefficients) -> float:
    """Max first-order geometric distance of the points from the conic:
    |algebraic residual| / |gradient| per point."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    a, b, cc, d, e, f = c.c
    x, y = pts[:, 0], pts[:, 1]
    res = a * x * x + b * x * y + cc * y * y + d * x + e * y + f
    gx = 2 * a * x + b * y + d
    gy = b * x + 2 * cc * y + e
    gn = np.hypot(gx, gy)
    if np.any(gn <= TAU_ZERO):
        raise GradientVanishes("conic gradient vanishes at a sample point")
    return float(np.max(np.abs(res) / gn))


def displacement_metrics(prev: Polyline, next_: Polyline) -> float:
    """d^k: max perpendicular distance of inserted points from their parent
    edge of the previous level.

    The parent mapping is reconstructed by matching the previous vertices
    bit-exactly, in order, inside the refined polyline; interpolatory
    refinement guarantees this works for both the basic and adaptive modes.
    """
    a = prev.vertices
    b = next_.vertices
    i = 0
    d_max = 0.0
    for j in range(len(b)):
        if i < len(a) and b[j, 0] == a[i, 0] and b[j, 1] == a[i, 1]:
            i += 1
            continue
        if i == 0 or i > len(a):
            raise ProvenanceMismatch("refined polyline does not interleave its parent")
        p = a[i - 1]
        q = a[i % len(a)] if (i < len(a) or prev.closed) else None
        if q is None:
            raise ProvenanceMismatch("inserted point after the last parent vertex")
        d = q - p
        ln = np.hypot(d[0], d[1])
        if ln == 0.0:
            dist = float(np.hypot(*(b[j] - p)))
        else:
            dist = abs(d[0] * (b[j, 1] - p[1]) - d[1] * (b[j, 0] - p[0])) / ln
        d_max = max(d_max, dist)
    if i != len(a):
        raise ProvenanceMismatch("not every parent vertex appears in the refinement")
    return d_max


def tangent_turning(
    prev_tangents: np.ndarray, next_tangents: np.ndarray, vertex_map
) -> float:
    """Max angle (complementary convention, in [0, pi/2]) between a shared
    vertex's tangent lines on two consecutive levels."""
    worst = 0.0
    for old_i, new_i in vertex_map:
        a = prev_tangents[old_i]
        b = next_tangents[new_i]
        worst = max(
            worst,
            line_angle(np.array([a[2], -a[1]]), np.array([b[2], -b[1]])),
        )
    return float(worst)
