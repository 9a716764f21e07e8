"""Shared generators and oracles for the test suite."""

from __future__ import annotations

import numpy as np

from conicsub.polyline import Polyline


def monotone_chain_hull(pts: np.ndarray) -> np.ndarray:
    """Convex hull (strict turns only), counterclockwise."""
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]

    def half(ps):
        out: list[np.ndarray] = []
        for p in ps:
            while len(out) >= 2 and _cross2(out[-1] - out[-2], p - out[-2]) <= 1e-12:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    return np.array(lower[:-1] + upper[:-1])


def _cross2(a, b) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


def random_convex_polygon(rng: np.random.Generator, n_min=10, n_max=40) -> np.ndarray:
    """Strictly convex polygon from sorted random angles on random radii
    (their convex hull), with enough margin for stable tangent estimates."""
    while True:
        m = int(rng.integers(60, 140))
        spread = rng.uniform(0.05, 0.2)
        th = np.sort(rng.uniform(0, 2 * np.pi, m))
        r = rng.uniform(1 - spread, 1 + spread, m)
        pts = np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
        hull = monotone_chain_hull(pts)
        n = len(hull)
        if not n_min <= n <= n_max:
            continue
        e = np.roll(hull, -1, axis=0) - hull
        lens = np.hypot(e[:, 0], e[:, 1])
        if lens.min() < 1e-3:
            continue
        cr = np.roll(e, 1, axis=0)[:, 0] * e[:, 1] - np.roll(e, 1, axis=0)[:, 1] * e[:, 0]
        sines = np.abs(cr) / (np.roll(lens, 1) * lens)
        if sines.min() < 5e-3:
            continue
        return hull


def circle_points(th, r=1.0, center=(0.0, 0.0)):
    th = np.asarray(th, dtype=float)
    return np.stack([center[0] + r * np.cos(th), center[1] + r * np.sin(th)], axis=1)


def ellipse_points(th, a=2.0, b=1.0):
    th = np.asarray(th, dtype=float)
    return np.stack([a * np.cos(th), b * np.sin(th)], axis=1)


def parabola_points(t):
    t = np.asarray(t, dtype=float)
    return np.stack([t, t * t], axis=1)


def hyperbola_points(t):
    t = np.asarray(t, dtype=float)
    return np.stack([np.cosh(t), np.sinh(t)], axis=1)


def unit_circle_coeffs():
    return np.array([1.0, 0.0, 1.0, 0.0, 0.0, -1.0])


def ellipse_coeffs(a=2.0, b=1.0):
    # x^2/a^2 + y^2/b^2 - 1 = 0
    return np.array([1.0 / a**2, 0.0, 1.0 / b**2, 0.0, 0.0, -1.0])


def parabola_coeffs():
    # y - x^2 = 0
    return np.array([-1.0, 0.0, 0.0, 0.0, 1.0, 0.0])


def hyperbola_coeffs():
    # x^2 - y^2 - 1 = 0
    return np.array([1.0, 0.0, -1.0, 0.0, 0.0, -1.0])


def random_similarity(rng: np.random.Generator):
    """Rotation + uniform scale + translation as a callable on (n, 2)."""
    ang = rng.uniform(0, 2 * np.pi)
    s = rng.uniform(0.5, 2.0)
    t = rng.uniform(-3, 3, 2)
    c, sn = np.cos(ang), np.sin(ang)
    m = s * np.array([[c, -sn], [sn, c]])

    def apply(pts: np.ndarray) -> np.ndarray:
        return pts @ m.T + t

    return apply


def sorted_params(rng: np.random.Generator, n, lo, hi, min_gap):
    """n sorted parameters in [lo, hi] with pairwise gaps >= min_gap."""
    while True:
        t = np.sort(rng.uniform(lo, hi, n))
        if np.all(np.diff(t) >= min_gap):
            return t


def s_shape_points() -> np.ndarray:
    """Open S: cubic with the curvature flip strictly inside an edge and no
    collinear triples."""
    xs = np.array([-3.0, -2.5, -2.0, -1.5, -1.0, -0.55, -0.15, 0.3, 0.8, 1.3, 1.9, 2.5, 3.1])
    return np.stack([xs, xs**3 / 9.0], axis=1)


def d_shape_points() -> np.ndarray:
    """Closed D: half circle plus a collinear base run."""
    arc = circle_points(np.linspace(0, np.pi, 9))
    base = np.stack([np.linspace(-1, 1, 5)[1:-1], np.zeros(3)], axis=1)
    return np.vstack([arc, base])


def polyline(pts, closed=False) -> Polyline:
    return Polyline(np.asarray(pts, dtype=float), closed=closed)
