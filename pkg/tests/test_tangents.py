import itertools

import numpy as np
import pytest

from conicsub.errors import (
    DegenerateConfiguration,
    DegenerateStencil,
    PointNotOnConic,
    TooFewPoints,
)
from conicsub.polyline import Polyline
from conicsub.projective import HPoint, proj_equal
from conicsub.tangents import (
    ConicCoefficients,
    FivePointStencil,
    build_tangent_field,
    conic_tangent_at,
    conic_through_five,
    estimate_tangent,
    estimate_tangent_rows,
    line_angle,
    line_angle_between,
    stencil_indices,
)
from support import (
    circle_points,
    ellipse_points,
    hyperbola_points,
    parabola_points,
    sorted_params,
)


def stencil_from_xy(pts) -> FivePointStencil:
    return FivePointStencil(*[HPoint(1.0, x, y) for x, y in pts])


def tangent_angle_error(line, true_dir) -> float:
    return line_angle(np.array([line.l2, -line.l1]), np.asarray(true_dir))


class TestEstimateTangent:
    def test_circle_vertical_tangent(self):
        pts = circle_points(np.deg2rad([90, 45, 0, -45, -90]))
        line = estimate_tangent(stencil_from_xy(pts))
        # tangent at (1, 0) is x = 1
        assert proj_equal(line, HPoint(-1, 1, 0))

    def test_parabola_horizontal_tangent(self):
        pts = parabola_points([-2, -1, 0, 1, 2])
        line = estimate_tangent(stencil_from_xy(pts))
        assert proj_equal(line, HPoint(0, 0, 1))

    def test_symmetric_stencil_parallel_to_chord(self):
        # mirror-symmetric about the y axis: tangent at the apex must be
        # parallel to the chord q2-q4
        pts = np.array([[-2.0, 3.5], [-1.0, 1.2], [0.0, 0.0], [1.0, 1.2], [2.0, 3.5]])
        line = estimate_tangent(stencil_from_xy(pts))
        assert tangent_angle_error(line, [1.0, 0.0]) < 1e-12

    def test_degenerate_stencil(self):
        pts = np.array([[0.0, 0], [1, 0], [2, 0], [3, 0], [4, 0]])
        with pytest.raises(DegenerateStencil):
            estimate_tangent(stencil_from_xy(pts))

    def test_conic_exactness_random(self, rng):
        for _ in range(100):
            kind = rng.integers(4)
            if kind == 0:
                t = sorted_params(rng, 5, 0, 2 * np.pi, 0.05)
                pts = circle_points(t, r=rng.uniform(0.5, 3))
            elif kind == 1:
                t = sorted_params(rng, 5, 0, 2 * np.pi, 0.05)
                pts = ellipse_points(t, a=rng.uniform(0.5, 3), b=rng.uniform(0.5, 3))
            elif kind == 2:
                t = sorted_params(rng, 5, -2, 2, 0.05)
                pts = parabola_points(t)
            else:
                t = sorted_params(rng, 5, -1.5, 1.5, 0.05)
                pts = hyperbola_points(t)
            est = estimate_tangent(stencil_from_xy(pts))
            conic = conic_through_five([HPoint(1, x, y) for x, y in pts])
            oracle = conic_tangent_at(conic, HPoint(1, *pts[2]))
            assert line_angle_between(est, oracle) < 1e-9

    def test_permutation_invariance_on_conic(self, rng):
        t = sorted_params(rng, 5, 0.2, 5.8, 0.3)
        pts = ellipse_points(t)
        q3 = HPoint(1, *pts[2])
        others = [HPoint(1, *pts[i]) for i in (0, 1, 3, 4)]
        ref = None
        for perm in itertools.permutations(others):
            line = estimate_tangent(FivePointStencil(perm[0], perm[1], q3, perm[2], perm[3]))
            if ref is None:
                ref = line
            else:
                assert line_angle_between(line, ref) < 1e-9

    def test_fourth_order_convergence(self):
        # non-conic convex curve: trig-perturbed circle; the error drops by
        # ~2^4 per halving of the sample spacing
        def curve(th):
            r = 1 + 0.05 * np.cos(3 * th)
            return np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)

        def tangent_dir(th):
            r = 1 + 0.05 * np.cos(3 * th)
            rp = -0.15 * np.sin(3 * th)
            return np.array(
                [rp * np.cos(th) - r * np.sin(th), rp * np.sin(th) + r * np.cos(th)]
            )

        th0 = 0.7
        errs = []
        for h in (0.2, 0.1, 0.05, 0.025):
            pts = curve(th0 + h * np.arange(-2, 3))
            line = estimate_tangent(stencil_from_xy(pts))
            errs.append(tangent_angle_error(line, tangent_dir(th0)))
        for a, b in zip(errs, errs[1:]):
            assert 10 <= a / b <= 24

    def test_projective_equivariance(self, rng):
        pts = circle_points(np.array([0.3, 1.1, 2.0, 3.2, 4.5]))
        base = estimate_tangent(stencil_from_xy(pts))
        for _ in range(20):
            m = rng.uniform(-1, 1, (3, 3))
            if abs(np.linalg.det(m)) < 0.2:
                continue
            imgs = [HPoint.from_array(m @ np.array([1.0, x, y])) for x, y in pts]
            mapped = estimate_tangent(FivePointStencil(*imgs))
            # lines transform by the inverse transpose
            expected = np.linalg.inv(m).T @ base.array()
            assert proj_equal(mapped, HPoint.from_array(expected), tol=1e-7)

    def test_batch_matches_scalar_bitwise(self, rng):
        rows = []
        for _ in range(16):
            t = sorted_params(rng, 5, 0, 2 * np.pi, 0.2)
            pts = ellipse_points(t, a=1.7, b=0.9)
            rows.append(np.column_stack([np.ones(5), pts]))
        batch = estimate_tangent_rows(np.stack(rows))
        for k, row in enumerate(rows):
            single = estimate_tangent_rows(row[None])
            assert np.array_equal(batch[k], single[0])


class TestTangentField:
    def test_hexagon_perpendicular_to_radius(self):
        th = np.linspace(0, 2 * np.pi, 7)[:-1]
        poly = Polyline(circle_points(th), closed=True)
        field = build_tangent_field(poly)
        for i, a in enumerate(th):
            line = field.line(i)
            # tangent of the circumscribed circle at the vertex
            assert tangent_angle_error(line, [-np.sin(a), np.cos(a)]) < 1e-12

    def test_open_parabola_matches_gradient(self):
        xs = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
        poly = Polyline(parabola_points(xs))
        field = build_tangent_field(poly)
        for i, x in enumerate(xs):
            assert tangent_angle_error(field.line(i), [1.0, 2 * x]) < 1e-12

    def test_too_few_points(self):
        with pytest.raises(TooFewPoints):
            build_tangent_field(Polyline(parabola_points([-1, 0, 1, 2])))

    def test_open_stencils_cover_boundary(self):
        idx = stencil_indices(7, closed=False)
        assert sorted(idx[0]) == [0, 1, 2, 3, 4]
        assert sorted(idx[1]) == [0, 1, 2, 3, 4]
        assert sorted(idx[5]) == [2, 3, 4, 5, 6]
        assert sorted(idx[6]) == [2, 3, 4, 5, 6]
        assert idx[0][2] == 0 and idx[6][2] == 6  # target stays in the middle slot

    def test_closed_stencils_wrap(self):
        idx = stencil_indices(6, closed=True)
        assert list(idx[0]) == [4, 5, 0, 1, 2]
        assert list(idx[5]) == [3, 4, 5, 0, 1]


class TestConicOracles:
    def test_unit_circle_fit(self):
        pts = [(1, 0), (0, 1), (-1, 0), (0, -1), (np.sqrt(0.5), np.sqrt(0.5))]
        c = conic_through_five(pts)
        ref = np.array([1, 0, 1, 0, 0, -1]) / np.sqrt(3)
        assert np.allclose(np.abs(c.c), np.abs(ref), atol=1e-12)

    def test_parabola_fit(self):
        c = conic_through_five([(0, 0), (1, 1), (2, 4), (-1, 1), (-2, 4)])
        for x in (-1.5, 0.3, 1.7):
            assert abs(c.residual(x, x * x)) < 1e-10

    def test_four_collinear_degenerate(self):
        pts = [(0, 0), (1, 0), (2, 0), (3, 0), (1, 5)]
        with pytest.raises(DegenerateConfiguration):
            conic_through_five(pts)

    def test_tangent_at_circle(self):
        c = ConicCoefficients(np.array([1.0, 0, 1, 0, 0, -1]))
        line = conic_tangent_at(c, HPoint(1, 1, 0))
        assert proj_equal(line, HPoint(-1, 1, 0))

    def test_tangent_at_parabola_origin(self):
        c = ConicCoefficients(np.array([-1.0, 0, 0, 0, 1, 0]))
        line = conic_tangent_at(c, HPoint(1, 0, 0))
        assert proj_equal(line, HPoint(0, 0, 1))

    def test_point_not_on_conic(self):
        c = ConicCoefficients(np.array([1.0, 0, 1, 0, 0, -1]))
        with pytest.raises(PointNotOnConic):
            conic_tangent_at(c, HPoint(1, 0, 2))

    def test_fit_points_satisfy_equation(self, rng):
        for _ in range(30):
            t = sorted_params(rng, 5, 0, 2 * np.pi, 0.1)
            pts = ellipse_points(t, a=rng.uniform(0.5, 2.5), b=rng.uniform(0.5, 2.5))
            c = conic_through_five([HPoint(1, x, y) for x, y in pts])
            for x, y in pts:
                assert abs(c.residual(x, y)) < 1e-10
