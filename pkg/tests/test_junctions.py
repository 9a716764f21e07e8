import numpy as np
import pytest

from conicsub.errors import TangentApexAtInfinity
from conicsub.junctions import (
    JunctionState,
    blend_lines,
    convex_junction_tangent,
    endpoint_insert,
    inflection_tangent_initial,
    inflection_tangent_update,
)
from conicsub.projective import HLine, HPoint, incident, proj_equal
from conicsub.segmentation import JunctionKind
from conicsub.tangents import FivePointStencil, line_angle, line_angle_between
from support import circle_points

ORIGIN = HPoint(1, 0, 0)


def line_at(deg, through=(0.0, 0.0)):
    """Line through a point with direction at the given angle."""
    a = np.deg2rad(deg)
    d = np.array([np.cos(a), np.sin(a)])
    n = np.array([-d[1], d[0]])
    return HLine(-(n[0] * through[0] + n[1] * through[1]), n[0], n[1])


def direction_deg(line):
    d = np.array(line.direction())
    return np.rad2deg(np.arctan2(d[1], d[0])) % 180


def stencil(pts):
    return FivePointStencil(*[HPoint(1, x, y) for x, y in pts])


def left_stencil(pts):
    """Junction stencil from the five points ending at the junction: the
    junction (last point) takes the target slot q3."""
    p = [HPoint(1, x, y) for x, y in pts]
    return FivePointStencil(p[2], p[3], p[4], p[0], p[1])


def right_stencil(pts):
    """Junction stencil from the five points starting at the junction."""
    p = [HPoint(1, x, y) for x, y in pts]
    return FivePointStencil(p[3], p[4], p[0], p[1], p[2])


class TestBlendLines:
    def test_perpendicular_bisector(self):
        out = blend_lines(HLine(0, 0, 1), HLine(0, 1, 0), 0.5, ORIGIN)
        assert proj_equal(out, HLine(0, 1, 1))

    def test_lambda_one_returns_first(self):
        out = blend_lines(HLine(0, 0, 1), HLine(0, 1, 0), 1.0, ORIGIN)
        assert proj_equal(out, HLine(0, 0, 1))

    def test_unit_normal_average_is_angle_bisector(self):
        # y = 0 and y = x blend to the 22.5 degree bisector, not the slope average
        out = blend_lines(line_at(0), line_at(45), 0.5, ORIGIN)
        assert direction_deg(out) == pytest.approx(22.5, abs=1e-12)

    def test_anchor_incidence_required(self):
        with pytest.raises(ValueError):
            blend_lines(HLine(0, 0, 1), HLine(-1, 1, 0), 0.5, ORIGIN)

    def test_result_incident_with_anchor(self):
        anchor = HPoint(1, 2.0, -1.0)
        a = line_at(10, (2.0, -1.0))
        b = line_at(100, (2.0, -1.0))
        out = blend_lines(a, b, 0.3, anchor)
        assert incident(anchor, out)


class TestInflectionInitial:
    def test_point_symmetric_s_data(self):
        # stencils relate by the point reflection through the junction
        left = np.array([[-4, -1.2], [-3, -1.05], [-2, -0.8], [-1, -0.45], [0, 0]], dtype=float)
        right = -left[::-1]
        st = JunctionState(JunctionKind.INFLECTION_POINT, 0, anchor_point=ORIGIN)
        out = inflection_tangent_initial(left_stencil(left), right_stencil(right), st)
        assert incident(ORIGIN, out)
        assert st.prev_tangent is out

    def test_same_conic_both_sides_returns_conic_tangent(self):
        th_l = np.linspace(-1.2, 0, 5)
        th_r = np.linspace(0, 1.2, 5)
        left = circle_points(th_l)
        right = circle_points(th_r)
        st = JunctionState(JunctionKind.INFLECTION_POINT, 0, anchor_point=HPoint(1, 1, 0))
        out = inflection_tangent_initial(left_stencil(left), right_stencil(right), st)
        assert line_angle_between(out, HLine(-1, 1, 0)) < 1e-10

    def test_lambda_changes_result(self):
        left = np.array([[-4, -2.2], [-3, -1.5], [-2, -0.9], [-1, -0.4], [0, 0]], dtype=float)
        right = np.array([[0, 0], [1, 0.3], [2, 0.5], [3, 0.6], [4, 0.65]], dtype=float)
        outs = []
        for lam in (0.9, 0.1):
            st = JunctionState(JunctionKind.INFLECTION_POINT, 0, lambda_=lam, anchor_point=ORIGIN)
            out = inflection_tangent_initial(left_stencil(left), right_stencil(right), st)
            assert incident(ORIGIN, out)
            outs.append(out)
        assert line_angle_between(outs[0], outs[1]) > 1e-3


class TestInflectionUpdate:
    def make_state(self, prev_deg):
        return JunctionState(
            JunctionKind.INFLECTION_POINT,
            0,
            e_i=HLine(0, 0, 1),
            prev_tangent=line_at(prev_deg),
            anchor_point=ORIGIN,
        )

    def test_picks_wider_edge_and_bisects(self):
        st = self.make_state(40)
        out = inflection_tangent_update(st, line_at(30), line_at(50))
        assert direction_deg(out) == pytest.approx(45.0, abs=1e-12)
        assert st.prev_tangent is out

    def test_fixed_point_when_prev_equals_edge(self):
        st = self.make_state(50)
        out = inflection_tangent_update(st, line_at(30), line_at(50))
        assert direction_deg(out) == pytest.approx(50.0, abs=1e-12)

    def test_tie_goes_left(self):
        st = self.make_state(0)
        out = inflection_tangent_update(st, line_at(30), line_at(-30))
        # both edges form 30 degrees with e_i; the left edge wins the tie
        assert direction_deg(out) == pytest.approx(15.0, abs=1e-9)


class TestConvexJunctionTangent:
    def test_both_arcs_same_circle(self):
        th = np.linspace(-1.0, 0, 5)
        left = circle_points(th)
        right = circle_points(np.linspace(0, 1.0, 5))
        st = JunctionState(JunctionKind.CONVEX_JUNCTION, 0, anchor_point=HPoint(1, 1, 0))
        out = convex_junction_tangent(
            left_stencil(left), right_stencil(right), st,
            HPoint(1, *left[-2]), HPoint(1, *right[1]),
        )
        assert line_angle_between(out, HLine(-1, 1, 0)) < 1e-10

    def test_g1_arcs_different_radii(self):
        # two circles tangent to x = 1 at (1, 0): radii 1 and 2
        th = np.linspace(-0.9, 0, 5)
        left = circle_points(th)
        th2 = np.linspace(0, 0.6, 5)
        right = np.stack([-1 + 2 * np.cos(th2 / 1.0), 2 * np.sin(th2 / 1.0)], axis=1)
        right[0] = [1.0, 0.0]
        st = JunctionState(JunctionKind.CONVEX_JUNCTION, 0, anchor_point=HPoint(1, 1, 0))
        out = convex_junction_tangent(
            left_stencil(left), right_stencil(right), st,
            HPoint(1, *left[-2]), HPoint(1, *right[1]),
        )
        assert line_angle_between(out, HLine(-1, 1, 0)) < 1e-9

    def test_half_plane_correction_replaces_estimate(self):
        # degenerate left data whose estimate separates the neighbors forces
        # the chord replacement
        left = np.array([[-4.0, 4.0], [-3.0, 2.2], [-2.0, 1.0], [-1.0, 0.3], [0.0, 0.0]])
        right = np.array([[0.0, 0.0], [1.0, 0.25], [2.0, 0.9], [3.0, 2.0], [4.0, 3.8]])
        st = JunctionState(JunctionKind.CONVEX_JUNCTION, 0, anchor_point=ORIGIN)
        out = convex_junction_tangent(
            left_stencil(left), right_stencil(right), st,
            HPoint(1, *left[-2]), HPoint(1, *right[1]),
        )
        assert incident(ORIGIN, out)


class TestEndpointInsert:
    def make_state(self, rho=0.5):
        return JunctionState(JunctionKind.INFLECTION_POINT, 0, rho=rho)

    def test_simple_average(self):
        p = endpoint_insert(HPoint(1, 0, 1), HPoint(1, 0, 0), self.make_state())
        assert (p.x, p.y) == (0.0, 0.5)

    def test_rho_limit_toward_midpoint(self):
        p = endpoint_insert(HPoint(1, 0, 1), HPoint(1, 0, 0), self.make_state(rho=1e-9))
        assert p.y == pytest.approx(0.0, abs=1e-8)

    def test_circle_configuration_inside_triangle(self):
        st = self.make_state()
        p = endpoint_insert(HPoint(1, 1, 1), HPoint(1, 0.5, 0.5), st)
        assert (p.x, p.y) == (0.75, 0.75)
        # containment in the triangle ((1,0), (1,1), (0,1)): x+y between 1 and 2
        assert 1.0 < p.x + p.y < 2.0 and p.x < 1.0 and p.y < 1.0

    def test_apex_at_infinity(self):
        with pytest.raises(TangentApexAtInfinity):
            endpoint_insert(HPoint(0, 1, 0), HPoint(1, 0, 0), self.make_state())


class TestJunctionState:
    def test_mu_sigma_complements(self):
        st = JunctionState(JunctionKind.CONVEX_JUNCTION, 3, lambda_=0.3, rho=0.8)
        assert st.mu == pytest.approx(0.7)
        assert st.sigma == pytest.approx(0.2, abs=1e-12)

    def test_parameter_bounds(self):
        with pytest.raises(ValueError):
            JunctionState(JunctionKind.CONVEX_JUNCTION, 0, lambda_=0.0)
        with pytest.raises(ValueError):
            JunctionState(JunctionKind.CONVEX_JUNCTION, 0, rho=1.0)
