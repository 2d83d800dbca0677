"""Geometry contract: membership, distances, projections, normals, scaling."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as hst

from oupinball.geometry import (Ball, DomainSpec, GeometryError, Hypercube,
                                ProjectionError, Shell, Trap, contains,
                                default_boundary_tol, inward_normal,
                                project_to_domain, rescale,
                                rescale_to_unit_lambda, signed_distance)


class TestContains:
    def test_ball_center_excluded(self):
        spec = DomainSpec(2, 1.0, Ball((3.0, 0.0), 1.0))
        assert not contains(spec, (3.0, 0.0))

    def test_ball_boundary_included(self):
        spec = DomainSpec(2, 1.0, Ball((3.0, 0.0), 1.0))
        assert contains(spec, (4.0, 0.0))

    def test_trap_notch_is_domain(self):
        spec = DomainSpec(2, 1.0, Trap(5.0, 1.0))
        assert contains(spec, (5.5, 0.0))

    def test_trap_pieces_excluded(self):
        spec = DomainSpec(2, 1.0, Trap(5.0, 1.0))
        assert not contains(spec, (4.5, 0.0))       # back wall
        assert not contains(spec, (5.5, 0.75))      # upper arm
        assert not contains(spec, (5.0, 0.75))      # interior seam
        assert contains(spec, (5.0, 0.25))          # notch back face

    def test_dimension_mismatch(self):
        spec = DomainSpec(2, 1.0, Ball((0.0, 0.0), 1.0))
        with pytest.raises(GeometryError):
            contains(spec, (1.0, 2.0, 3.0))

    def test_no_obstacle(self):
        spec = DomainSpec(3, 2.0, None)
        assert contains(spec, (0.0, 0.0, 0.0))

    def test_vectorized(self):
        spec = DomainSpec(2, 1.0, Ball((0.0, 0.0), 1.0))
        pts = np.array([[0.0, 0.0], [2.0, 0.0], [0.5, 0.5]])
        assert np.array_equal(contains(spec, pts), [False, True, False])


class TestSignedDistance:
    def test_ball(self):
        assert signed_distance(Ball((0.0, 0.0), 1.0), (2.0, 0.0)) == pytest.approx(1.0)

    def test_hypercube_deepest(self):
        a = 7.0
        assert signed_distance(Hypercube((a, 0.0), 1.0), (a, 0.0)) == pytest.approx(-1.0)

    def test_shell_midpoint(self):
        sd = signed_distance(Shell((0.0, 0.0), 1.0, 2.0), (1.5, 0.0))
        assert sd == pytest.approx(0.5)

    def test_trap_union_sign(self):
        t = Trap(5.0, 1.0)
        assert signed_distance(t, (4.5, 0.0)) < 0
        assert signed_distance(t, (5.5, 0.0)) > 0
        assert signed_distance(t, (3.0, 0.0)) == pytest.approx(1.0)


class TestProjection:
    def test_ball_radial(self):
        p = project_to_domain(Ball((0.0, 0.0), 2.0), (1.0, 0.0))
        assert np.allclose(p, (2.0, 0.0))

    def test_identity_on_domain(self):
        for ob in (Ball((0.0, 0.0), 1.0), Hypercube((0.0, 0.0), 1.0),
                   Trap(5.0, 1.0)):
            x = np.array([9.0, 9.0])
            assert np.array_equal(project_to_domain(ob, x), x)

    def test_hypercube_nearest_face(self):
        p = project_to_domain(Hypercube((5.0, 0.0), 1.0), (5.5, 0.5))
        assert np.allclose(p, (5.5, 1.0))
        # brute-force check: nothing on the boundary is closer
        best = min(
            np.hypot(5.5 - bx, 0.5 - by)
            for bx, by in _cube_boundary_points((5.0, 0.0), 1.0, 2001))
        assert np.hypot(0.0, 0.5) <= best + 1e-3

    def test_ball_center_ambiguous(self):
        with pytest.raises(ProjectionError):
            project_to_domain(Ball((1.0, 1.0), 1.0), (1.0, 1.0))

    def test_shell_projection(self):
        sh = Shell((0.0, 0.0), 1.0, 2.0)
        assert np.allclose(project_to_domain(sh, (3.0, 0.0)), (2.0, 0.0))
        assert np.allclose(project_to_domain(sh, (0.5, 0.0)), (1.0, 0.0))


def _cube_boundary_points(center, r, n):
    cx, cy = center
    ts = np.linspace(-r, r, n)
    for t in ts:
        yield cx + t, cy + r
        yield cx + t, cy - r
        yield cx + r, cy + t
        yield cx - r, cy + t


class TestInwardNormal:
    def test_ball_radial(self):
        n = inward_normal(Ball((0.0, 0.0), 1.0), (1.0, 0.0))
        assert np.allclose(n, (1.0, 0.0))

    def test_hypercube_face(self):
        n = inward_normal(Hypercube((0.0, 0.0), 1.0), (1.0, 0.5))
        assert np.allclose(n, (1.0, 0.0))

    def test_hypercube_corner_average(self):
        n = inward_normal(Hypercube((0.0, 0.0), 1.0), (1.0, 1.0))
        assert np.allclose(n, (math.sqrt(2) / 2, math.sqrt(2) / 2))

    def test_off_boundary_rejected(self):
        with pytest.raises(GeometryError):
            inward_normal(Ball((0.0, 0.0), 1.0), (1.5, 0.0))

    def test_shell_walls(self):
        sh = Shell((0.0, 0.0), 1.0, 2.0)
        assert np.allclose(inward_normal(sh, (1.0, 0.0)), (1.0, 0.0))
        assert np.allclose(inward_normal(sh, (2.0, 0.0)), (-1.0, 0.0))

    def test_trap_wall_points_into_domain(self):
        t = Trap(5.0, 1.0)
        n = inward_normal(t, (4.0, 0.0))
        assert np.allclose(n, (-1.0, 0.0))


class TestRescale:
    def test_ball_example(self):
        out = rescale_to_unit_lambda(DomainSpec(2, 4.0, Ball((1.0, 0.0), 0.5)))
        assert out.lam == 1.0
        assert out.obstacle == Ball((2.0, 0.0), 1.0)

    def test_identity_at_unit(self):
        spec = DomainSpec(2, 1.0, Hypercube((4.0, 0.0), 2.0))
        assert rescale_to_unit_lambda(spec) is spec

    def test_hypercube_example(self):
        out = rescale_to_unit_lambda(DomainSpec(2, 0.25, Hypercube((4.0, 0.0), 2.0)))
        assert out.obstacle == Hypercube((2.0, 0.0), 1.0)

    @given(hst.floats(0.01, 100.0), hst.floats(-5.0, 5.0), hst.floats(0.1, 3.0))
    def test_roundtrip(self, lam, c, r):
        spec = DomainSpec(2, lam, Ball((c, 0.0), r))
        unit = rescale_to_unit_lambda(spec)
        back = rescale(unit.obstacle, 1.0 / math.sqrt(lam))
        assert back.r == pytest.approx(r, rel=4e-16)
        assert back.center[0] == pytest.approx(c, rel=4e-16, abs=1e-18)


_obstacles = hst.sampled_from([
    Ball((0.0, 0.0), 1.0),
    Ball((3.0, -1.0), 2.0),
    Hypercube((4.0, 0.0), 2.0),
    Hypercube((-1.0, 2.0), 0.5),
    Shell((1.0, 1.0), 1.0, 2.5),
    Trap(5.0, 1.0),
    Trap(3.0, 0.5),
])


class TestProjectionProperties:
    @given(_obstacles, hst.floats(-8, 8), hst.floats(-8, 8))
    @settings(max_examples=300, deadline=None)
    def test_projection_lands_inside_and_is_idempotent(self, ob, x, y):
        p = np.asarray([x, y], dtype=float)
        try:
            q = project_to_domain(ob, p)
        except ProjectionError:
            return
        spec = DomainSpec(2, 1.0, ob)
        tol = default_boundary_tol(ob)
        assert signed_distance(ob, q) >= -tol
        assert contains(spec, q) or abs(signed_distance(ob, q)) <= tol
        q2 = project_to_domain(ob, q)
        assert np.linalg.norm(q2 - q) <= tol

    @given(_obstacles, hst.floats(-8, 8), hst.floats(-8, 8))
    @settings(max_examples=300, deadline=None)
    def test_projection_hits_boundary_from_outside(self, ob, x, y):
        p = np.asarray([x, y], dtype=float)
        spec = DomainSpec(2, 1.0, ob)
        if bool(contains(spec, p)):
            return
        try:
            q = project_to_domain(ob, p)
        except ProjectionError:
            return
        assert abs(signed_distance(ob, q)) <= default_boundary_tol(ob)

    @given(_obstacles, hst.floats(0.0, 2 * math.pi))
    @settings(max_examples=200, deadline=None)
    def test_normals_are_unit(self, ob, phi):
        c = np.asarray(ob.center, dtype=float)
        if isinstance(ob, (Ball, Shell)):
            u = np.array([math.cos(phi), math.sin(phi)])
            x = c + ob.r * u
        elif isinstance(ob, Hypercube):
            # walk the square boundary by arclength
            t = phi / (2 * math.pi) * 8 * ob.r
            side, s = int(t // (2 * ob.r)) % 4, t % (2 * ob.r) - ob.r
            x = c + {0: (ob.r, s), 1: (s, ob.r),
                     2: (-ob.r, s), 3: (s, -ob.r)}[side]
        else:
            x = np.array([ob.y - ob.alpha, (phi / math.pi - 1.0) * ob.alpha])
        n = inward_normal(ob, x)
        assert np.linalg.norm(n) == pytest.approx(1.0, abs=1e-12)
