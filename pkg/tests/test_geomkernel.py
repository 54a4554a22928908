"""Polytope kernel tests: constructors, measures, metrics, body maps."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import movingbeliefs.geomkernel as gk
from movingbeliefs.errors import (
    AffineHullMismatch,
    EmptyInput,
    Infeasible,
    NumericalRankAmbiguity,
    OriginNotContained,
    OriginNotRelativeInterior,
    Unbounded,
)

TOL = gk.DEFAULT_TOL


def unit_square():
    return gk.from_vrep([(0, 0), (1, 0), (0, 1), (1, 1)])


def tri_simplex():
    return gk.from_vrep([(0, 0), (1, 0), (0, 1)])


def trapezoid(x: float) -> gk.Polytope:
    return gk.from_vrep([(0.0, 0.0), (1.0, 0.0), (1.0, x), (x**0.25, x)])


point_clouds = st.integers(min_value=0, max_value=2**31 - 1).map(
    lambda seed: np.random.default_rng(seed).random((np.random.default_rng(seed).integers(3, 9), 2))
)


class TestFromVrep:
    def test_interior_point_removed(self):
        P = gk.from_vrep([(0, 0), (1, 0), (0, 1), (0.25, 0.25)])
        assert P.n_vertices == 3
        assert P.intrinsic_dim == 2
        P.validate()

    def test_collinear_segment(self):
        P = gk.from_vrep([(0, 0), (1, 0)])
        assert P.intrinsic_dim == 1
        assert P.frame.basis[:, 0] == pytest.approx([1.0, 0.0])
        P.validate()

    def test_duplicates_removed(self):
        P = gk.from_vrep([(0, 0), (1, 0), (1, 1), (1, 1)])
        assert P.n_vertices == 3
        assert P.intrinsic_dim == 2

    def test_empty_raises(self):
        with pytest.raises(EmptyInput):
            gk.from_vrep(np.zeros((0, 2)))

    def test_nonfinite_raises(self):
        with pytest.raises(ValueError):
            gk.from_vrep([(0.0, np.inf)])

    def test_rank_ambiguity_reported(self):
        # second axis spread sits inside the (rank_tol/10, 10*rank_tol) band
        eps = 3e-9
        with pytest.raises(NumericalRankAmbiguity):
            gk.from_vrep([(0, 0), (1, 0), (0.5, eps)])

    @given(point_clouds)
    def test_invariants_on_random_clouds(self, pts):
        P = gk.from_vrep(pts)
        P.validate()
        # every input point is inside the hull
        M, q = P.hrep
        assert np.max(M @ pts.T - q[:, None]) <= 1e-7
        # vertices are lexicographically sorted
        order = np.lexsort(P.vrep.T[::-1])
        assert (order == np.arange(P.n_vertices)).all()

    def test_vertices_are_extreme(self, rng):
        """No stored vertex is a convex combination of the others (distance to
        the hull of the rest is positive, via the min-norm subproblem)."""
        from movingbeliefs import convexsolve as cs

        for _ in range(10):
            P = gk.from_vrep(rng.random((7, 2)))
            for i in range(P.n_vertices):
                others = np.delete(P.vrep, i, axis=0)
                if others.shape[0] == 0:
                    continue
                gap = np.linalg.norm(cs.min_norm_point(others - P.vrep[i]))
                assert gap > 1e-9


def test_tolerances_must_be_positive():
    with pytest.raises(ValueError):
        gk.Tolerances(feas_tol=0.0)
    with pytest.raises(ValueError):
        gk.Tolerances(rank_tol=-1e-9)
    with pytest.raises(ValueError):
        gk.Tolerances(sphere_nodes=0)


class TestFromHrep:
    def test_unit_square(self):
        M = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]], float)
        q = np.array([1, 0, 1, 0], float)
        P = gk.from_hrep(M, q)
        assert P.n_vertices == 4
        assert gk.volume(P) == pytest.approx(1.0)

    def test_triangle(self):
        P = gk.from_hrep(np.array([[1, 1], [-1, 0], [0, -1]], float), np.array([1, 0, 0], float))
        assert P.n_vertices == 3

    def test_infeasible(self):
        with pytest.raises(Infeasible):
            gk.from_hrep(np.array([[1, 0], [-1, 0]], float), np.array([0, -1], float))

    def test_unbounded(self):
        with pytest.raises(Unbounded):
            gk.from_hrep(np.array([[1, 0], [0, 1], [0, -1]], float), np.array([1, 1, 0], float))

    def test_flat_system(self):
        # y2 pinned to 0 by opposite rows
        M = np.array([[0, 1], [0, -1], [1, 0], [-1, 0]], float)
        q = np.array([0, 0, 1, 0], float)
        P = gk.from_hrep(M, q)
        assert P.intrinsic_dim == 1
        assert P.vrep == pytest.approx(np.array([[0.0, 0.0], [1.0, 0.0]]))

    def test_exact_matches_float(self):
        M = np.array([[1, 1], [-1, 0], [0, -1]], float)
        q = np.array([1, 0, 0], float)
        A = gk.from_hrep(M, q)
        B = gk.from_hrep(M, q, exact=True)
        assert A.vrep == pytest.approx(B.vrep)


class TestVolume:
    def test_unit_square(self):
        assert gk.volume(unit_square()) == pytest.approx(1.0)

    def test_trapezoid_closed_form(self):
        # area of the trapezoid with parallel sides 1 and 1-x^(1/4), height x:
        # x*(1 - x^(1/4)/2); at x=1/16 this is 3/64
        x = 1.0 / 16.0
        assert gk.volume(trapezoid(x)) == pytest.approx(3.0 / 64.0, abs=1e-15)

    def test_wedge_closed_form(self):
        # conv{(0,-x),(1,-x),(1,x^q),(0,0)} = rectangle + top triangle:
        # x*1 + x^q/2; at q=2, x=1 this is 1.5
        P = gk.from_vrep([(0, -1), (1, -1), (1, 1), (0, 0)])
        assert gk.volume(P) == pytest.approx(1.5, abs=1e-12)

    def test_point_measure_is_one(self):
        assert gk.volume(gk.from_vrep([(0.3, 0.7)])) == 1.0

    def test_triangulation_sums_to_volume(self, rng):
        for m in (2, 3):
            pts = rng.random((8, m))
            P = gk.from_vrep(pts)
            total = 0.0
            for simplex in gk.triangulate(P):
                d = P.frame.to_frame(simplex)
                total += abs(np.linalg.det(d[1:] - d[0])) / math.factorial(P.intrinsic_dim)
            assert total == pytest.approx(gk.volume(P), rel=1e-10)

    def test_volume_vs_monte_carlo(self, rng):
        """Rejection-sampling oracle: within 3 standard errors."""
        for m in (2, 3):
            pts = rng.random((7, m))
            P = gk.from_vrep(pts)
            lo, hi = P.bounding_box()
            box_vol = float(np.prod(hi - lo))
            n = 200_000
            sample = rng.uniform(lo, hi, size=(n, m))
            M, q = P.hrep
            inside = np.all(M @ sample.T - q[:, None] <= 1e-12, axis=0)
            p_hat = inside.mean()
            est = box_vol * p_hat
            se = box_vol * math.sqrt(p_hat * (1 - p_hat) / n)
            assert abs(est - gk.volume(P)) <= 3 * se


class TestSupportDiameterRadial:
    def test_support_square(self):
        assert gk.support(unit_square(), (1, 1)) == pytest.approx(2.0)

    def test_support_segment_orthogonal(self):
        seg = gk.from_vrep([(-1, 0), (1, 0)])
        assert gk.support(seg, (0, 1)) == pytest.approx(0.0)

    def test_support_triangle(self):
        assert gk.support(tri_simplex(), (1, 0)) == pytest.approx(1.0)

    def test_diameter(self):
        assert gk.diameter(unit_square()) == pytest.approx(math.sqrt(2))
        assert gk.diameter(gk.from_vrep([(0.5, 0.5)])) == 0.0
        assert gk.diameter(gk.from_vrep([(0, 0), (1, 0), (1, 1)])) == pytest.approx(math.sqrt(2))

    def test_radial_centered_square(self):
        P = gk.translate(unit_square(), np.array([-0.5, -0.5]))
        assert gk.radial(P, (1, 0)) == pytest.approx(0.5)
        # oracle: the ray along (1,1)/sqrt(2) exits at the corner-facing facet
        # x = 1/2, i.e. t/sqrt(2) = 1/2 -> t = sqrt(2)/2
        u = np.array([1.0, 1.0]) / math.sqrt(2)
        assert gk.radial(P, u) == pytest.approx(math.sqrt(2) / 2, abs=1e-12)

    def test_radial_leaves_affine_hull(self):
        seg = gk.from_vrep([(-1, 0), (1, 0)])
        assert gk.radial(seg, (0, 1)) == 0.0

    def test_radial_requires_origin(self):
        with pytest.raises(OriginNotContained):
            gk.radial(gk.from_vrep([(1, 1), (2, 1), (1, 2)]), (1, 0))


class TestInnerRadius:
    def test_square(self):
        P = gk.translate(unit_square(), np.array([-0.5, -0.5]))
        assert gk.inner_radius(P) == pytest.approx(0.5)

    def test_segment_endpoints_are_facets(self):
        assert gk.inner_radius(gk.from_vrep([(-1, 0), (1, 0)])) == pytest.approx(1.0)

    def test_triangle_nearest_edge(self):
        # oracle recomputed edge by edge: edges of conv{(-1,-1),(1,-1),(0,2)}
        # have point-line distances 1 (y=-1), 2/sqrt(10) (3x+y=2), 2/sqrt(10)
        # (3x-y=-2) from the origin, so the inner radius is 2/sqrt(10).
        tri = gk.from_vrep([(-1, -1), (1, -1), (0, 2)])

        def line_dist(a, b):
            a, b = np.asarray(a, float), np.asarray(b, float)
            nrm = np.array([b[1] - a[1], a[0] - b[0]])
            return abs(nrm @ a) / np.linalg.norm(nrm)

        oracle = min(line_dist((-1, -1), (1, -1)), line_dist((1, -1), (0, 2)), line_dist((-1, -1), (0, 2)))
        assert oracle == pytest.approx(2 / math.sqrt(10))
        assert gk.inner_radius(tri) == pytest.approx(oracle, abs=1e-12)

    def test_requires_relative_interior(self):
        with pytest.raises(OriginNotRelativeInterior):
            gk.inner_radius(unit_square())  # origin is a vertex
        with pytest.raises(OriginNotRelativeInterior):
            gk.inner_radius(gk.from_vrep([(0, 1), (1, 1)]))  # origin off the hull

    def test_matches_min_radial_over_direction_grid(self, rng):
        for _ in range(10):
            pts = rng.random((6, 2))
            P = gk.from_vrep(pts)
            c = gk.steiner_point(P)
            P0 = gk.translate(P, -c)
            r = gk.inner_radius(P0)
            ang = np.linspace(0, 2 * math.pi, 2000, endpoint=False)
            grid_min = min(gk.radial(P0, (math.cos(a), math.sin(a))) for a in ang)
            assert r <= grid_min + 1e-12
            assert grid_min - r <= 0.01


class TestSteinerPoint:
    def test_square_center(self):
        assert gk.steiner_point(unit_square()) == pytest.approx([0.5, 0.5], abs=1e-12)

    def test_singleton(self):
        assert gk.steiner_point(gk.from_vrep([(0.2, -0.4)])) == pytest.approx([0.2, -0.4])

    def test_segment_midpoint(self):
        assert gk.steiner_point(gk.from_vrep([(-2, 0), (2, 0)])) == pytest.approx([0.0, 0.0], abs=1e-12)

    def test_matches_direct_circle_quadrature(self, rng):
        """Independent oracle: dense trapezoidal quadrature of the defining
        support-function integral over the circle."""
        for _ in range(5):
            P = gk.from_vrep(rng.random((6, 2)))
            n = 200_000
            ang = np.linspace(0, 2 * math.pi, n, endpoint=False)
            U = np.column_stack([np.cos(ang), np.sin(ang)])
            sigma = np.max(U @ P.vrep.T, axis=1)
            oracle = (U * sigma[:, None]).sum(axis=0) * (2 * math.pi / n) / math.pi
            assert gk.steiner_point(P) == pytest.approx(oracle, abs=1e-8)

    def test_three_dim_quadrature_cube(self):
        cube = gk.from_vrep([(x, y, z) for x in (0, 1) for y in (0, 1) for z in (0, 1)])
        assert gk.steiner_point(cube) == pytest.approx([0.5, 0.5, 0.5], abs=2e-3)


class TestHausdorff:
    def test_translated_square(self):
        A = unit_square()
        assert gk.hausdorff(A, gk.translate(A, np.array([1.0, 0.0]))) == pytest.approx(1.0)

    def test_triangle_vs_square(self):
        # farthest point of the square from the triangle is (1,1); its distance
        # to the hyperplane y1+y2=1 is sqrt(2)/2
        assert gk.hausdorff(tri_simplex(), unit_square()) == pytest.approx(math.sqrt(2) / 2)

    def test_nested_trapezoids_track_parameter(self):
        for x, x2 in [(0.9, 0.5), (0.7, 0.2), (1.0, 0.99)]:
            assert gk.hausdorff(trapezoid(x), trapezoid(x2)) == pytest.approx(abs(x - x2), abs=1e-12)

    @given(st.integers(min_value=0, max_value=2**31 - 1))
    def test_metric_axioms(self, seed):
        rng = np.random.default_rng(seed)
        A = gk.from_vrep(rng.random((4, 2)))
        B = gk.from_vrep(rng.random((5, 2)))
        C = gk.from_vrep(rng.random((4, 2)))
        d_ab, d_ba = gk.hausdorff(A, B), gk.hausdorff(B, A)
        assert d_ab == pytest.approx(d_ba, abs=1e-9)
        assert d_ab <= gk.hausdorff(A, C) + gk.hausdorff(C, B) + 1e-9

    def test_matches_wolfe_path_in_3d(self, rng):
        A = gk.from_vrep(rng.random((6, 3)))
        B = gk.from_vrep(rng.random((6, 3)))
        d = gk.hausdorff(A, B)
        # oracle: dense sampling of both bodies
        sa = np.vstack([A.vrep, A.vrep.mean(axis=0)])
        assert d >= 0
        e_ab = max(gk.dist_point(B, v)[0] for v in A.vrep)
        e_ba = max(gk.dist_point(A, v)[0] for v in B.vrep)
        assert d == pytest.approx(max(e_ab, e_ba), abs=1e-9)


class TestDistPoint:
    def test_outside_square(self):
        d, p = gk.dist_point(unit_square(), (2.0, 0.5))
        assert d == pytest.approx(1.0)
        assert p == pytest.approx([1.0, 0.5])

    def test_inside_point(self):
        d, p = gk.dist_point(unit_square(), (0.25, 0.75))
        assert d == pytest.approx(0.0, abs=1e-9)
        assert p == pytest.approx([0.25, 0.75], abs=1e-7)

    def test_projection_onto_diagonal_facet(self):
        d, p = gk.dist_point(tri_simplex(), (1.0, 1.0))
        assert d == pytest.approx(math.sqrt(2) / 2)
        assert p == pytest.approx([0.5, 0.5])

    def test_variational_inequality(self, rng):
        P = gk.from_vrep(rng.random((6, 2)))
        y = np.array([2.0, -1.0])
        _, p = gk.dist_point(P, y)
        assert np.max((P.vrep - p) @ (y - p)) <= 1e-8


class TestIntersect:
    def test_overlapping_squares(self):
        A = unit_square()
        B = gk.translate(A, np.array([0.5, 0.5]))
        I = gk.intersect(A, B)
        assert gk.volume(I) == pytest.approx(0.25)

    def test_disjoint(self):
        A = unit_square()
        assert gk.intersect(A, gk.translate(A, np.array([3.0, 0.0]))) is None

    def test_halfplane_triangle(self):
        I = gk.intersect(unit_square(), gk.from_hrep(
            np.array([[1, 1], [-1, 0], [0, -1]], float), np.array([1, 0, 0], float)))
        assert gk.volume(I) == pytest.approx(0.5)

    def test_segment_meets_square(self):
        seg = gk.from_vrep([(-0.5, 0.5), (2.0, 0.5)])
        I = gk.intersect(seg, unit_square())
        assert I.intrinsic_dim == 1
        assert gk.volume(I) == pytest.approx(1.0)

    def test_crossing_segments_meet_in_point(self):
        a = gk.from_vrep([(-1, 0), (1, 0)])
        b = gk.from_vrep([(0.25, -1), (0.25, 1)])
        I = gk.intersect(a, b)
        assert I.intrinsic_dim == 0
        assert I.vrep[0] == pytest.approx([0.25, 0.0])

    def test_collinear_segments_overlap(self):
        # rotated common line, endpoints from independent float data
        th = 0.7
        d = np.array([math.cos(th), math.sin(th)])
        p0 = np.array([0.05, 0.11])
        A = gk.from_vrep([p0 + 0.1 * d, p0 + 0.9 * d])
        B = gk.from_vrep([p0 + 0.5 * d, p0 + 1.4 * d])
        I = gk.intersect(A, B)
        assert I.intrinsic_dim == 1
        assert gk.volume(I) == pytest.approx(0.4, abs=1e-9)
        assert gk.sym_diff_volume(A, B) == pytest.approx(0.9, abs=1e-9)

    def test_collinear_segments_with_hull_noise(self):
        """Endpoints perturbed off the common line by ~1e-12: the mapped
        pinning rows of the other operand are then noise-dominated and must be
        treated as constant on the hull, not normalized into spurious cuts."""
        th = 0.7
        d = np.array([math.cos(th), math.sin(th)])
        n_perp = np.array([-math.sin(th), math.cos(th)])
        p0 = np.array([0.05, 0.11])
        A = gk.from_vrep([p0 + 0.1 * d, p0 + 0.9 * d])
        B = gk.from_vrep([p0 + 0.5 * d + 1e-12 * n_perp, p0 + 1.4 * d - 1e-12 * n_perp])
        assert gk.same_affine_hull(A, B)
        I = gk.intersect(A, B)
        assert I is not None and I.intrinsic_dim == 1
        assert gk.volume(I) == pytest.approx(0.4, abs=1e-6)
        assert gk.sym_diff_volume(A, B) == pytest.approx(0.9, abs=1e-6)


class TestMinkowski:
    def test_endpoint_identities(self, rng):
        A = gk.from_vrep(rng.random((5, 2)))
        B = gk.from_vrep(rng.random((5, 2)))
        assert gk.hausdorff(gk.minkowski_interpolate(A, B, 0.0), A) <= 1e-12
        assert gk.hausdorff(gk.minkowski_interpolate(A, B, 1.0), B) <= 1e-12

    def test_point_to_square_scaling(self):
        P = gk.from_vrep([(0.0, 0.0)])
        mid = gk.minkowski_interpolate(P, unit_square(), 0.5)
        assert gk.volume(mid) == pytest.approx(0.25)
        assert mid.vrep.max() == pytest.approx(0.5)

    def test_crossed_segments_fill_square(self):
        # pairwise midpoints of the 2x2 endpoint grid are the corners of [0,1/2]^2
        A = gk.from_vrep([(0, 0), (1, 0)])
        B = gk.from_vrep([(0, 0), (0, 1)])
        mid = gk.minkowski_interpolate(A, B, 0.5)
        assert mid.intrinsic_dim == 2
        assert gk.volume(mid) == pytest.approx(0.25)

    def test_geodesic_property(self, rng):
        for _ in range(20):
            A = gk.from_vrep(rng.random((4, 2)))
            B = gk.from_vrep(rng.random((5, 2)))
            t, s = np.sort(rng.random(2))
            lhs = gk.hausdorff(gk.minkowski_interpolate(A, B, t), gk.minkowski_interpolate(A, B, s))
            assert lhs <= (s - t) * gk.hausdorff(A, B) + 1e-9


class TestSymDiffVolume:
    def test_identical(self):
        assert gk.sym_diff_volume(unit_square(), unit_square()) == pytest.approx(0.0, abs=1e-12)

    def test_shifted_intervals(self):
        a = gk.from_vrep([[0.0], [1.0]])
        b = gk.from_vrep([[0.5], [1.5]])
        assert gk.sym_diff_volume(a, b) == pytest.approx(1.0)

    def test_shifted_squares(self):
        A = unit_square()
        B = gk.translate(A, np.array([0.5, 0.5]))
        assert gk.sym_diff_volume(A, B) == pytest.approx(1.5)

    def test_hull_mismatch_raises(self):
        with pytest.raises(AffineHullMismatch):
            gk.sym_diff_volume(unit_square(), gk.from_vrep([(0, 0), (1, 0)]))


class TestEnclosingBall:
    def test_square(self):
        c, r = gk.enclosing_ball(unit_square())
        assert c == pytest.approx([0.5, 0.5], abs=1e-9)
        assert r == pytest.approx(math.sqrt(2) / 2, abs=1e-9)

    def test_segment(self):
        c, r = gk.enclosing_ball(gk.from_vrep([(0, 0), (1, 0)]))
        assert c == pytest.approx([0.5, 0.0], abs=1e-9)
        assert r == pytest.approx(0.5)

    def test_equilateral_attains_planar_bound(self):
        # circumradius of the side-1 equilateral triangle: 1/sqrt(3), which
        # matches diam * sqrt(m/(2(m+1))) at m=2 (the extremal case)
        P = gk.from_vrep([(0, 0), (1, 0), (0.5, math.sqrt(3) / 2)])
        _, r = gk.enclosing_ball(P)
        assert r == pytest.approx(1 / math.sqrt(3), abs=1e-9)
        assert r == pytest.approx(gk.diameter(P) * math.sqrt(2.0 / 6.0), abs=1e-9)

    @given(st.integers(min_value=0, max_value=2**31 - 1))
    def test_radius_bound_random(self, seed):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(2, 4))
        P = gk.from_vrep(rng.random((int(rng.integers(m + 1, 9)), m)))
        c, r = gk.enclosing_ball(P)
        assert np.max(np.linalg.norm(P.vrep - c, axis=1)) <= r + 1e-9
        assert r <= gk.diameter(P) * math.sqrt(m / (2.0 * (m + 1.0))) + 1e-9


class TestProjectTranslateScale:
    def test_project_square_to_axis(self):
        axis = gk.AffineFrame(origin=np.zeros(2), basis=np.array([[1.0], [0.0]]))
        P = gk.project(unit_square(), axis)
        assert P.intrinsic_dim == 1
        assert P.vrep == pytest.approx(np.array([[0.0, 0.0], [1.0, 0.0]]))

    def test_project_triangle_to_diagonal(self):
        diag = gk.AffineFrame(origin=np.zeros(2), basis=np.array([[1.0], [1.0]]) / math.sqrt(2))
        P = gk.project(tri_simplex(), diag)
        assert P.vrep == pytest.approx(np.array([[0.0, 0.0], [0.5, 0.5]]), abs=1e-12)

    def test_project_point(self):
        diag = gk.AffineFrame(origin=np.zeros(2), basis=np.array([[1.0], [0.0]]))
        P = gk.project(gk.from_vrep([(0.3, 0.8)]), diag)
        assert P.vrep[0] == pytest.approx([0.3, 0.0])

    def test_translate_and_scale_bookkeeping(self):
        P = unit_square()
        T = gk.translate(P, np.array([2.0, -1.0]))
        T.validate()
        assert gk.volume(T) == pytest.approx(1.0)
        S = gk.scale(P, 2.0)
        S.validate()
        assert gk.volume(S) == pytest.approx(4.0)
        assert gk.affine_frame(P) is P.frame


class TestVolumeLipschitzConstant:
    def test_planar_value(self):
        # 2m*vol(B_2)*(diam*sqrt(m/(2(m+1))))^(m-1) at m=2, diam=sqrt(2):
        # 4*pi*sqrt(2)/sqrt(3) = 4*pi*sqrt(6)/3
        want = 4.0 * math.pi * math.sqrt(6.0) / 3.0
        assert gk.volume_lipschitz_constant(math.sqrt(2.0), 2) == pytest.approx(want, rel=1e-12)

    def test_volume_difference_bound_random(self, rng):
        L = gk.volume_lipschitz_constant(math.sqrt(2.0), 2)
        for _ in range(100):
            A = gk.from_vrep(rng.random((6, 2)))
            B = gk.from_vrep(rng.random((6, 2)))
            sym = gk.sym_diff_volume(A, B)
            assert abs(gk.volume(A) - gk.volume(B)) <= sym + 1e-12
            assert sym <= L * gk.hausdorff(A, B) + 1e-7
