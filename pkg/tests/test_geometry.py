"""Closed-form spherical-partition mathematics against symbolic values,
symmetry, and the quadrature/finite-difference oracles."""

import math
from itertools import permutations

import numpy as np
import pytest
from mpmath import mp, mpf

from propeller import geometry as geo
from propeller import oracle
from propeller.geometry import (EdgeTriple, NonTriangleError, PartitionData,
                                cos_dihedral, fourth_vertex, moment)
from propeller.rigor import EPS, DomainError, GridAngle, NotWellDefined

T1 = math.acos(-1.0 / 3.0)       # equilateral critical angle (regular simplex)
T2 = 1.5379684120790425          # second equilateral critical angle
RIGHT = math.pi / 2


def equilateral(theta: float) -> EdgeTriple:
    return EdgeTriple(theta, theta, theta)


def random_unit(rng) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def random_oriented_triple(rng, min_det=0.1):
    while True:
        v1, v2, v3 = (random_unit(rng) for _ in range(3))
        if np.linalg.det(np.stack([v1, v2, v3])) > min_det:
            return v1, v2, v3


class TestLambda:
    def test_octant(self):
        assert geo.lambda_(equilateral(RIGHT)) == \
            pytest.approx(12 / math.pi ** 2, rel=1e-14)

    def test_simplex_symbolic(self):
        # at equal edges lambda = s^2 (3 + 6 cos t); cos t = -1/3 kills the
        # cross part entirely
        s = math.sin(T1) / T1
        assert geo.lambda_(equilateral(T1)) == pytest.approx(s * s, rel=1e-13)

    def test_permutation_symmetry(self):
        e = (1.3, 1.7, 2.0)
        vals = {geo.lambda_(EdgeTriple(*p)) for p in permutations(e)}
        assert max(vals) - min(vals) < 1e-14

    def test_grouping_matches_budget_path(self):
        g = GridAngle(6082, 2)
        lam_err = geo.lambda_err(g, g, g)
        t = g.to_float()
        plain = geo.lambda_(equilateral(t))
        # same formula, different kernels: values agree to budget size
        assert abs(lam_err.value - plain) < 1e-12


class TestGamma:
    def test_equilateral_symbolic(self):
        s = math.sin(T1) / T1
        for i in (1, 2, 3):
            assert geo.gamma_i(equilateral(T1), i) == \
                pytest.approx(s * (1 + 2 * math.cos(T1)), rel=1e-13)

    def test_octant(self):
        for i in (1, 2, 3):
            assert geo.gamma_i(equilateral(RIGHT), i) == \
                pytest.approx(2 / math.pi, rel=1e-14)

    def test_ratio_is_third_at_simplex(self):
        e = equilateral(T1)
        ratio = geo.gamma_i(e, 2) / math.sqrt(geo.lambda_(e))
        assert ratio == pytest.approx(1 / 3, rel=1e-12)

    def test_index_validation(self):
        with pytest.raises(ValueError):
            geo.gamma_i(equilateral(1.0), 4)


class TestCosDihedral:
    def test_octant_right_angles(self):
        assert cos_dihedral(RIGHT, RIGHT, RIGHT) == pytest.approx(0, abs=1e-15)

    def test_simplex_is_minus_half(self):
        assert cos_dihedral(T1, T1, T1) == pytest.approx(-0.5, rel=1e-13)

    def test_degenerate_edge(self):
        with pytest.raises(DomainError):
            cos_dihedral(math.pi, 1.0, 1.0)


class TestHSystem:
    def test_zero_at_simplex(self):
        h = geo.H_system(equilateral(T1))
        assert max(abs(v) for v in h) < 1e-12

    def test_zero_at_second_candidate(self):
        h = geo.H_system(equilateral(T2))
        assert max(abs(v) for v in h) < 1e-9

    def test_components_equal_on_diagonal(self):
        for theta in (0.5, 1.0, 1.3, 1.9, 2.0):
            h = geo.H_system(equilateral(theta))
            assert h[0] == h[1] == h[2]  # identical float expressions

    def test_nonzero_off_candidates(self):
        h = geo.H_system(equilateral(1.3))
        assert abs(h[0]) > 0.4

    def test_not_well_defined_radicand(self):
        # tiny flank edges with a large opposite edge push the radicand
        # negative
        with pytest.raises((NotWellDefined, DomainError)):
            geo.H_system(EdgeTriple(0.2, 0.2, 2.8))


class TestObjective:
    def test_sum_squares(self):
        assert geo.F_sum_squares((T1,) * 6) == \
            pytest.approx(6 * T1 ** 2, rel=1e-15)
        assert geo.F_sum_squares((0.0,) * 6) == 0.0
        with pytest.raises(ValueError):
            geo.F_sum_squares((1.0, 2.0, 3.0))

    def test_simplex_value(self):
        assert geo.F_sum_squares((T1,) * 6) == pytest.approx(21.9031, abs=1e-3)

    def test_F0_paper_values(self):
        assert geo.F0(equilateral(T1)) == pytest.approx(21.9031, abs=1e-3)
        assert geo.F0(equilateral(1.53796841207904)) == \
            pytest.approx(21.7391, abs=1e-3)

    def test_F0_symmetric(self):
        e = (1.4, 1.8, 2.1)
        vals = [geo.F0(EdgeTriple(*p)) for p in permutations(e)]
        assert max(vals) - min(vals) < 1e-12

    def test_F0_strict_rejects_non_triangle(self):
        with pytest.raises(NonTriangleError):
            geo.F0(EdgeTriple(0.3, 0.3, 1.0))


class TestMoment:
    def test_octant(self):
        E = np.eye(3)
        z = moment(E[0], E[1], E[2])
        assert np.allclose(z, math.pi / 4, atol=1e-14)

    def test_inner_product_identity(self):
        # <z4, v1> = theta23 det(v1,v2,v3) / (2 sin theta23), rotated to
        # every vertex
        rng = np.random.default_rng(42)
        for _ in range(1000):
            v1, v2, v3 = random_oriented_triple(rng)
            z = moment(v1, v2, v3)
            for (a, b, c) in ((v1, v2, v3), (v2, v3, v1), (v3, v1, v2)):
                t_bc = math.acos(np.clip(np.dot(b, c), -1, 1))
                expect = t_bc * np.linalg.det(np.stack([a, b, c])) \
                    / (2 * math.sin(t_bc))
                got = float(np.dot(z, a))
                assert abs(got - expect) <= 1e-10 * max(1.0, abs(expect))

    def test_orientation_rejected(self):
        E = np.eye(3)
        with pytest.raises(DomainError):
            moment(E[1], E[0], E[2])

    def test_against_quadrature(self):
        rng = np.random.default_rng(7)
        spec = oracle.QuadratureSpec(level=6)
        done = 0
        while done < 25:
            v1, v2, v3 = random_oriented_triple(rng, min_det=0.25)
            edges = [math.acos(np.clip(np.dot(a, b), -1, 1))
                     for a, b in ((v1, v2), (v2, v3), (v3, v1))]
            if not all(0.3 <= t <= 2.0 for t in edges):
                continue
            z = moment(v1, v2, v3)
            q = oracle.quad_moment(v1, v2, v3, spec)
            assert np.linalg.norm(z - q) < 1e-5
            done += 1


class TestFourthVertex:
    def test_regular_simplex(self):
        # three regular-simplex vertices determine the fourth
        v = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]],
                     float) / math.sqrt(3)
        if np.linalg.det(v[:3]) < 0:
            v[[1, 2]] = v[[2, 1]]
        v4 = fourth_vertex(v[0], v[1], v[2])
        for i in range(3):
            assert np.dot(v[i], v4) == pytest.approx(-1 / 3, abs=1e-12)

    def test_octant(self):
        E = np.eye(3)
        v4 = fourth_vertex(E[0], E[1], E[2])
        assert np.allclose(v4, -1 / math.sqrt(3), atol=1e-14)

    def test_unit_norm_and_gamma_identity(self):
        rng = np.random.default_rng(9)
        for _ in range(1000):
            v1, v2, v3 = random_oriented_triple(rng)
            v4 = fourth_vertex(v1, v2, v3)
            assert abs(np.linalg.norm(v4) - 1.0) < 1e-12
            t12 = math.acos(np.clip(np.dot(v1, v2), -1, 1))
            t13 = math.acos(np.clip(np.dot(v1, v3), -1, 1))
            t23 = math.acos(np.clip(np.dot(v2, v3), -1, 1))
            e = EdgeTriple(t12, t13, t23)
            sq = math.sqrt(geo.lambda_(e))
            for i, vi in ((1, v1), (2, v2), (3, v3)):
                expect = -geo.gamma_i(e, i) / sq
                assert abs(np.dot(vi, v4) - expect) <= \
                    1e-10 * max(1.0, abs(expect))


class TestOppositeEdges:
    def test_equal_edges(self):
        assert geo.opposite_edge_residual((1.3,) * 6) == (0.0, 0.0)

    def test_simplex_configuration(self):
        r1, r2 = geo.opposite_edge_residual((T1,) * 6)
        assert abs(r1) < 1e-12 and abs(r2) < 1e-12

    def test_generic_nonzero(self):
        r1, r2 = geo.opposite_edge_residual((1.3, 1.4, 1.5, 1.6, 1.7, 1.8))
        assert abs(r1) > 1e-3 or abs(r2) > 1e-3


class TestExpInverse:
    def test_quarter_turn(self):
        E = np.eye(3)
        out = geo.exp_inverse(E[0], E[1])
        assert np.allclose(out, [0, math.pi / 2, 0], atol=1e-15)

    def test_tangency_and_length(self):
        rng = np.random.default_rng(31)
        for _ in range(500):
            v1, vj = random_unit(rng), random_unit(rng)
            if abs(np.dot(v1, vj)) > 0.999:
                continue
            out = geo.exp_inverse(v1, vj)
            assert abs(np.dot(out, v1)) < 1e-12
            assert abs(np.linalg.norm(out)
                       - math.acos(np.dot(v1, vj))) < 1e-12

    def test_antipodal_rejected(self):
        E = np.eye(3)
        with pytest.raises(DomainError):
            geo.exp_inverse(E[0], -E[0])


def _equilateral_partition(theta: float) -> PartitionData:
    """Three vertices with pairwise angle theta on a cap, plus the implied
    fourth."""
    ca2 = (2 * math.cos(theta) + 1) / 3
    alpha = math.acos(math.sqrt(ca2))
    vs = []
    for k in range(3):
        phi = 2 * math.pi * k / 3
        vs.append([math.sin(alpha) * math.cos(phi),
                   math.sin(alpha) * math.sin(phi),
                   math.cos(alpha)])
    v = np.array(vs)
    if np.linalg.det(v) < 0:
        v[[1, 2]] = v[[2, 1]]
    v4 = fourth_vertex(v[0], v[1], v[2])
    return PartitionData(np.vstack([v, v4]))


class TestStationarity:
    def test_regular_simplex_critical(self):
        p = _equilateral_partition(T1)
        for i in (1, 2, 3, 4):
            assert np.linalg.norm(geo.stationarity_residual(p, i)) < 1e-12

    def test_second_candidate_critical(self):
        p = _equilateral_partition(T2)
        for i in (1, 2, 3, 4):
            assert np.linalg.norm(geo.stationarity_residual(p, i)) < 1e-8

    def test_sine_balance_at_critical_points(self):
        # theta13 sin(angle at v1 between 12,13) = theta14 sin(angle
        # between 12,14)
        for theta in (T1, T2):
            p = _equilateral_partition(theta)
            v1, v2, v3, v4 = p.vertices
            t13, t14 = p.edge(1, 3), p.edge(1, 4)
            e2 = geo.exp_inverse(v1, v2)
            e3 = geo.exp_inverse(v1, v3)
            e4 = geo.exp_inverse(v1, v4)

            def sin_between(a, b):
                c = np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b))
                return math.sqrt(max(0.0, 1 - c * c))

            lhs = t13 * sin_between(e2, e3)
            rhs = t14 * sin_between(e2, e4)
            assert abs(lhs - rhs) < 1e-8

    def test_perturbed_not_critical(self):
        p = _equilateral_partition(T1)
        v = p.vertices.copy()
        v[0] = v[0] + np.array([0.02, 0.0, 0.0])
        v[0] /= np.linalg.norm(v[0])
        p2 = PartitionData(v)
        assert np.linalg.norm(geo.stationarity_residual(p2, 2)) > 1e-4


class TestModulusH1:
    def test_vanishes_at_zero_radius(self):
        e = equilateral(1.6)
        vals = [geo.modulus_H1(d, e, 0.0329) for d in (1e-3, 1e-5, 1e-7)]
        assert vals[0] > vals[1] > vals[2] > 0
        assert vals[2] < 1e-4

    def test_monotone_in_delta(self):
        e = equilateral(1.6)
        deltas = np.linspace(1e-6, 9e-3, 50)
        vals = [geo.modulus_H1(float(d), e, 0.2) for d in deltas]
        assert all(a <= b for a, b in zip(vals, vals[1:]))

    def test_inapplicable_when_eta_too_small(self):
        with pytest.raises(NotWellDefined):
            geo.modulus_H1(3e-3, equilateral(1.6), 0.0329)

    def test_dominates_sampled_differences(self):
        e = equilateral(1.6)
        eta = geo.lambda_(e) - 1e-6
        delta = 1e-4
        bound = geo.modulus_H1(delta, e, eta)
        h0 = geo.h_component(e, 1)
        rng = np.random.default_rng(17)
        worst = 0.0
        for _ in range(10 ** 4):
            q = np.array(e.as_tuple()) + rng.uniform(-delta, delta, 3)
            worst = max(worst,
                        abs(geo.h_component(EdgeTriple(*q), 1) - h0))
        assert worst <= bound


class TestGradF0:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(12)
        done = 0
        while done < 100:
            p = rng.uniform(1.2, 2.0, 3)
            try:
                g_an = geo.grad_F0(EdgeTriple(*p))
            except (NonTriangleError, DomainError):
                continue
            g_fd = oracle.fd_gradient(
                lambda x, y, z: geo.F0(EdgeTriple(x, y, z)), p, 1e-6)
            rel = np.abs(g_an - g_fd) / np.maximum(np.abs(g_an), 1.0)
            assert rel.max() < 1e-4
            done += 1

    def test_bound_dominates_partials(self):
        rng = np.random.default_rng(13)
        done = 0
        while done < 100:
            p = rng.uniform(1.2, 2.0, 3)
            try:
                g_an = geo.grad_F0(EdgeTriple(*p))
            except (NonTriangleError, DomainError):
                continue
            for var in (1, 2, 3):
                bound = geo.grad_F0_bound(1e-6, EdgeTriple(*p), var)
                assert abs(g_an[var - 1]) <= bound
            done += 1

    def test_norms_at_candidates(self):
        assert np.linalg.norm(geo.grad_F0(equilateral(T1))) < 13.6
        assert np.linalg.norm(geo.grad_F0(equilateral(T2))) < 9.7


class TestBudgetedPath:
    """The budget-tracked evaluations enclose high-precision truth and
    stay within the constants the classifier bakes in."""

    def _hp_lambda(self, q):
        t = mp.pi * mpf(q.numerator) / q.denominator
        s = mp.sin(t) / t
        c = mp.cos(t)
        return 3 * s * s + 6 * s * s * c

    def test_lambda_budget_sound_and_small(self):
        for a, d in ((6082, 2), (4895, 2), (5000, 2), (413, 1), (64, 0)):
            g = GridAngle(a, d)
            lam = geo.lambda_err(g, g, g)
            true = self._hp_lambda(g.fraction)
            assert abs(mpf(lam.value) - true) <= lam.worst_abs
            assert lam.mult_budget * 3 + lam.abs_budget <= 20000

    def test_gamma_budget_sound_and_small(self):
        for a, d in ((6082, 2), (4895, 2), (413, 1)):
            g = GridAngle(a, d)
            gam = geo.gamma_err(g, g, g, 1)
            t = mp.pi * mpf(a) / g.denominator
            s = mp.sin(t) / t
            true = s * (1 + 2 * mp.cos(t))
            assert abs(mpf(gam.value) - true) <= gam.worst_abs
            assert gam.mult_budget + gam.abs_budget <= 3000

    def test_h_component_budget_sound(self):
        for a, d in ((6082, 2), (5600, 2), (4895, 2)):
            g = GridAngle(a, d)
            h = geo.h_component_err(g, g, g, 1)
            t = mp.pi * mpf(a) / g.denominator
            c = mp.cos(t)
            s = mp.sin(t)
            lam = 3 * (s / t) ** 2 + 6 * (s / t) ** 2 * c
            gamma = (s / t) * (1 + 2 * c)
            cd = (c - c * c) / (s * s)
            rad = 2 * t * t + 2 * t * t * cd
            true = mp.sqrt(lam) * mp.cos(mp.sqrt(rad)) + gamma
            assert abs(mpf(h.value) - true) <= h.worst_abs
