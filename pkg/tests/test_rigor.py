"""Budgeted arithmetic: kernels, budget laws, exact grid angles."""

import math
from fractions import Fraction

import numpy as np
import pytest
from mpmath import mp, mpf

from propeller.rigor import (EPS, BudgetOverflowError, DomainError, ErrValue,
                             GridAngle, NotWellDefined, compose_error,
                             cos_general, cos_grid, newton_sqrt, sin_grid,
                             taylor_sin, ver_cos, ver_sin, ver_sqrt)

mp.dps = 60


def test_eps_value():
    assert EPS == 3 * 2.0 ** -52


class TestComposeError:
    def test_single_op(self):
        assert compose_error(1) == 1 + 3 * 2.0 ** -52

    def test_ten_ops(self):
        assert compose_error(10) == 1 + 30 * 2.0 ** -52

    def test_limit(self):
        assert compose_error(30000) == 1 + 30000 * EPS
        with pytest.raises(BudgetOverflowError):
            compose_error(30001)
        with pytest.raises(BudgetOverflowError):
            compose_error(0)

    def test_monotone(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            n1, n2 = sorted(rng.integers(1, 30001, 2).tolist())
            assert compose_error(n1) <= compose_error(n2)


class TestTaylorKernels:
    def test_sin_quarter_turn(self):
        assert taylor_sin(math.pi / 2) == 1.0

    def test_sin_dense_against_oracle(self):
        # the acceptance suite samples 1e6 points; keep this one fast
        xs = np.linspace(0.0, math.pi / 2, 20001)
        vals = taylor_sin(xs)
        for x, v in zip(xs[1::997], vals[1::997]):
            true = mp.sin(mpf(float(x)))
            assert abs(mpf(float(v)) - true) <= 250 * EPS * true

    def test_scalar_matches_array(self):
        xs = np.linspace(0.0, math.pi / 2, 257)
        arr = taylor_sin(xs)
        for i in (0, 17, 101, 256):
            assert taylor_sin(float(xs[i])) == arr[i]

    def test_newton_sqrt_exact_squares(self):
        for v in (0.0, 1.0, 4.0, 9.0, 1024.0):
            assert newton_sqrt(v) == math.sqrt(v)

    def test_newton_sqrt_within_one_eps(self):
        rng = np.random.default_rng(5)
        xs = np.concatenate([rng.uniform(1e-8, 1e4, 4000),
                             rng.uniform(0.0, 2.0, 4000)])
        got = newton_sqrt(xs)
        ref = np.sqrt(xs)
        ok = np.abs(got - ref) <= EPS * ref
        assert ok.all()

    def test_cos_general_quadrants(self):
        ys = np.linspace(0.0, 2 * math.pi, 5001)
        got = cos_general(ys)
        assert np.max(np.abs(got - np.cos(ys))) < 1e-13


class TestGridTrig:
    def test_sin_grid_reflection_is_exact(self):
        # sin(pi*a/den) must equal sin(pi*(den-a)/den) bit for bit
        den = 10 ** 4
        a = np.arange(0, den + 1, 97)
        assert np.array_equal(sin_grid(a, den), sin_grid(den - a, den))

    def test_cos_grid_matches_oracle(self):
        den = 10 ** 4
        rng = np.random.default_rng(3)
        for a in rng.integers(0, den + 1, 200).tolist():
            true = mp.cos(mp.pi * a / den)
            assert abs(mpf(cos_grid(a, den)) - true) <= 600 * EPS

    def test_cos_is_sine_of_complement_bit_for_bit(self):
        # with the complement formed exactly, cosine IS a sine evaluation
        den = 10 ** 4
        for a in (0, 1, 1234, 4999, 5000, 5001, 9999, 10 ** 4):
            h = den - 2 * a
            expect = math.copysign(1.0, h) * sin_grid(abs(h), 2 * den) \
                if h != 0 else 0.0
            assert cos_grid(a, den) == expect


class TestGridAngle:
    def test_bounds(self):
        GridAngle(0, 0)
        GridAngle(100, 0)
        with pytest.raises(ValueError):
            GridAngle(101, 0)
        with pytest.raises(ValueError):
            GridAngle(-1, 0)

    def test_float_image(self):
        g = GridAngle(50, 0)
        assert g.to_float() == (50 / 100) * math.pi
        assert g.reflect().numerator == 50

    def test_exact_comparison_matches_rationals(self):
        rng = np.random.default_rng(19)
        for _ in range(10 ** 4):
            d1, d2 = rng.integers(0, 4, 2).tolist()
            a1 = int(rng.integers(0, 10 ** (d1 + 2) + 1))
            a2 = int(rng.integers(0, 10 ** (d2 + 2) + 1))
            g1, g2 = GridAngle(a1, d1), GridAngle(a2, d2)
            assert (g1 < g2) == (Fraction(a1, 10 ** (d1 + 2))
                                 < Fraction(a2, 10 ** (d2 + 2)))

    def test_exact_sum_at_equal_depth(self):
        g1, g2 = GridAngle(33, 1), GridAngle(67, 1)
        assert g1.fraction + g2.fraction == Fraction(1, 10)


class TestErrValue:
    def test_invariants(self):
        with pytest.raises(ValueError):
            ErrValue(math.nan)
        with pytest.raises(ValueError):
            ErrValue(1.0, -1, 0)
        with pytest.raises(BudgetOverflowError):
            ErrValue(1.0, 30001, 0)

    def test_budget_growth(self):
        a = ErrValue(2.0, 3, 0)
        b = ErrValue(3.0, 5, 0)
        assert a.mul(b).mult_budget == 9
        assert a.add(b).mult_budget == 6

    def test_sub_switches_to_absolute(self):
        a = ErrValue(1.0, 550, 0)
        b = ErrValue(0.25, 550, 0)
        d = a.sub(b)
        assert d.mult_budget == 0
        assert d.abs_budget >= 550 + 138  # ceil(550*0.25) = 138

    def test_overflow_is_hard(self):
        a = ErrValue(1.0, 20000, 0)
        with pytest.raises(BudgetOverflowError):
            a.mul(a)

    def test_enclosure_contains_truth(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            x = float(rng.uniform(0.1, 3.0))
            v = ErrValue(x, 5, 10)
            assert v.lower <= x <= v.upper


class TestVerSin:
    def test_zero(self):
        out = ver_sin(ErrValue(0.0), exact_fraction=Fraction(0))
        assert out.value == 0.0
        assert out.mult_budget == 250

    def test_quarter_turn(self):
        g = GridAngle(50, 0)
        out = ver_sin(g.to_err(), exact_fraction=g.fraction)
        assert out.value == 1.0
        assert out.mult_budget == 550  # 250 + 100*3

    def test_budget_law(self):
        x = ErrValue(1.0, 7, 0)
        assert ver_sin(x).mult_budget == 250 + 100 * 7

    def test_against_high_precision(self):
        out = ver_sin(ErrValue(1.0))
        true = mp.sin(mpf(1.0))
        assert abs(mpf(out.value) - true) <= 250 * EPS * true

    def test_domain(self):
        with pytest.raises(DomainError):
            ver_sin(ErrValue(3.3))

    def test_exact_reflection_budget_survives(self):
        g = GridAngle(90, 0)  # 0.9*pi > pi/2
        out = ver_sin(g.to_err(), exact_fraction=g.fraction)
        assert out.mult_budget == 550
        true = mp.sin(mp.pi * mpf(9) / 10)
        assert abs(mpf(out.value) - true) <= 550 * EPS * true


class TestVerCos:
    def test_zero(self):
        out = ver_cos(ErrValue(0.0), exact_fraction=Fraction(0))
        assert out.value == 1.0
        assert out.mult_budget <= 250

    def test_quarter_turn_exact(self):
        g = GridAngle(50, 0)
        out = ver_cos(g.to_err(), exact_fraction=g.fraction)
        assert out.value == 0.0
        assert out.as_abs(1.0).abs_budget <= 550

    def test_equals_sine_of_complement_bitwise(self):
        for a, d in ((12, 0), (55, 0), (1234, 2), (8000, 2)):
            g = GridAngle(a, d)
            got = ver_cos(g.to_err(), exact_fraction=g.fraction)
            comp = Fraction(g.denominator - 2 * a, 2 * g.denominator)
            sign = 1.0 if comp >= 0 else -1.0
            ref = ver_sin(ErrValue(float(abs(comp)) * math.pi, 3, 0),
                          exact_fraction=abs(comp))
            assert got.value == sign * ref.value

    def test_known_negative_third(self):
        # cosine of the equilateral critical angle is -1/3
        x = 1.9106332362490186
        out = ver_cos(ErrValue(x, 1, 0))
        assert abs(mpf(out.value) - mp.cos(mpf(x))) <= out.worst_abs
        assert out.worst_abs <= 600 * EPS
        assert abs(out.value + 1 / 3) < 1e-15

    def test_domain(self):
        with pytest.raises(DomainError):
            ver_cos(ErrValue(2.7))


class TestVerSqrt:
    def test_examples(self):
        assert ver_sqrt(ErrValue(4.0)).value == 2.0
        assert ver_sqrt(ErrValue(0.0)).value == 0.0
        out = ver_sqrt(ErrValue(2.0))
        true = mp.sqrt(mpf(2))
        assert abs(mpf(out.value) - true) <= EPS * true
        assert out.mult_budget == 1

    def test_budget_carry(self):
        out = ver_sqrt(ErrValue(2.0, 1200, 0))
        assert out.mult_budget == 1201

    def test_possibly_negative_signals(self):
        # value positive, but the budget allows the truth to be negative
        with pytest.raises(NotWellDefined):
            ver_sqrt(ErrValue(1e-18, 0, 10))
        with pytest.raises(NotWellDefined):
            ver_sqrt(ErrValue(-0.5, 0, 0))


def test_sin_budget_holds_on_dense_random_sample():
    """|ver_sin(x) - sin(x)| <= 250*eps*sin(x) on [0, pi/2]."""
    rng = np.random.default_rng(101)
    xs = rng.uniform(0.0, math.pi / 2, 20000)
    vals = taylor_sin(xs)
    ref = np.sin(xs)  # libm is far closer than the budget; margin 100x
    bad = np.abs(vals - ref) > 200 * EPS * np.maximum(ref, 1e-300)
    for x in xs[bad]:
        true = mp.sin(mpf(float(x)))
        got = mpf(float(taylor_sin(float(x))))
        assert abs(got - true) <= 250 * EPS * true
