import random
from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, strategies as st

from oracles import sympy_graded_bracket
from radnf.errors import CapsMismatch
from radnf.jets import JetCaps, JetSeries, Monomial, filtration_order
from radnf.symbols import (COND_THETA, COND_VANISH, COND_Y, COND_Z, ClassicalSymbol, LaurentRep, canonical_bracket,
                           chart_hamilton_field, check_against_oracle, graded_bracket, lagrange_bracket,
                           oracle_graded_bracket, radial_check, random_jet, to_canonical, verify_hamilton_field)
from strategies import jets

C = JetCaps(2, 6, 3)
C3 = JetCaps(3, 5, 3)


def v(name, caps=C):
    return JetSeries.var(name, caps)


def L(terms, d=1):
    return LaurentRep(d, terms)


class TestToCanonical:
    def test_examples(self):
        z, t = v("z"), v("theta1")
        assert to_canonical(z, 1) == L({((0,), 1, (0,), 1): 1})
        assert to_canonical(t, 1) == L({((0,), 0, (1,), 0): 1})
        assert to_canonical(z * t * t, 0) == L({((0,), 1, (2,), -2): 1})


class TestCanonicalBracket:
    def test_examples(self):
        zeta_z = L({((0,), 1, (0,), 1): 1})
        z = L({((0,), 1, (0,), 0): 1})
        eta = L({((0,), 0, (1,), 0): 1})
        assert canonical_bracket(zeta_z, z) == z
        # eta commutes with zeta*z under the stated bracket
        assert canonical_bracket(zeta_z, eta) == L({})
        zeta = L({((0,), 0, (0,), 1): 1})
        assert canonical_bracket(zeta_z, zeta) == L({((0,), 0, (0,), 1): -1})
        assert canonical_bracket(zeta_z, zeta_z) == L({})


class TestHamiltonField:
    def test_z(self):
        f = chart_hamilton_field(v("z"))
        assert f.coeff_rho_drho == JetSeries.one(C)
        assert f.coeff_theta == (v("theta1"),)
        assert f.coeff_z == v("z")
        assert f.coeff_y == (JetSeries.zero(C),)

    def test_theta(self):
        f = chart_hamilton_field(v("theta1"))
        assert f.coeff_y == (JetSeries.one(C),)
        assert not f.coeff_z and not f.coeff_rho_drho and not f.coeff_theta[0]

    def test_function_of_y(self):
        y = v("y1")
        fy = y * y + y.scale(3)
        f = chart_hamilton_field(fy)
        assert f.coeff_z == fy
        assert f.coeff_theta == (-fy.d_y(0),)

    def test_against_oracle_random(self):
        rng = random.Random(11)
        for caps in (C, C3):
            for _ in range(15):
                assert verify_hamilton_field(random_jet(rng, caps, 4, 6)) == []


class TestGradedBracket:
    def test_bracket_relations(self):
        z, t, y = v("z"), v("theta1"), v("y1")
        assert graded_bracket(z, 1, t, 0) == t
        assert graded_bracket(z, 1, z, 0) == z
        assert graded_bracket(z, 1, y * y + y, 0) == JetSeries.zero(C)

    def test_lagrange_examples(self):
        z, t = v("z"), v("theta1")
        assert lagrange_bracket(z, z * t) == z * t

    def test_eigenvalue_formula_small(self):
        z, t, y = v("z"), v("theta1"), v("y1")
        for a, k in product(range(4), range(3)):
            if a + k >= C.N:
                continue
            m = z ** a * t ** k * (y + y * y)
            assert lagrange_bracket(z, m) == m.scale(a + k - 1)

    def test_caps_mismatch(self):
        with pytest.raises(CapsMismatch):
            graded_bracket(v("z"), 1, v("z", C3), 1)

    @given(jets(C3, 4), jets(C3, 4), st.integers(-2, 2), st.integers(-2, 2))
    def test_matches_laurent_oracle(self, a, b, s, t):
        assert graded_bracket(a, s, b, t) == oracle_graded_bracket(a, s, b, t)

    @given(jets(C, 4), jets(C, 4), st.integers(-1, 2), st.integers(-1, 2))
    def test_matches_sympy(self, a, b, s, t):
        assert graded_bracket(a, s, b, t) == sympy_graded_bracket(a, s, b, t)

    @given(jets(C3), jets(C3))
    def test_antisymmetry(self, a, b):
        assert lagrange_bracket(a, b) == -lagrange_bracket(b, a)
        assert not lagrange_bracket(a, a)

    @given(jets(C3), jets(C3))
    def test_grading(self, a, b):
        fa, fb = filtration_order(a), filtration_order(b)
        assert filtration_order(lagrange_bracket(a, b)) >= fa + fb - 1

    @given(jets(C3, 3), jets(C3, 3), jets(C3, 3))
    def test_jacobi(self, a, b, c):
        # exact away from the truncation boundary
        small = JetCaps(3, C3.N - 2, C3.M - 2)
        br = lagrange_bracket
        total = br(a, br(b, c)) + br(b, br(c, a)) + br(c, br(a, b))
        assert total.with_caps(small) == JetSeries.zero(small)

    def test_check_against_oracle_passes(self):
        check_against_oracle(v("z"), 1, v("theta1"), 0)


class TestClassicalSymbol:
    def test_orders_and_padding(self):
        P = ClassicalSymbol(2, (v("z"), v("y1")))
        assert P.K == 1 and P.order_of(1) == 1
        assert P.padded(4).K == 3 and P.padded(4).components[3] == JetSeries.zero(C)

    def test_shared_caps(self):
        with pytest.raises(CapsMismatch):
            ClassicalSymbol(1, (v("z"), v("z", C3)))


class TestRadialCheck:
    def test_z(self):
        r = radial_check(ClassicalSymbol(1, (v("z"),)))
        assert r.in_class and r.lambda_factor == JetSeries.one(C) and r.failures == ()

    def test_theta(self):
        r = radial_check(v("theta1"))
        assert not r.in_class and COND_THETA in r.failures

    def test_lambda(self):
        z, y = v("z"), v("y1")
        r = radial_check(z + y * z)
        assert r.in_class and r.lambda_factor == JetSeries.one(C) + y

    def test_other_failures(self):
        z, y = v("z"), v("y1")
        assert COND_VANISH in radial_check(z + JetSeries.one(C)).failures
        assert COND_Y in radial_check(z + y).failures
        assert COND_Z in radial_check(y * z).failures
        assert radial_check(z + z * z + v("theta1") * v("theta1")).in_class
