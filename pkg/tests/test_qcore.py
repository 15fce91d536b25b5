import math
from fractions import Fraction as F

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qsf.context import (
    ArithmeticContext,
    DomainError,
    PoleError,
    QBase,
    UnsupportedInExactMode,
    as_qbase,
    guard_context,
)
from qsf.qcore import aw_factor, gamma_reflection, qgamma, qpoch_finite, qpoch_infinite

DBL = ArithmeticContext("double")
EXT = ArithmeticContext("extended", dps=40)
EXACT = ArithmeticContext("exact")

rationals = st.fractions(min_value=-3, max_value=3, max_denominator=12)
bases = st.fractions(min_value=F(1, 20), max_value=F(19, 20), max_denominator=20)


class TestQpochFinite:
    def test_zero_a(self):
        assert qpoch_finite(0.0, 0.5, 5) == 1

    def test_empty_product(self):
        assert qpoch_finite(0.3, 0.5, 0) == 1

    def test_two_factors_exact(self):
        assert qpoch_finite(F(1, 2), F(1, 2), 2) == F(3, 8)

    def test_list_form(self):
        a, b = F(1, 3), F(-2, 5)
        q = F(1, 4)
        assert qpoch_finite([a, b], q, 3) == qpoch_finite(a, q, 3) * qpoch_finite(b, q, 3)

    def test_matches_mpmath(self):
        assert qpoch_finite(0.7, 0.3, 6) == pytest.approx(float(mpmath.qp(0.7, 0.3, 6)), rel=1e-14)

    def test_negative_index(self):
        q = F(1, 3)
        a = F(2, 7)
        assert qpoch_finite(a, q, -2) == 1 / qpoch_finite(a * q**-2, q, 2)

    def test_negative_index_pole(self):
        with pytest.raises(PoleError):
            qpoch_finite(F(1, 4), F(1, 2), -2)  # a q^{-2} = 1

    @given(rationals, bases, st.integers(0, 6), st.integers(0, 6))
    def test_splitting_law_exact(self, a, q, m, n):
        assert qpoch_finite(a, q, m + n) == qpoch_finite(a, q, m) * qpoch_finite(a * q**m, q, n)

    @given(st.floats(-2, 2), st.floats(0.05, 0.95), st.integers(0, 8), st.integers(0, 8))
    def test_splitting_law_double(self, a, q, m, n):
        lhs = qpoch_finite(a, q, m + n)
        rhs = qpoch_finite(a, q, m) * qpoch_finite(a * q**m, q, n)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-14)


class TestQpochInfinite:
    def test_zero_a(self):
        assert qpoch_infinite(0.0, 0.5, DBL) == 1

    def test_vanishing_first_factor(self):
        assert qpoch_infinite(1.0, 0.5, DBL) == 0

    def test_half_half(self):
        # frozen oracle: mpmath.qp(0.5, 0.5) to 20 digits
        assert qpoch_infinite(0.5, 0.5, DBL) == pytest.approx(0.28878809508660242128, rel=1e-13)
        assert float(mpmath.qp(0.5, 0.5)) == pytest.approx(0.28878809508660242128, rel=1e-15)

    def test_two_tolerances_agree(self):
        loose = qpoch_infinite(0.5, 0.5, ArithmeticContext("double", rel_tol=1e-8))
        tight = qpoch_infinite(0.5, 0.5, DBL)
        assert abs(loose - tight) < 1e-10

    def test_extended(self):
        # truncation follows rel_tol, so full precision needs a tight one
        ext = ArithmeticContext("extended", rel_tol=1e-36, dps=40)
        v = qpoch_infinite(ext.num("1/3"), ext.num("0.7"), ext)
        ref = EXT.mp.qp(EXT.mp.mpf(1) / 3, EXT.mp.mpf("0.7"))
        assert abs(v - ref) < EXT.mp.mpf(10) ** -30

    def test_exact_rejected(self):
        with pytest.raises(UnsupportedInExactMode):
            qpoch_infinite(F(1, 2), F(1, 2), EXACT)

    @pytest.mark.parametrize("N", [1, 5])
    @pytest.mark.parametrize("a,q", [(0.5, 0.5), (-0.9, 0.3), (2.5, 0.64)])
    def test_tail_split(self, a, q, N):
        lhs = qpoch_infinite(a, q, DBL)
        rhs = qpoch_finite(a, q, N) * qpoch_infinite(a * q**N, q, DBL)
        assert lhs == pytest.approx(rhs, rel=1e-12)


class TestQgamma:
    def test_one(self):
        assert qgamma(1, 0.5, DBL) == pytest.approx(1, rel=1e-15)

    def test_two(self):
        assert qgamma(2, 0.5, DBL) == pytest.approx(1, rel=1e-15)

    def test_three_is_one_plus_q(self):
        assert qgamma(3, 0.5, DBL) == pytest.approx(1.5, rel=1e-14)

    def test_against_mpmath(self):
        assert qgamma(0.37, 0.6, DBL) == pytest.approx(float(mpmath.qgamma(0.37, 0.6)), rel=1e-12)

    @pytest.mark.parametrize("z", [0, -1, -2])
    def test_poles(self, z):
        with pytest.raises(PoleError):
            qgamma(z, 0.5, DBL)

    def test_exact_rejected(self):
        with pytest.raises(UnsupportedInExactMode):
            qgamma(1, F(1, 4), EXACT)

    @pytest.mark.parametrize("z", [0.5, 1, 2.25, 3])
    @pytest.mark.parametrize("q", [0.25, 0.5, 0.9])
    def test_functional_equation(self, z, q):
        lhs = qgamma(z + 1, q, DBL)
        rhs = (1 - q**z) / (1 - q) * qgamma(z, q, DBL)
        assert lhs == pytest.approx(rhs, rel=1e-12)

    @given(st.floats(0.1, 4.0), st.floats(0.05, 0.95))
    def test_functional_equation_property(self, z, q):
        lhs = qgamma(z + 1, q, DBL)
        rhs = (1 - q**z) / (1 - q) * qgamma(z, q, DBL)
        assert lhs == pytest.approx(rhs, rel=1e-11)


class TestAwFactor:
    def test_empty(self):
        assert aw_factor(0.3, 0.7, 0.5, 0) == 1

    def test_zero_a(self):
        assert aw_factor(F(2, 3), 0, F(1, 4), 4) == 1

    def test_one_factor(self):
        assert aw_factor(F(1), F(1, 2), F(1, 2), 1) == F(1, 4)

    @given(st.fractions(min_value=F(1, 5), max_value=5, max_denominator=9), rationals, bases, st.integers(0, 5),
           st.booleans())
    def test_pair_identity_exact(self, w, a, q, j, neg):
        w = -w if neg else w
        x = (w + 1 / w) / 2
        assert aw_factor(x, a, q, j) == qpoch_finite(a * w, q, j) * qpoch_finite(a / w, q, j)

    @given(st.floats(0.0, math.pi), st.floats(-1.5, 1.5), st.floats(0.05, 0.95), st.integers(0, 7))
    def test_pair_identity_on_circle(self, theta, a, q, j):
        w = complex(math.cos(theta), math.sin(theta))
        rhs = qpoch_finite(a * w, q, j) * qpoch_finite(a / w, q, j)
        assert aw_factor(math.cos(theta), a, q, j) == pytest.approx(rhs.real, rel=1e-12, abs=1e-13)
        assert abs(rhs.imag) < 1e-12 * max(1, abs(rhs))


class TestContext:
    def test_qbase_range(self):
        with pytest.raises(DomainError):
            QBase(1.0)
        with pytest.raises(DomainError):
            QBase(F(1, 4), F(1, 3))

    def test_exact_sqrt(self):
        qb = as_qbase(F(9, 25), EXACT)
        assert qb.p == F(3, 5)
        assert qb.half(3) == F(27, 125)

    def test_exact_non_square_half_power(self):
        qb = as_qbase(F(1, 2), EXACT)
        with pytest.raises(UnsupportedInExactMode):
            qb.half(1)

    def test_exact_float_input_is_its_decimal(self):
        assert EXACT.num(0.3) == F(3, 10)

    def test_guard_context_keeps_exact(self):
        assert guard_context(EXACT) is EXACT
        assert guard_context(DBL).mode == "extended"

    def test_reflection(self):
        assert gamma_reflection(0.5, DBL) == pytest.approx(math.pi, rel=1e-15)
        with pytest.raises(PoleError):
            gamma_reflection(2, DBL)

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            ArithmeticContext("quad")
