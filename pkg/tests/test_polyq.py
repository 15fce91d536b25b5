import itertools
import math
from fractions import Fraction as F

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qsf.context import ArithmeticContext, DegenerateNormalization, DomainError, as_qbase
from qsf.hyperq import phi, phi_eval, phi_transform_check
from qsf.polyq import (
    INF,
    AWParams,
    RationalFnParams,
    aw_p,
    aw_p_raw,
    aw_qbessel,
    aw_r,
    cq_ultra,
    cq_ultra_rogers,
    jacobi_classical,
    pastro_p,
    qbessel2,
    rational_p,
    ultra_classical,
    ultra_over_2lm1,
)
from qsf.qcore import aw_factor, pochhammer, qpoch_finite

DBL = ArithmeticContext("double")
EXACT = ArithmeticContext("exact")


def aw_r_oracle(n, x, a, b, c, d, q):
    """4phi3 summed from the definition with shifted factorials recomputed per term."""
    total = F(0)
    for k in range(n + 1):
        num = qpoch_finite([q**-n, a * b * c * d * q ** (n - 1)], q, k) * aw_factor(x, a, q, k)
        den = qpoch_finite([a * b, a * c, a * d, q], q, k)
        total += num / den * q**k
    return total


class TestAskeyWilson:
    def test_degree_zero(self):
        assert aw_r(0, 0.3, AWParams(0.1, 0.2, 0.3, 0.4, 0.5), DBL) == 1
        assert aw_p(0, 0.3, AWParams(0.1, 0.2, 0.3, 0.4, 0.5), DBL) == 1

    def test_r1_two_terms(self):
        a, b, c, d, q, x = F(1, 2), F(1, 4), F(1, 8), F(1, 16), F(1, 4), F(1, 3)
        got = aw_r(1, x, AWParams(a, b, c, d, q), EXACT)
        by_hand = 1 + (1 - 1 / q) * (1 - a * b * c * d) * (1 - 2 * a * x + a * a) * q / (
            (1 - q) * (1 - a * b) * (1 - a * c) * (1 - a * d)
        )
        assert got == by_hand

    def test_p2_exact_matches_oracle(self):
        a, b, c, d, q, x = F(1, 2), F(1, 3), F(-1, 4), F(1, 5), F(1, 4), F(1, 3)
        got = aw_p(2, x, AWParams(a, b, c, d, q), EXACT)
        want = qpoch_finite([a * b, a * c, a * d], q, 2) / a**2 * aw_r_oracle(2, x, a, b, c, d, q)
        assert got == want
        assert got == F(-3073213, 4147200)

    def test_chebyshev_case(self):
        # p_n(x; 1, -1, q^{1/2}, -q^{1/2}) = 2 (q^n; q)_n T_n(x)
        q = 0.36
        th = math.pi / 5
        for n in range(1, 7):
            got = aw_p(n, math.cos(th), AWParams(1.0, -1.0, 0.6, -0.6, q), DBL)
            assert got == pytest.approx(2 * qpoch_finite(q**n, q, n) * math.cos(n * th), rel=1e-12)

    def test_permutations_double(self):
        params = (0.3, 0.5, -0.2, 0.7)
        base = aw_p(3, 0.2, AWParams(*params, 0.25), DBL)
        for perm in [(1, 0, 2, 3), (3, 2, 1, 0), (2, 3, 0, 1)]:
            v = aw_p(3, 0.2, AWParams(*(params[i] for i in perm), 0.25), DBL)
            assert v == pytest.approx(base, rel=1e-13)

    def test_all_permutations_exact(self):
        params = (F(3, 10), F(1, 2), F(-1, 5), F(7, 10))
        values = {aw_p(3, F(1, 5), AWParams(*perm, F(1, 4)), EXACT) for perm in itertools.permutations(params)}
        assert len(values) == 1

    @given(st.permutations([F(3, 10), F(1, 2), F(-1, 5), F(7, 10)]), st.integers(0, 5),
           st.fractions(min_value=-1, max_value=1, max_denominator=10))
    def test_permutation_property(self, perm, n, x):
        base = aw_p(n, x, AWParams(F(3, 10), F(1, 2), F(-1, 5), F(7, 10), F(1, 4)), EXACT)
        assert aw_p(n, x, AWParams(*perm, F(1, 4)), EXACT) == base

    @pytest.mark.parametrize("n", [1, 4, 8])
    def test_recurrence_matches_series(self, n):
        args = (0.4, 0.3, -0.6, 0.5, 0.8)
        ctx = ArithmeticContext("extended", rel_tol=1e-30, dps=60)
        qb = as_qbase(0.25, ctx)
        series = aw_p_raw(n, ctx.num(0.35), *(ctx.num(v) for v in args[:4]), qb, ctx, "series")
        rec = aw_p(n, 0.35, AWParams(*args[:4], 0.25), DBL, "recurrence")
        assert rec == pytest.approx(float(series), rel=1e-12)

    def test_a_zero_normalization(self):
        with pytest.raises(DegenerateNormalization):
            aw_p(2, F(1, 3), AWParams(0, F(1, 2), F(1, 3), F(1, 5), F(1, 4)), EXACT, method="series")


class TestContinuousUltraspherical:
    def test_degree_zero(self):
        assert cq_ultra(0, 0.3, 0.36, 0.25, DBL) == 1

    def test_degree_one(self):
        b, q, x = F(9, 25), F(1, 4), F(2, 5)
        assert cq_ultra(1, x, b, q, EXACT) == 2 * (1 - b) * x / (1 - q)

    def test_normalization_consistency(self):
        n, a, q, x = 2, 0.6, 0.25, 0.4
        c = cq_ultra(n, x, a * a, q, DBL)
        p = math.sqrt(q)
        pn = aw_p(n, x, AWParams(a, a * p, -a, -a * p, q), DBL)
        scale = qpoch_finite([q, a**4 * q**n], q, n) / qpoch_finite(a * a, q, n)
        assert c * scale == pytest.approx(pn, rel=1e-13)

    @pytest.mark.parametrize("n", range(6))
    def test_rogers_generating_form(self, n):
        th, beta, q = 0.8, 0.45, 0.3
        w = complex(math.cos(th), math.sin(th))
        assert cq_ultra(n, math.cos(th), beta, q, DBL) == pytest.approx(cq_ultra_rogers(n, w, beta, q, DBL).real, rel=1e-12)


class TestClassical:
    def test_ultra_degree_zero_and_one(self):
        assert ultra_classical(0, 0.8, 0.3, DBL) == 1
        assert ultra_classical(1, 0.8, 0.3, DBL) == pytest.approx(2 * 0.8 * 0.3)

    @pytest.mark.parametrize("n", range(6))
    def test_ultra_at_one(self, n):
        lam = 0.7
        assert ultra_classical(n, lam, 1.0, DBL) == pytest.approx(pochhammer(2 * lam, n) / math.factorial(n), rel=1e-14)

    @pytest.mark.parametrize("n,lam,x", [(3, 0.8, 0.2), (5, 1.5, -0.6), (4, 0.25, 0.9)])
    def test_ultra_against_mpmath(self, n, lam, x):
        assert ultra_classical(n, lam, x, DBL) == pytest.approx(float(mpmath.gegenbauer(n, lam, x)), rel=1e-12)

    @pytest.mark.parametrize("k", [1, 2, 5])
    def test_removable_singularity(self, k):
        th = 0.9
        near = k * ultra_over_2lm1(k, 0.5 + 1e-6, math.cos(th), DBL)
        assert near == pytest.approx(math.cos(k * th), abs=1e-4)
        at = k * ultra_over_2lm1(k, 0.5, math.cos(th), DBL)
        assert at == pytest.approx(math.cos(k * th), abs=1e-13)

    def test_jacobi_basics(self):
        assert jacobi_classical(0, 0.3, 0.4, 0.1, DBL) == 1
        assert jacobi_classical(1, 0, 0, 0.37, DBL) == pytest.approx(0.37)
        for n in range(5):
            assert jacobi_classical(n, 0.5, -0.3, 1.0, DBL) == pytest.approx(pochhammer(1.5, n) / math.factorial(n), rel=1e-14)

    @pytest.mark.parametrize("n,a,b,x", [(3, 0.5, -0.3, 0.2), (4, 1.5, 0.0, -0.7)])
    def test_jacobi_against_mpmath(self, n, a, b, x):
        assert jacobi_classical(n, a, b, x, DBL) == pytest.approx(float(mpmath.jacobi(n, a, b, x)), rel=1e-12)


class TestRational:
    def test_degree_zero(self):
        assert rational_p(RationalFnParams(0, 0, 0, 1, 0.5), DBL) == 1

    def test_degree_one_two_terms(self):
        q, t = F(1, 4), F(3, 2)
        got = rational_p(RationalFnParams(1, 0, 0, t, q), EXACT)
        by_hand = 1 + (1 - 1 / q) * (1 - q**2) * t * q / ((1 - q) ** 2 * (1 + t * q))
        assert got == by_hand

    def test_symmetry_chain(self):
        rep = phi_transform_check("RAT-SYM", {"n": 2, "alpha": 0.3, "beta": 0.7, "t": 1.5, "q": 0.25}, DBL, tol=1e-12)
        assert rep.passed

    def test_domain(self):
        with pytest.raises(DomainError):
            RationalFnParams(1, -1.0, 0.0, 1.0, 0.5)

    @pytest.mark.parametrize("n", [1, 3, 6])
    @pytest.mark.parametrize("t", [0.3, 1.0, 4.0])
    def test_polynomial_route_matches_series(self, n, t):
        ctx = ArithmeticContext("extended", rel_tol=1e-30, dps=60)
        ref = rational_p(RationalFnParams(n, 0.5, -0.2, t, 0.25), ctx, method="series")
        assert rational_p(RationalFnParams(n, 0.5, -0.2, t, 0.25), DBL) == pytest.approx(float(ref), rel=1e-12)


class TestPastro:
    def test_degree_zero(self):
        assert pastro_p(0, INF, INF, 1.0, 0.5, DBL) == 1

    def test_double_infinite_three_terms(self):
        q, t = F(1, 2), F(1)
        got = pastro_p(2, INF, INF, t, q, EXACT)
        # 1phi1(q^-2; 0; q, -q t) = sum_k (q^-2;q)_k/(q;q)_k (-1)^k q^{k(k-1)/2} (-q t)^k
        want = sum(qpoch_finite(q**-2, q, k) / qpoch_finite(q, q, k) * (-1) ** k * q ** (k * (k - 1) // 2) * (-q * t) ** k
                   for k in range(3))
        assert got == want

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_large_beta_limit(self, n):
        a, t, q = 0.3, 0.8, 0.5
        assert rational_p(RationalFnParams(n, a, 40, t, q), DBL) == pytest.approx(pastro_p(n, a, INF, t, q, DBL), abs=1e-8)

    def test_polynomial_in_t(self):
        # degree-n polynomial: the (n+1)-th finite difference vanishes
        q, n = F(1, 4), 3
        vals = [pastro_p(n, F(1, 2), INF, F(t), q, EXACT) for t in range(n + 2)]
        diff = sum((-1) ** j * math.comb(n + 1, j) * vals[j] for j in range(n + 2))
        assert diff == 0


class TestBessel:
    def test_origin(self):
        assert qbessel2(0, 0.0, 0.5, DBL) == 1
        assert qbessel2(1.5, 0.0, 0.5, DBL) == 0

    def test_j0_at_one(self):
        q = 0.5
        tight = qbessel2(0, 1.0, q, DBL)
        loose = qbessel2(0, 1.0, q, ArithmeticContext("double", rel_tol=1e-8))
        ref = float(mpmath.qhyper([], [q], q, -q / 4) * mpmath.qp(q, q) / mpmath.qp(q, q))
        assert tight == pytest.approx(ref, rel=1e-14)
        assert abs(tight - loose) < 1e-10

    def test_aw_qbessel_s_zero(self):
        a, t, q, th = 0.5, 3.0, 0.25, 1.1
        z = -1 / (a * a * t * t)
        assert aw_qbessel(th, a, 0.0, t, q, DBL) == pytest.approx(float(mpmath.qhyper([0, 0], [a * a * q], q, z)), rel=1e-13)

    def test_aw_qbessel_argument_zero_limit(self):
        assert aw_qbessel(0.4, 0.5, 1e-9, 1e8, 0.25, DBL) == pytest.approx(1, abs=1e-12)

    def test_aw_qbessel_routes(self):
        args = (1.1, 0.5, 0.3, 3.0, 0.25)
        paired = aw_qbessel(*args, DBL, method="paired")
        cplx = aw_qbessel(*args, DBL, method="complex")
        heine = aw_qbessel(*args, DBL, method="heine")
        assert paired == pytest.approx(cplx, rel=1e-13)
        assert paired == pytest.approx(heine, rel=1e-12)
        # outside the disc of convergence only the Heine route applies
        assert aw_qbessel(1.1, 0.5, 0.3, 1.5, 0.25, DBL) == aw_qbessel(1.1, 0.5, 0.3, 1.5, 0.25, DBL, method="heine")

    def test_aw_qbessel_domain(self):
        with pytest.raises(DomainError):
            aw_qbessel(0.3, 1.2, 0.1, 1.0, 0.5, DBL)


def test_phi_eval_used_for_series_routes():
    # the 2phi2 literal form at a small exact point
    q = F(1, 4)
    s = phi([q**-2, q**3], [q, -2 * q], q, -2 * q, 2)
    assert phi_eval(s, EXACT) == rational_p(RationalFnParams(2, 0, 0, 2, q), EXACT)
