import math
from fractions import Fraction as F

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qsf.context import (
    ArithmeticContext,
    DivergenceError,
    SeriesPole,
    UnsupportedInExactMode,
)
from qsf.hyperq import (
    BilateralSeries,
    phi,
    phi_eval,
    phi_transform_check,
    psi11_closed_form,
    psi11_eval,
)

DBL = ArithmeticContext("double")
EXACT = ArithmeticContext("exact")

small_rat = st.fractions(min_value=-2, max_value=2, max_denominator=9)
# lower parameters avoiding q^{-m} for the bases 1/3 and 2/5 used below
lowers = st.lists(
    st.fractions(min_value=F(1, 7), max_value=3, max_denominator=7).filter(
        lambda b: all(b * F(1, 3) ** m != 1 and b * F(2, 5) ** m != 1 for m in range(8))
    ),
    max_size=3,
)


def direct_sum(upper, lower, q, z, n):
    """Term-by-term oracle from the definition, shifted factorials recomputed each time."""
    def poch(a, k):
        out = 1
        for j in range(k):
            out *= 1 - a * q**j
        return out

    r, s = len(upper), len(lower)
    total = 0
    for k in range(n + 1):
        num = 1
        for a in upper:
            num *= poch(a, k)
        den = poch(q, k)
        for b in lower:
            den *= poch(b, k)
        total += F(num) / den * ((-1) ** k * q ** (k * (k - 1) // 2)) ** (1 + s - r) * z**k
    return total


class TestPhiEval:
    def test_unit_upper_parameter(self):
        assert phi_eval(phi([1.0, 0.3], [0.5], 0.5, 0.7), DBL) == 1

    def test_zero_argument(self):
        assert phi_eval(phi([0.2, 0.3], [0.5], 0.5, 0), DBL) == 1

    def test_two_phi_two_example(self):
        q, t = F(1, 4), F(2)
        series = phi([1 / q, q**2], [q, -t * q], q, -t * q, 1)
        got = phi_eval(series, EXACT)
        assert got == direct_sum([1 / q, q**2], [q, -t * q], q, -t * q, 1)
        # 1 + (1-q^-1)(1-q^2) / ((1-q)^2 (1+tq)) * (-1) * (-tq) by hand
        assert got == F(-2, 3)

    def test_terminating_detected(self):
        q = F(1, 3)
        up = [q**-3, F(2, 5), F(-1, 7)]
        lo = [F(3, 4), F(1, 9)]
        assert phi_eval(phi(up, lo, q, q), EXACT) == direct_sum(up, lo, q, q, 3)

    def test_nonterminating_matches_mpmath(self):
        got = phi_eval(phi([0.3, -0.4], [0.6], 0.5, 0.45), DBL)
        ref = float(mpmath.qhyper([0.3, -0.4], [0.6], 0.5, 0.45))
        assert got == pytest.approx(ref, rel=1e-13)

    def test_zero_phi_one(self):
        got = phi_eval(phi([], [0.25], 0.5, -0.8), DBL)
        assert got == pytest.approx(float(mpmath.qhyper([], [0.25], 0.5, -0.8)), rel=1e-13)

    def test_series_pole(self):
        q = F(1, 2)
        with pytest.raises(SeriesPole):
            phi_eval(phi([q**-3, F(1, 3)], [q**-1], q, q), EXACT)

    def test_nonterminating_exact_rejected(self):
        with pytest.raises(UnsupportedInExactMode):
            phi_eval(phi([F(1, 3)], [F(1, 5)], F(1, 4), F(1, 2)), EXACT)

    def test_divergent(self):
        with pytest.raises(DivergenceError):
            phi_eval(phi([0.3, 0.2], [0.1], 0.5, 1.5), DBL)

    def test_coincident_parameters_cancel(self):
        # (q^-2; q)_k / (q^-2; q)_k would be 0/0 at k = 3 without cancellation
        q = F(1, 2)
        series = phi([q**-2, q**-4], [q**-2], q, F(1, 3), 4)
        assert phi_eval(series, EXACT) == direct_sum([q**-4], [], q, F(1, 3), 4)

    @given(st.lists(small_rat, min_size=1, max_size=3), lowers,
           st.integers(0, 5), st.randoms(use_true_random=False))
    def test_permutation_invariance(self, extra, lower, n, rnd):
        q = F(1, 3)
        upper = [q**-n] + extra
        base = phi_eval(phi(upper, lower, q, q, n), EXACT)
        up2, lo2 = list(upper), list(lower)
        rnd.shuffle(up2)
        rnd.shuffle(lo2)
        assert phi_eval(phi(up2, lo2, q, q, n), EXACT) == base

    @given(st.lists(small_rat, min_size=1, max_size=3), lowers,
           st.integers(0, 6), small_rat)
    def test_forward_and_reversed_agree_exactly(self, extra, lower, n, z):
        q = F(2, 5)
        series = phi([q**-n] + extra, lower, q, z, n)
        assert phi_eval(series, EXACT) == phi_eval(series, EXACT, reverse=True)

    def test_pairs_fold_exponential_pair(self):
        q, a, th = 0.3, 0.6, 0.9
        x = math.cos(th)
        folded = phi_eval(phi([q**-3, 0.2], [0.4, 0.5, 0.7], q, q, 3, pairs=[(a, x)]), DBL)
        w = complex(math.cos(th), math.sin(th))
        expanded = phi_eval(phi([q**-3, 0.2, a * w, a / w], [0.4, 0.5, 0.7], q, q, 3), DBL)
        assert folded == pytest.approx(expanded.real, rel=1e-13)


class TestPsi11:
    def test_reduces_to_q_binomial(self):
        a, q, z = 0.4, 0.5, 0.3
        got = psi11_eval(BilateralSeries(a, q, q, z), DBL)
        assert got == pytest.approx(float(mpmath.qp(a * z, q) / mpmath.qp(z, q)), rel=1e-13)

    def test_a_zero(self):
        got = psi11_eval(BilateralSeries(0.0, 0.5, 0.5, 0.3), DBL)
        assert got == pytest.approx(1 / float(mpmath.qp(0.3, 0.5)), rel=1e-13)

    @pytest.mark.parametrize("a,b,q,z", [(2.0, 0.3, 0.5, 0.4), (-1.5, 0.2, 0.25, 0.6), (3.0, -0.5, 0.64, 0.5)])
    def test_against_ramanujan(self, a, b, q, z):
        s = BilateralSeries(a, b, q, z)
        assert psi11_eval(s, DBL) == pytest.approx(psi11_closed_form(s, DBL), rel=1e-12)

    def test_outside_annulus(self):
        with pytest.raises(DivergenceError):
            psi11_eval(BilateralSeries(0.5, 0.4, 0.5, 0.3), DBL)
        with pytest.raises(DivergenceError):
            psi11_eval(BilateralSeries(2.0, 0.3, 0.5, 1.2), DBL)

    def test_exact_rejected(self):
        with pytest.raises(UnsupportedInExactMode):
            psi11_eval(BilateralSeries(F(2), F(1, 3), F(1, 2), F(1, 2)), EXACT)


class TestTransformChains:
    def test_string_example(self):
        rep = phi_transform_check("STRING", {"n": 3, "a": 0.6, "theta": 1.0, "q": 0.25}, DBL, tol=1e-12)
        assert rep.passed
        assert len(rep.details) == 4

    def test_string_exact(self):
        rep = phi_transform_check("STRING", {"n": 3, "a": F(3, 5), "w_theta": F(2, 3), "q": F(1, 4)}, EXACT)
        assert rep.passed and rep.abs_residual == 0

    def test_rat_sym_example(self):
        rep = phi_transform_check("RAT-SYM", {"n": 2, "alpha": 0.5, "beta": -0.2, "t": 1.7, "q": 0.25}, DBL, tol=1e-12)
        assert rep.passed
        assert len(rep.details) == 5

    def test_rat_sym_exact(self):
        rep = phi_transform_check("RAT-SYM", {"n": 3, "alpha": F(1, 2), "beta": F(-1, 2), "t": F(3, 2), "q": F(1, 4)}, EXACT)
        assert rep.passed and rep.abs_residual == 0

    @pytest.mark.parametrize("tid,point", [
        ("STRING", {"n": 0, "a": 0.6, "theta": 1.0, "q": 0.25}),
        ("RAT-SYM", {"n": 0, "alpha": 0.5, "beta": -0.2, "t": 1.7, "q": 0.25}),
    ])
    def test_degree_zero_all_one(self, tid, point):
        rep = phi_transform_check(tid, point, DBL)
        assert all(v == pytest.approx(1, abs=1e-15) for v in rep.details.values())

    def test_unknown_transform(self):
        with pytest.raises(ValueError):
            phi_transform_check("NOPE", {}, DBL)
