from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qsf.connection import METHODS, ConnectionParams, connection_A, connection_c, connection_d, connection_e
from qsf.context import ArithmeticContext, as_qbase
from qsf.polyq import aw_r_raw, aw_r_stable
from qsf.qcore import aw_factor

DBL = ArithmeticContext("double")
EXACT = ArithmeticContext("exact")

TARGET = (F(1, 3), F(-1, 2), F(2, 5), F(1, 7))
SOURCE = (F(1, 4), F(3, 5), F(-2, 7), F(1, 2))
Q = F(1, 4)


def params(q=Q):
    return ConnectionParams(*TARGET, *SOURCE, q)


class TestElementary:
    def test_leading_values(self):
        al, a, q = F(7, 10), F(2, 5), Q
        assert connection_c(4, 0, *TARGET, q) == 1
        assert connection_d(3, 3, al, a, q) == (al / a) ** 3
        assert connection_e(0, 0, *SOURCE, q) == 1

    def test_c_expands_r(self):
        x = F(1, 10)
        for n in range(5):
            lhs = aw_r_raw(n, x, *TARGET, as_qbase(Q, EXACT), EXACT)
            rhs = sum(connection_c(n, j, *TARGET, Q) * aw_factor(x, TARGET[0], Q, j) for j in range(n + 1))
            assert lhs == rhs

    def test_d_rebases_factor(self):
        j, al, a, q, x = 3, 0.7, 0.4, 0.25, 0.1
        rhs = sum(connection_d(j, l, al, a, q) * aw_factor(x, a, q, l) for l in range(j + 1))
        assert rhs == pytest.approx(aw_factor(x, al, q, j), rel=1e-13)

    @pytest.mark.parametrize("l", [0, 1, 2, 4])
    def test_e_expands_factor(self, l):
        x = F(-2, 9)
        qb = as_qbase(Q, EXACT)
        rhs = sum(connection_e(l, k, *SOURCE, Q) * aw_r_raw(k, x, *SOURCE, qb, EXACT) for k in range(l + 1))
        assert rhs == aw_factor(x, SOURCE[0], Q, l)


class TestConnectionA:
    @pytest.mark.parametrize("method", METHODS)
    def test_a00(self, method):
        assert connection_A(0, 0, params(), method, EXACT) == 1

    def test_four_methods_exact(self):
        vals = {connection_A(4, 1, params(), m, EXACT) for m in METHODS}
        assert len(vals) == 1

    @given(st.integers(0, 5).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, n))))
    def test_four_methods_property(self, nk):
        n, k = nk
        vals = [connection_A(n, k, params(F(9, 100)), m, EXACT) for m in METHODS]
        assert all(v == vals[0] for v in vals)

    def test_methods_double(self):
        p = ConnectionParams(0.3, -0.5, 0.4, 0.15, 0.25, 0.6, -0.3, 0.5, 0.16)
        ref = connection_A(5, 2, p, "sum-2.04", DBL)
        for m in METHODS[1:]:
            assert connection_A(5, 2, p, m, DBL) == pytest.approx(ref, rel=1e-12)

    @pytest.mark.parametrize("n", [0, 2, 5])
    def test_expansion_reproduces_r(self, n):
        p = ConnectionParams(0.3, -0.5, 0.4, 0.15, 0.25, 0.6, -0.3, 0.5, 0.36)
        x = 0.37
        qb = as_qbase(0.36, DBL)
        lhs = aw_r_stable(n, x, 0.3, -0.5, 0.4, 0.15, qb, DBL)
        rhs = sum(connection_A(n, k, p, "phi43-2.09", DBL) * aw_r_stable(k, x, 0.25, 0.6, -0.3, 0.5, qb, DBL)
                  for k in range(n + 1))
        assert rhs == pytest.approx(lhs, rel=1e-10, abs=1e-12)

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            connection_A(2, 3, params(), "sum-2.04", EXACT)
        with pytest.raises(ValueError):
            connection_A(2, 1, params(), "nope", EXACT)
