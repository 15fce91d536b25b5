"""Connection coefficients between Askey-Wilson families.

r_n(x; alpha, beta, gamma, delta) = sum_k A_{n,k} r_k(x; a, b, c, d) is split
into three elementary connections with coefficients c_{n,j}, d_{j,l} and
e_{l,k}; A_{n,k} is then available as two double sums and two single sums of
balanced 4phi3's.  All four routes must agree.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any

from .context import DEFAULT_CONTEXT, ArithmeticContext, PoleError, QBase, as_qbase, guard_context, round_to
from .hyperq import phi, phi_eval
from .qcore import qpoch_finite as poch

METHODS = ("sum-2.04", "sum-2.05", "phi43-2.09", "phi43-2.10")


@dataclass(frozen=True)
class ConnectionParams:
    """Target parameters (alpha, beta, gamma, delta), source (a, b, c, d), and q."""

    alpha: Any
    beta: Any
    gamma: Any
    delta: Any
    a: Any
    b: Any
    c: Any
    d: Any
    q: Any

    def converted(self, ctx: ArithmeticContext) -> "ConnectionParams":
        vals = [ctx.num(v) for v in (self.alpha, self.beta, self.gamma, self.delta, self.a, self.b, self.c, self.d)]
        return ConnectionParams(*vals, as_qbase(self.q, ctx))


def _div(num, den):
    if den == 0:
        raise PoleError("connection coefficient denominator vanishes")
    if isinstance(num, int) and isinstance(den, int):
        return Fraction(num, den)
    return num / den


def connection_c(n: int, j: int, al, be, ga, de, q):
    """c_{n,j}: r_n(x; al, be, ga, de) in the basis (al e^{it}, al e^{-it}; q)_j."""
    q = q.q if isinstance(q, QBase) else q
    return _div(
        poch([q ** (-n), al * be * ga * de * q ** (n - 1)], q, j) * q**j,
        poch([al * be, al * ga, al * de, q], q, j),
    )


def connection_d(j: int, l: int, al, a, q):
    """d_{j,l}: (al e^{it}, al e^{-it}; q)_j in the basis (a e^{it}, a e^{-it}; q)_l."""
    q = q.q if isinstance(q, QBase) else q
    if l > j:
        return 0
    return _div(
        poch([q, a * al], q, j) * poch(al / a, q, j - l) * al**l,
        poch([q, a * al], q, l) * poch(q, q, j - l) * a**l,
    )


def connection_e(l: int, k: int, a, b, c, d, q):
    """e_{l,k}: (a e^{it}, a e^{-it}; q)_l in the basis r_k(x; a, b, c, d)."""
    q = q.q if isinstance(q, QBase) else q
    if k > l:
        return 0
    abcd = a * b * c * d
    return _div(
        poch(abcd, q, 2 * k) * poch(q ** (-l), q, k) * poch([a * b, a * c, a * d], q, l) * q ** (l * k),
        poch([abcd * q ** (k - 1), q], q, k) * poch(abcd, q, k + l),
    )


def _a_sum_204(n, k, P: ConnectionParams):
    q = P.q.q
    total = 0
    for j in range(n - k + 1):
        for l in range(j + 1):
            total = total + (
                connection_c(n, j + k, P.alpha, P.beta, P.gamma, P.delta, q)
                * connection_d(j + k, l + k, P.alpha, P.a, q)
                * connection_e(l + k, k, P.a, P.b, P.c, P.d, q)
            )
    return total


def _a_sum_205(n, k, P: ConnectionParams):
    q = P.q.q
    total = 0
    for m in range(n - k + 1):
        for i in range(m + 1):
            total = total + (
                connection_c(n, n - i, P.alpha, P.beta, P.gamma, P.delta, q)
                * connection_d(n - i, n - m, P.alpha, P.a, q)
                * connection_e(n - m, k, P.a, P.b, P.c, P.d, q)
            )
    return total


def _a_phi43_209(n, k, P: ConnectionParams, ctx):
    q = P.q.q
    al, be, ga, de, a, b, c, d = P.alpha, P.beta, P.gamma, P.delta, P.a, P.b, P.c, P.d
    albegade = al * be * ga * de
    abcd = a * b * c * d
    pref = _div(
        (-1) ** k * q ** (k * (k + 1) // 2)
        * poch([q ** (-n), albegade * q ** (n - 1), a * b, a * c, a * d], q, k) * al**k,
        poch([q, abcd * q ** (k - 1), al * be, al * ga, al * de], q, k) * a**k,
    )
    total = 0
    for j in range(n - k + 1):
        outer = _div(
            poch([q ** (k - n), albegade * q ** (n + k - 1), al * a * q**k, al / a], q, j) * q**j,
            poch([al * be * q**k, al * ga * q**k, al * de * q**k, q], q, j),
        )
        if outer == 0:
            continue
        inner = phi_eval(
            phi(
                [q ** (-j), a * b * q**k, a * c * q**k, a * d * q**k],
                [a * al * q**k, a / al * q ** (1 - j), abcd * q ** (2 * k)],
                q, q, j,
            ),
            ctx,
        )
        total = total + outer * inner
    return pref * total


def _a_phi43_210(n, k, P: ConnectionParams, ctx):
    q = P.q.q
    al, be, ga, de, a, b, c, d = P.alpha, P.beta, P.gamma, P.delta, P.a, P.b, P.c, P.d
    albegade = al * be * ga * de
    abcd = a * b * c * d
    # (1 - abcd q^{2k-1}) / (1 - abcd q^{k-1}) is 1 at k = 0
    ratio = 1 if k == 0 else _div(1 - abcd * q ** (2 * k - 1), 1 - abcd * q ** (k - 1))
    pref = ratio * _div(
        (-1) ** n * q ** (-(n * (n - 2 * k - 1)) // 2)
        * poch(q ** (-n), q, k) * poch([albegade * q ** (n - 1), a * b, a * c, a * d], q, n) * al**n,
        poch(q, q, k) * poch([abcd * q**k, al * be, al * ga, al * de], q, n) * a**n,
    )
    total = 0
    for m in range(n - k + 1):
        outer = _div(
            poch([q ** (k - n), q ** (1 - n - k) / abcd, al / a, q ** (1 - n) / (al * a)], q, m) * q**m,
            poch([q, q ** (1 - n) / (a * b), q ** (1 - n) / (a * c), q ** (1 - n) / (a * d)], q, m),
        )
        if outer == 0:
            continue
        inner = phi_eval(
            phi(
                [q ** (-m), q ** (1 - n) / (al * be), q ** (1 - n) / (al * ga), q ** (1 - n) / (al * de)],
                [q ** (2 - 2 * n) / albegade, q ** (1 - n) / (al * a), a / al * q ** (1 - m)],
                q, q, m,
            ),
            ctx,
        )
        total = total + outer * inner
    return pref * total


def connection_A(n: int, k: int, params: ConnectionParams, method: str = "sum-2.04",
                 ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """A_{n,k} by one of the four equivalent routes in METHODS.

    Every route cancels heavily for small q, so double mode works at guard
    precision and rounds the result.
    """
    if not 0 <= k <= n:
        raise ValueError("need 0 <= k <= n")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    work = guard_context(ctx)
    P = params.converted(work)
    if method == "sum-2.04":
        val = _a_sum_204(n, k, P)
    elif method == "sum-2.05":
        val = _a_sum_205(n, k, P)
    elif method == "phi43-2.09":
        val = _a_phi43_209(n, k, P, work)
    else:
        val = _a_phi43_210(n, k, P, work)
    return round_to(val, ctx)
