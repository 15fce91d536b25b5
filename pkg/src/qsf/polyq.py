"""Askey-Wilson and q-ultraspherical polynomials, classical ultraspherical and
Jacobi polynomials, Jackson's second q-Bessel function, the Askey-Wilson
q-Bessel function and the rational biorthogonal functions with their
Pastro-type limits."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

from .context import (
    DEFAULT_CONTEXT,
    ArithmeticContext,
    DegenerateNormalization,
    DomainError,
    PoleError,
    QBase,
    as_qbase,
    magnitude,
)
from .hyperq import phi, phi_eval
from .qcore import pochhammer, qpoch_finite, qpoch_ratio_infinite


class _Infinity:
    """Tag for an infinite alpha/beta in the Pastro limits."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"


INF = _Infinity()


@dataclass(frozen=True)
class AWParams:
    a: Any
    b: Any
    c: Any
    d: Any
    q: Any

    def permuted(self, order) -> "AWParams":
        vals = (self.a, self.b, self.c, self.d)
        return AWParams(*(vals[i] for i in order), self.q)


@dataclass(frozen=True)
class RationalFnParams:
    n: int
    alpha: Any
    beta: Any
    t: Any
    q: Any

    def __post_init__(self):
        if not (self.alpha > -1 and self.beta > -1):
            raise DomainError("alpha and beta must exceed -1")


def _qb(q, ctx):
    return as_qbase(q, ctx)


def aw_r_raw(n: int, x, a, b, c, d, qb: QBase, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """4phi3(q^-n, abcd q^{n-1}, a e^{it}, a e^{-it}; ab, ac, ad; q, q) at x = cos t."""
    if n == 0:
        return ctx.num(1)
    q = qb.q
    series = phi(
        [q ** (-n), a * b * c * d * q ** (n - 1)],
        [a * b, a * c, a * d],
        q,
        q,
        n,
        pairs=[(a, x)],
    )
    return phi_eval(series, ctx)


def aw_r(n: int, x, params: AWParams, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    qb = _qb(params.q, ctx)
    num = ctx.num
    return aw_r_raw(n, _arg(x, ctx), num(params.a), num(params.b), num(params.c), num(params.d), qb, ctx)


def aw_p_raw(n: int, x, a, b, c, d, qb: QBase, ctx: ArithmeticContext = DEFAULT_CONTEXT, method: str = "auto"):
    if n == 0:
        return ctx.num(1)
    if _use_recurrence(method, ctx):
        return aw_p_recurrence(n, x, a, b, c, d, qb)
    if a == 0:
        raise DegenerateNormalization("a^{-n} normalization is undefined at a = 0")
    return qpoch_finite([a * b, a * c, a * d], qb.q, n) / a**n * aw_r_raw(n, x, a, b, c, d, qb, ctx)


def _use_recurrence(method: str, ctx: ArithmeticContext) -> bool:
    if method == "auto":
        return not ctx.exact
    if method not in ("series", "recurrence"):
        raise ValueError(f"unknown method {method!r}")
    return method == "recurrence"


def aw_p_recurrence(n: int, x, a, b, c, d, qb: QBase):
    """p_n(x; a, b, c, d | q) from the three-term recurrence of the monic polynomials.

    The terminating 4phi3 loses roughly q^{-k(n-k)} relative accuracy to
    cancellation in floating point; the recurrence does not.  The largest
    parameter plays the role of ``a``, which keeps 1/a harmless.
    """
    if n == 0:
        return 1
    a, b, c, d = sorted((a, b, c, d), key=lambda v: -abs(v))
    if a == 0:
        raise DegenerateNormalization("all four parameters vanish")
    q = qb.q
    abcd = a * b * c * d

    def up(k):
        if k == 0:
            # the factor (1 - abcd q^{-1}) cancels at k = 0
            return (1 - a * b) * (1 - a * c) * (1 - a * d) / (a * (1 - abcd))
        return (
            (1 - a * b * q**k) * (1 - a * c * q**k) * (1 - a * d * q**k) * (1 - abcd * q ** (k - 1))
            / (a * (1 - abcd * q ** (2 * k - 1)) * (1 - abcd * q ** (2 * k)))
        )

    def down(k):
        return (
            a * (1 - q**k) * (1 - b * c * q ** (k - 1)) * (1 - b * d * q ** (k - 1)) * (1 - c * d * q ** (k - 1))
            / ((1 - abcd * q ** (2 * k - 2)) * (1 - abcd * q ** (2 * k - 1)))
        )

    shift = a + 1 / a
    up_prev = up(0)
    prev, cur = 1, x - (shift - up_prev) / 2
    for k in range(1, n):
        up_k, down_k = up(k), down(k)
        prev, cur = cur, (x - (shift - up_k - down_k) / 2) * cur - up_prev * down_k / 4 * prev
        up_prev = up_k
    return 2**n * qpoch_finite(abcd * q ** (n - 1), q, n) * cur


def aw_p(n: int, x, params: AWParams, ctx: ArithmeticContext = DEFAULT_CONTEXT, method: str = "auto"):
    """Askey-Wilson polynomial p_n(x; a, b, c, d | q), symmetric in a, b, c, d.

    ``method="series"`` evaluates a^{-n} (ab, ac, ad; q)_n r_n; ``"recurrence"``
    uses the three-term recurrence.  ``"auto"`` takes the series in exact mode
    and the recurrence otherwise.
    """
    qb = _qb(params.q, ctx)
    num = ctx.num
    return aw_p_raw(
        n, _arg(x, ctx), num(params.a), num(params.b), num(params.c), num(params.d), qb, ctx, method
    )


def aw_r_stable(n: int, x, a, b, c, d, qb: QBase, ctx: ArithmeticContext = DEFAULT_CONTEXT, method: str = "auto"):
    """r_n by the 4phi3 in exact mode, else as a^n p_n / (ab, ac, ad; q)_n via the recurrence."""
    if n == 0:
        return ctx.num(1)
    if not _use_recurrence(method, ctx):
        return aw_r_raw(n, x, a, b, c, d, qb, ctx)
    return a**n * aw_p_recurrence(n, x, a, b, c, d, qb) / qpoch_finite([a * b, a * c, a * d], qb.q, n)


def _arg(x, ctx):
    if isinstance(x, complex):
        return x
    return ctx.num(x)


def ultra_params(a, qb: QBase):
    """(a, a q^{1/2}, -a, -a q^{1/2}): the continuous q-ultraspherical case."""
    return a, a * qb.p, -a, -a * qb.p


def cq_ultra_from_a(n: int, x, a, qb: QBase, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """C_n(x; a^2 | q) = (a^4;q)_n / ((q;q)_n a^n) r_n(x; a, aq^{1/2}, -a, -aq^{1/2})."""
    if n == 0:
        return ctx.num(1)
    q = qb.q
    r = aw_r_stable(n, x, *ultra_params(a, qb), qb, ctx)
    return qpoch_finite(a**4, q, n) / (qpoch_finite(q, q, n) * a**n) * r


def cq_ultra(n: int, x, beta, q, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """Continuous q-ultraspherical polynomial C_n(x; beta | q), beta = a^2."""
    qb = _qb(q, ctx)
    beta = ctx.num(beta)
    a = ctx.sqrt(beta)
    val = cq_ultra_from_a(n, _arg(x, ctx), a, qb, ctx)
    if isinstance(val, complex) and not isinstance(x, complex):
        return val.real
    return val


def cq_ultra_rogers(n: int, w, beta, q, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """sum_k (beta;q)_k (beta;q)_{n-k} / ((q;q)_k (q;q)_{n-k}) w^{n-2k}, with w = e^{i theta}.

    A second route to C_n(x; beta | q), independent of the 4phi3 form.
    """
    qq = _qb(q, ctx).q
    beta = ctx.num(beta)
    total = 0
    for k in range(n + 1):
        total = total + (
            qpoch_finite(beta, qq, k) * qpoch_finite(beta, qq, n - k)
            / (qpoch_finite(qq, qq, k) * qpoch_finite(qq, qq, n - k))
            * w ** (n - 2 * k)
        )
    return total


def hyp2f1_terminating(n: int, b, c, z):
    """2F1(-n, b; c; z) as a finite sum."""
    total = 0
    term = 1
    for k in range(n + 1):
        total = total + term
        if k == n:
            break
        den = (c + k) * (k + 1)
        if den == 0:
            raise PoleError(f"2F1 lower parameter hits a pole at k={k}")
        term = term * (-n + k) * (b + k) / den * z
    return total


def ultra_classical(n: int, lam, x, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """C_n^lambda(x) = (2 lambda)_n / n! 2F1(-n, n + 2 lambda; lambda + 1/2; (1-x)/2)."""
    if n == 0:
        return ctx.num(1)
    lam, x = ctx.num(lam), ctx.num(x)
    half = ctx.num(Fraction(1, 2))
    c = lam + half
    if c <= 0 and c == int(c) and -c < n:
        raise PoleError(f"lambda + 1/2 = {c} is a pole for degree {n}")
    return pochhammer(2 * lam, n) / math.factorial(n) * hyp2f1_terminating(n, n + 2 * lam, c, (1 - x) / 2)


def ultra_over_2lm1(k: int, lam, x, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """C_k^{lambda-1/2}(x) / (2 lambda - 1) for k >= 1, continuous at lambda = 1/2.

    Near lambda = 1/2 the limit cos(k theta)/k = T_k(x)/k is used.
    """
    if k == 0:
        raise ValueError("k must be positive; C_0 = 1 carries no removable singularity")
    lam, x = ctx.num(lam), ctx.num(x)
    if magnitude(2 * lam - 1) < 1e-9:
        return chebyshev_t(k, x) / k
    return ultra_classical(k, lam - ctx.num(Fraction(1, 2)), x, ctx) / (2 * lam - 1)


def chebyshev_t(k: int, x):
    """T_k(x) by the three-term recurrence (equals cos(k theta) at x = cos theta)."""
    if k == 0:
        return 1
    t0, t1 = 1, x
    for _ in range(k - 1):
        t0, t1 = t1, 2 * x * t1 - t0
    return t1


def jacobi_classical(n: int, alpha, beta, x, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """P_n^{(alpha,beta)}(x) = (alpha+1)_n / n! 2F1(-n, n+alpha+beta+1; alpha+1; (1-x)/2)."""
    if n == 0:
        return ctx.num(1)
    alpha, beta, x = ctx.num(alpha), ctx.num(beta), ctx.num(x)
    return pochhammer(alpha + 1, n) / math.factorial(n) * hyp2f1_terminating(
        n, n + alpha + beta + 1, alpha + 1, (1 - x) / 2
    )


def rational_p_raw(n: int, qa1, qb1, t, qb: QBase, ctx: ArithmeticContext = DEFAULT_CONTEXT, method: str = "auto"):
    """2phi2(q^-n, q^{n+alpha+beta+1}; q^{alpha+1}, -t q^{beta+1}; q, -tq).

    Takes qa1 = q^{alpha+1} and qb1 = q^{beta+1} directly, so callers can pass
    exact values.  ``method="series"`` sums the 2phi2 as written; ``"polynomial"``
    sums the equivalent terminating 2phi1 in t (or in 1/t when |t| > 1) and
    divides by (-t q^{beta+1}; q)_n, which avoids the cancellation the
    2phi2 suffers for small q.
    """
    if n == 0:
        return ctx.num(1)
    if method == "auto":
        method = "series" if ctx.exact else "polynomial"
    q = qb.q
    if method == "series":
        series = phi([q ** (-n), q ** (n - 1) * qa1 * qb1], [qa1, -t * qb1], q, -t * q, n)
        return phi_eval(series, ctx)
    if method != "polynomial":
        raise ValueError(f"unknown method {method!r}")
    if magnitude(t) <= 1:
        poly = phi_eval(phi([q ** (-n), q ** (1 - n) / qb1], [qa1], q, -t * qb1 * q**n, n), ctx)
        return poly / qpoch_finite(-t * qb1, q, n)
    poly = phi_eval(phi([q ** (-n), q ** (1 - n) / qa1], [qb1], q, -qa1 * q**n / t, n), ctx)
    return (-1) ** n * qpoch_finite(qb1, q, n) * t**n / qpoch_finite([qa1, -t * qb1], q, n) * poly


def rational_p(params: RationalFnParams, ctx: ArithmeticContext = DEFAULT_CONTEXT, method: str = "auto"):
    """The rational biorthogonal function p_n^{(alpha,beta)}(t; q)."""
    qb = _qb(params.q, ctx)
    return rational_p_raw(
        params.n, qb.power(params.alpha + 1), qb.power(params.beta + 1), ctx.num(params.t), qb, ctx, method
    )


def pastro_p(n: int, alpha, beta, t, q, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """p_n^{(alpha,beta)}(t) where alpha and/or beta may be INF (1phi1 limit forms)."""
    qb = _qb(q, ctx)
    t = ctx.num(t)
    if alpha is not INF and beta is not INF:
        return rational_p(RationalFnParams(n, alpha, beta, t, qb), ctx)
    if n == 0:
        return ctx.num(1)
    qq = qb.q
    if alpha is not INF:
        lower = qb.power(alpha + 1)
    elif beta is not INF:
        lower = -t * qb.power(beta + 1)
    else:
        lower = 0
    return phi_eval(phi([qq ** (-n)], [lower], qq, -qq * t, n), ctx)


def qbessel2(alpha, x, q, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """Jackson's second q-Bessel function J_alpha^{(2)}(x; q)."""
    qb = _qb(q, ctx)
    qq = qb.q
    x = ctx.num(x)
    qa1 = qb.power(alpha + 1)
    if x == 0:
        return ctx.num(1) if alpha == 0 else ctx.num(0)
    pref = qpoch_ratio_infinite([qa1], [qq], qq, ctx) * (x / 2) ** ctx.num(alpha)
    return pref * phi_eval(phi([], [qa1], qq, -x * x * qa1 / 4), ctx)


def aw_qbessel(theta, a, s, t, q, ctx: ArithmeticContext = DEFAULT_CONTEXT, method: str = "auto"):
    """2phi1(-ast q^{1/2} e^{i theta}, -ast q^{1/2} e^{-i theta}; a^2 q; q, -a^{-2} t^{-2}).

    ``method="paired"`` sums the series directly in real arithmetic (needs
    |a t| > 1), ``"complex"`` sums it with complex parameters, ``"heine"``
    uses Heine's transformation, which also continues the function beyond
    the disc of convergence.  ``"auto"`` picks paired inside the disc and
    Heine outside.
    """
    qb = _qb(q, ctx)
    qq = qb.q
    a, s, t, theta = ctx.num(a), ctx.num(s), ctx.num(t), ctx.num(theta)
    if not (0 < a < 1):
        raise DomainError("the Askey-Wilson q-Bessel function needs 0 < a < 1")
    if not (0 <= s < 1 / t):
        raise DomainError("the Askey-Wilson q-Bessel function needs 0 <= s < 1/t")
    z = -1 / (a * a * t * t)
    amp = -a * s * t * qb.p
    lower = a * a * qq
    inside = magnitude(z) < 1
    if method == "auto":
        method = "paired" if inside else "heine"
    if method == "paired":
        return phi_eval(phi([], [lower], qq, z, pairs=[(amp, ctx.cos(theta))]), ctx)
    e = cmath.exp(1j * float(theta)) if ctx.mode != "extended" else ctx.mp.expj(theta)
    A, B = amp * e, amp / e
    if method == "complex":
        val = phi_eval(phi([A, B], [lower], qq, z), ctx)
    elif method == "heine":
        if amp == 0:
            # B -> 0 limit of the transformation: 1phi1(z; 0; q, C) / (C, z; q)_inf
            val = phi_eval(phi([z], [0], qq, lower), ctx) / qpoch_ratio_infinite([lower, z], [], qq, ctx)
        else:
            pref = qpoch_ratio_infinite([B, A * z], [lower, z], qq, ctx)
            val = pref * phi_eval(phi([lower / B, z], [A * z], qq, B), ctx)
    else:
        raise ValueError(f"unknown method {method!r}")
    return val.real
