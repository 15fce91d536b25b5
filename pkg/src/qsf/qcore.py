"""q-shifted factorials, the q-gamma function and the Askey-Wilson pair factor."""

from __future__ import annotations

import math
from collections.abc import Iterable

from .context import (
    DEFAULT_CONTEXT,
    ArithmeticContext,
    PoleError,
    QBase,
    TruncationFailure,
    UnsupportedInExactMode,
    magnitude,
)


def _qval(q):
    return q.q if isinstance(q, QBase) else q


def qpoch_finite(a, q, n: int):
    """(a;q)_n = prod_{m<n} (1 - a q^m).

    ``a`` may be a list/tuple, in which case the product over all symbols is
    returned: ``qpoch_finite([a, b], q, n) == (a, b; q)_n``.  Negative ``n``
    uses (a;q)_{-n} = 1/(a q^{-n}; q)_n; a zero denominator raises PoleError.
    """
    if isinstance(a, (list, tuple)):
        out = 1
        for ai in a:
            out = out * qpoch_finite(ai, q, n)
        return out
    qq = _qval(q)
    if n < 0:
        m = -n
        den = qpoch_finite(a * qq**n, qq, m)
        if den == 0:
            raise PoleError(f"(a;q)_{n} has a pole at a={a}")
        return 1 / den
    # a 1 of a's own type keeps ratios of empty products out of int / int
    out = a * 0 + 1
    qm = 1
    for _ in range(n):
        out = out * (1 - a * qm)
        qm = qm * qq
    return out


def qpoch_infinite(a, q, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """(a;q)_inf, truncated once the remaining tail is below tolerance.

    Once |a q^m| <= 1/2 the tail prod_{j>=m}(1 - a q^j) differs from 1 by at
    most exp(2|a q^m|/(1-q)) - 1, which is the bound used to stop.
    """
    if ctx.exact:
        raise UnsupportedInExactMode("(a;q)_inf is not available in exact mode")
    if isinstance(a, (list, tuple)):
        out = 1
        for ai in a:
            out = out * qpoch_infinite(ai, q, ctx)
        return out
    qq = _qval(q)
    tol = ctx.series_tol
    one_minus_q = 1 - qq
    out = ctx.num(1)
    term = a
    for _ in range(ctx.max_terms):
        mag = magnitude(term)
        if mag <= 0.5 and 2 * mag / float(one_minus_q) < tol:
            return out
        out = out * (1 - term)
        if out == 0:
            return out
        term = term * qq
    raise TruncationFailure(f"(a;q)_inf did not converge within {ctx.max_terms} factors")


def qpoch_ratio_infinite(num: Iterable, den: Iterable, q, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """(num_1, num_2, ...; q)_inf / (den_1, ...; q)_inf."""
    out = ctx.num(1)
    for a in num:
        out = out * qpoch_infinite(a, q, ctx)
    for b in den:
        d = qpoch_infinite(b, q, ctx)
        if d == 0:
            raise PoleError(f"infinite product vanishes in a denominator (parameter {b})")
        out = out / d
    return out


def qgamma(z, q, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """Gamma_q(z) = (q;q)_inf / (q^z;q)_inf * (1-q)^(1-z) for real z."""
    if ctx.exact:
        raise UnsupportedInExactMode("qgamma needs floating arithmetic")
    if float(z) <= 0 and float(z) == math.floor(float(z)):
        raise PoleError(f"Gamma_q has a pole at z={z}")
    qq = ctx.num(_qval(q))
    z = ctx.num(z) if not isinstance(z, (int,)) else z
    return qpoch_infinite(qq, qq, ctx) / qpoch_infinite(qq**z, qq, ctx) * (1 - qq) ** (1 - z)


def aw_factor(x, a, q, j: int):
    """(a e^{i theta}, a e^{-i theta}; q)_j written as a polynomial in x = cos theta.

    Each paired factor is 1 - 2 a q^m x + a^2 q^{2m}, so the value stays real
    (or rational) for real (rational) inputs.
    """
    qq = _qval(q)
    out = 1
    aq = a
    for _ in range(j):
        out = out * (1 - 2 * aq * x + aq * aq)
        aq = aq * qq
    return out


def pochhammer(a, n: int):
    """Classical rising factorial (a)_n."""
    out = 1
    for m in range(n):
        out = out * (a + m)
    return out


def gamma_reflection(c, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """Gamma(c) Gamma(1-c) = pi / sin(pi c) for noninteger real c."""
    cf = float(c)
    if cf == math.floor(cf):
        raise PoleError(f"Gamma(c)Gamma(1-c) has a pole at integer c={c}")
    if ctx.mode == "extended":
        mp = ctx.mp
        return mp.pi / mp.sin(mp.pi * ctx.num(c))
    return math.pi / math.sin(math.pi * cf)


def aw_factor_infinite(x, a, q, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """(a e^{i theta}, a e^{-i theta}; q)_inf in the real form prod (1 - 2 a q^m x + a^2 q^{2m})."""
    if ctx.exact:
        raise UnsupportedInExactMode("infinite products need floating arithmetic")
    qq = _qval(q)
    tol = ctx.series_tol
    out = ctx.num(1)
    aq = a
    for _ in range(ctx.max_terms):
        mag = magnitude(aq)
        if mag <= 0.25 and 4 * mag * (1 + magnitude(x)) / float(1 - qq) < tol:
            return out
        out = out * (1 - 2 * aq * x + aq * aq)
        aq = aq * qq
    raise TruncationFailure("paired infinite product did not converge")
