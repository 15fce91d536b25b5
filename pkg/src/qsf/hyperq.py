"""Basic hypergeometric series r-phi-s and the bilateral 1-psi-1 series."""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .context import (
    DEFAULT_CONTEXT,
    ArithmeticContext,
    DivergenceError,
    QBase,
    SeriesPole,
    TruncationFailure,
    UnsupportedInExactMode,
    as_qbase,
    guard_context,
    is_complex,
    magnitude,
    round_to,
)
from .qcore import qpoch_finite, qpoch_ratio_infinite
from .report import DEFAULT_DOUBLE_TOL, make_report


@dataclass(frozen=True)
class PhiSeries:
    """Parameters of r-phi-s(upper; lower; q, z).

    ``pairs`` holds (a, x) entries standing for the two upper parameters
    a e^{i theta}, a e^{-i theta} with x = cos theta; their product
    (a e^{i theta}, a e^{-i theta}; q)_k is evaluated in real form.
    """

    upper: tuple
    lower: tuple
    q: Any
    z: Any
    termination: int | None = None
    pairs: tuple = field(default=())

    @property
    def r(self) -> int:
        return len(self.upper) + 2 * len(self.pairs)

    @property
    def s(self) -> int:
        return len(self.lower)


@dataclass(frozen=True)
class BilateralSeries:
    a: Any
    b: Any
    q: Any
    z: Any


def phi(upper, lower, q, z, n: int | None = None, pairs=()) -> PhiSeries:
    return PhiSeries(tuple(upper), tuple(lower), q, z, n, tuple(pairs))


def _qval(q):
    return q.q if isinstance(q, QBase) else q


def _detect_termination(upper, qq, ctx: ArithmeticContext, limit: int) -> int | None:
    """Smallest n such that some upper parameter equals q^{-n}."""
    best = None
    for a in upper:
        if is_complex(a) or not a >= 1:
            continue
        v = a
        for n in range(limit + 1):
            hit = v == 1 if ctx.exact else abs(v - 1) < 1e-11
            if hit:
                best = n if best is None else min(best, n)
                break
            if v < 1:
                break
            v = v * qq
    return best


def _cancel(upper: list, lower: list):
    """Drop parameters that occur both upstairs and downstairs."""
    upper = list(upper)
    rest = []
    for b in lower:
        for i, a in enumerate(upper):
            if a == b:
                del upper[i]
                break
        else:
            rest.append(b)
    return upper, rest


def phi_terms(series: PhiSeries, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """Yield the successive terms of the series (finite list if terminating)."""
    qq = _qval(series.q)
    n = series.termination
    if n is None:
        n = _detect_termination(series.upper, qq, ctx, ctx.max_terms)
    upper, lower = _cancel(series.upper, series.lower)
    power = 1 + series.s - series.r
    z = series.z
    term = ctx.num(1) if not isinstance(z, complex) else complex(1)
    qk = 1
    k = 0
    while True:
        yield term
        if n is not None and k >= n:
            return
        num = 1
        for a in upper:
            num = num * (1 - a * qk)
        for a, x in series.pairs:
            aq = a * qk
            num = num * (1 - 2 * aq * x + aq * aq)
        den = 1 - qk * qq
        for b in lower:
            den = den * (1 - b * qk)
        if den == 0:
            raise SeriesPole(f"zero denominator at term {k + 1}")
        ratio = num / den * z
        if power > 0:
            ratio = ratio * (-qk) ** power
        elif power < 0:
            # divide rather than raise an int to a negative power (float result)
            ratio = ratio / (-qk) ** (-power)
        term = term * ratio
        qk = qk * qq
        k += 1


def phi_eval(series: PhiSeries, ctx: ArithmeticContext = DEFAULT_CONTEXT, reverse: bool = False):
    """Sum r-phi-s; exact for terminating series in rational mode.

    Nonterminating series are summed until three consecutive terms fall
    below tolerance relative to the partial sum while the term ratio is
    below one.
    """
    if series.z == 0:
        return ctx.num(1)
    qq = _qval(series.q)
    n = series.termination
    if n is None:
        n = _detect_termination(series.upper, qq, ctx, ctx.max_terms)
    if n is not None:
        terms = list(phi_terms(PhiSeries(series.upper, series.lower, series.q, series.z, n, series.pairs), ctx))
        if reverse:
            terms.reverse()
        total = 0
        for t in terms:
            total = total + t
        return total
    if ctx.exact:
        raise UnsupportedInExactMode("nonterminating series cannot be summed exactly")
    r, s = series.r, series.s
    if r > s + 1:
        raise DivergenceError(f"{r}phi{s} with r > s+1 diverges unless terminating")
    if r == s + 1 and magnitude(series.z) >= 1:
        raise DivergenceError(f"{r}phi{s} needs |z| < 1, got |z|={magnitude(series.z)}")
    tol = ctx.series_tol
    total = 0
    small = 0
    prev = None
    for k, t in enumerate(phi_terms(series, ctx)):
        total = total + t
        mt = magnitude(t)
        shrinking = prev is None or mt <= prev
        if mt <= tol * magnitude(total) or mt == 0:
            small = small + 1 if shrinking else 0
        else:
            small = 0
        if small >= 3:
            return total
        prev = mt
        if k >= ctx.max_terms:
            break
    raise TruncationFailure(f"series tail not below tolerance within {ctx.max_terms} terms")


def psi11_eval(series: BilateralSeries, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """Sum_{k in Z} (a;q)_k/(b;q)_k z^k, split into k >= 0 and k <= -1.

    The negative side uses (a;q)_{-k}/(b;q)_{-k} = prod_{j=1}^k (1-b q^{-j})/(1-a q^{-j});
    a vanishing numerator there (b = q^j) simply ends that tail.
    """
    if ctx.exact:
        raise UnsupportedInExactMode("the bilateral sum is nonterminating")
    a, b, z = series.a, series.b, series.z
    qq = _qval(series.q)
    # b = q^j ends the negative side after j - 1 terms, so only |z| < 1 matters then
    neg_terminates = any(b == qq**j for j in range(1, 64))
    if not magnitude(z) < 1 or not (neg_terminates or magnitude(b) < magnitude(a) * magnitude(z)):
        raise DivergenceError("1psi1 requires |b/a| < |z| < 1")
    tol = ctx.series_tol
    pos = phi_eval(PhiSeries((a, qq), (b,), qq, z), ctx)
    # negative side: terms for k = -1, -2, ...
    neg = 0
    term = 1
    qinv = 1
    small = 0
    for j in range(1, ctx.max_terms + 1):
        qinv = qinv / qq
        den = 1 - a * qinv
        if den == 0:
            raise SeriesPole(f"(a;q)_{{-{j}}} is singular")
        term = term * (1 - b * qinv) / den / z
        neg = neg + term
        if term == 0:
            return pos + neg
        if magnitude(term) <= tol * magnitude(pos + neg):
            small += 1
            if small >= 3:
                return pos + neg
        else:
            small = 0
    raise TruncationFailure("negative tail of 1psi1 did not converge")


def psi11_closed_form(series: BilateralSeries, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """Ramanujan's product (q, b/a, az, q/(az); q)_inf / (b, q/a, z, b/(az); q)_inf."""
    a, b, z = series.a, series.b, series.z
    qq = _qval(series.q)
    return qpoch_ratio_infinite([qq, b / a, a * z, qq / (a * z)], [b, qq / a, z, b / (a * z)], qq, ctx)


# ------------------------------------------------ transformation chains

TRANSFORMS = ("STRING", "RAT-SYM")


def _poch(a, q, n):
    return qpoch_finite(a, q, n)


def string_chain(n: int, a, w, qb: QBase, ctx: ArithmeticContext = DEFAULT_CONTEXT) -> list:
    """Four equal expressions for r_n(x; a, a q^{1/2}, -a, -a q^{1/2}) with x = (w + 1/w)/2.

    1. the 4phi3 with the e^{+-i theta} pair folded into x;
    2. the same 4phi3 with a w and a/w as separate upper parameters;
    3. a 2phi1 in a^{-2} w^{-2} q times (a^2;q)_n a^n w^n / (a^4;q)_n;
    4. a 2phi2 in w^{-2} q.
    """
    q, p = qb.q, qb.p
    x = (w + 1 / w) / 2
    a2 = a * a
    a4 = a2 * a2
    if n == 0:
        one = ctx.num(1)
        return [one, one, one, one]
    upper = [q ** (-n), a4 * q**n]
    lower = [a2 * p, -a2, -a2 * p]
    e1 = phi_eval(phi(upper, lower, q, q, n, pairs=[(a, x)]), ctx)
    e2 = phi_eval(phi(upper + [a * w, a / w], lower, q, q, n), ctx)
    lead = _poch(a2, q, n) * a**n * w**n / _poch(a4, q, n)
    q1n = q ** (1 - n)
    e3 = lead * phi_eval(phi([q ** (-n), a2], [q1n / a2], q, q / (a2 * w * w), n), ctx)
    e4 = lead * _poch(q1n / (a2 * w * w), q, n) * phi_eval(
        phi([q ** (-n), q1n / a4], [q1n / a2, q1n / (a2 * w * w)], q, q / (w * w), n), ctx
    )
    return [e1, e2, e3, e4]


def rat_sym_chain(n: int, qa1, qb1, t, qb: QBase, ctx: ArithmeticContext = DEFAULT_CONTEXT) -> list:
    """Five equal expressions for the rational function with q^{alpha+1} = qa1, q^{beta+1} = qb1.

    1. the 2phi2 in -tq; 2. a 2phi1 in t; 3. a 2phi1 in 1/t; 4. the mirrored
    2phi2 in -q/t with its prefactor; 5. the mirrored function in its
    polynomial form with the same prefactor.
    """
    from .polyq import rational_p_raw

    q = qb.q
    if n == 0:
        one = ctx.num(1)
        return [one] * 5
    qn = q**n
    top = q ** (n - 1) * qa1 * qb1
    e1 = phi_eval(phi([q ** (-n), top], [qa1, -t * qb1], q, -t * q, n), ctx)
    e2 = phi_eval(phi([q ** (-n), 1 / (qn * qb1) * q], [qa1], q, -t * qb1 * qn, n), ctx) / _poch(-t * qb1, q, n)
    sign = (-1) ** n
    e3 = sign * _poch(qb1, q, n) * t**n / (_poch(qa1, q, n) * _poch(-t * qb1, q, n)) * phi_eval(
        phi([q ** (-n), q / (qn * qa1)], [qb1], q, -qa1 * qn / t, n), ctx
    )
    mirror = sign * _poch(qb1, q, n) / _poch(qa1, q, n) * t**n * _poch(-qa1 / t, q, n) / _poch(-t * qb1, q, n)
    e4 = mirror * phi_eval(phi([q ** (-n), top], [qb1, -qa1 / t], q, -q / t, n), ctx)
    method = "series" if ctx.exact else "polynomial"
    e5 = mirror * rational_p_raw(n, qb1, qa1, 1 / t, qb, ctx, method)
    return [e1, e2, e3, e4, e5]


def phi_transform_check(transform_id: str, point: dict, ctx: ArithmeticContext = DEFAULT_CONTEXT, tol: float | None = None):
    """Evaluate every member of a transformation chain and report the worst disagreement.

    STRING points: n, a, q and ``w_theta`` or ``theta``.  RAT-SYM points: n,
    alpha, beta, t, q.  ``lhs`` is the first member, ``rhs`` the member
    farthest from it; all members are listed in the details.  Double mode
    evaluates at guard precision because the literal series cancel.
    """
    if transform_id not in TRANSFORMS:
        raise ValueError(f"unknown transform {transform_id!r}; choose from {TRANSFORMS}")
    work = guard_context(ctx)
    qb = as_qbase(point["q"], work)
    n = int(point["n"])
    if transform_id == "STRING":
        a = work.num(point["a"])
        if "w_theta" in point:
            w = work.num(point["w_theta"])
        else:
            if work.exact:
                raise UnsupportedInExactMode("give w_theta in exact mode")
            th = work.num(point["theta"])
            w = work.mp.expj(th) if work.mode == "extended" else cmath.exp(1j * float(th))
        vals = string_chain(n, a, w, qb, work)
    else:
        qa1 = qb.power(_exponent(point["alpha"], work) + 1)
        qb1 = qb.power(_exponent(point["beta"], work) + 1)
        vals = rat_sym_chain(n, qa1, qb1, work.num(point["t"]), qb, work)
    vals = [round_to(v, ctx) for v in vals]
    first = vals[0]
    far = max(vals[1:], key=lambda v: magnitude(v - first))
    details = {f"expr{i + 1}": v for i, v in enumerate(vals)}
    tol = DEFAULT_DOUBLE_TOL if tol is None else tol
    return make_report(transform_id, point, first, far, ctx.mode, tol, details)


def _exponent(v, ctx):
    if ctx.exact:
        return Fraction(v) if not isinstance(v, float) else Fraction(repr(v))
    return ctx.num(v)
