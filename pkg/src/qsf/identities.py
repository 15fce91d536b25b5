"""Identity catalog: both sides of every addition, product, connection and
transformation formula, the residual engine, q -> 1 limit scans and the
divided-difference lowering check.

Points are plain dicts.  Angles may be given as real angles (``theta``,
``phi``, ``psi``) in floating modes or as rational ``w_theta`` etc. standing
for e^{i theta}; every formula here is algebraic in w, so a rational w keeps
exact mode closed (x = (w + 1/w)/2 then lies outside [-1, 1], which is
harmless for polynomial identities).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable

import mpmath

from .connection import ConnectionParams, connection_A
from .context import (
    DEFAULT_CONTEXT,
    ArithmeticContext,
    DomainError,
    PoleError,
    QBase,
    TruncationFailure,
    UnsupportedInExactMode,
    as_qbase,
    guard_context,
    magnitude,
    round_to,
)
from .hyperq import phi, phi_eval, phi_transform_check
from .polyq import (
    aw_p_raw,
    aw_qbessel,
    aw_r_stable,
    chebyshev_t,
    cq_ultra_rogers,
    qbessel2,
    rational_p_raw,
    ultra_classical,
    ultra_over_2lm1,
)
from .qcore import aw_factor, aw_factor_infinite, pochhammer, qpoch_finite as poch, qpoch_infinite
from .report import DEFAULT_DOUBLE_TOL, ResidualReport, make_report

QBESSEL_MAX_TERMS = 200


@dataclass(frozen=True)
class AdditionPoint:
    """(q, a, s, t, x) with x = cos theta; any rational x is allowed in exact mode.

    ``w`` optionally carries e^{i theta} itself (then x = (w + 1/w)/2); the
    divided-difference check needs it.
    """

    q: Any
    a: Any
    s: Any
    t: Any
    x: Any = None
    w: Any = None

    def __post_init__(self):
        if self.s == 0 or self.t == 0:
            raise DomainError("s and t must be nonzero")
        if self.x is None and self.w is None:
            raise DomainError("give x or w")

    @classmethod
    def from_point(cls, point: dict) -> "AdditionPoint":
        w = point.get("w_theta")
        x = point.get("x")
        if x is None and w is None and "theta" in point:
            x = math.cos(float(point["theta"]))
        return cls(point["q"], point["a"], point["s"], point["t"], x, w)


@dataclass(frozen=True)
class ClassicalAdditionPoint:
    lam: Any
    phi: float
    psi: float
    theta: float
    n: int

    def __post_init__(self):
        if not (math.sin(self.phi) > 0 and math.sin(self.psi) > 0):
            raise DomainError("need sin(phi) > 0 and sin(psi) > 0")


# ---------------------------------------------------------------- helpers


def _num(point, key, ctx):
    return ctx.num(point[key])


def _qb(point, ctx) -> QBase:
    qb = as_qbase(point["q"], ctx)
    if ctx.exact and qb.p is None:
        raise UnsupportedInExactMode("exact mode needs q to be the square of a rational")
    return qb


def _expj(theta, ctx):
    if ctx.mode == "extended":
        return ctx.mp.expj(ctx.num(theta))
    return cmath.exp(1j * float(theta))


def angle(point: dict, name: str, ctx: ArithmeticContext):
    """(x, w) for the angle ``name``: x = cos(angle), w = e^{i angle}.

    ``w_<name>`` gives w directly (any nonzero scalar, rational in exact
    mode); otherwise ``<name>`` is a real angle.
    """
    wkey = "w_" + name
    if wkey in point:
        w = ctx.num(point[wkey])
        if w == 0:
            raise DomainError(f"{wkey} must be nonzero")
        return (w + 1 / w) / 2, w
    if name not in point:
        raise KeyError(f"point needs {name!r} or {wkey!r}")
    if ctx.exact:
        raise UnsupportedInExactMode(f"give {wkey} (a rational e^(i {name})) in exact mode")
    th = ctx.num(point[name])
    return ctx.cos(th), _expj(th, ctx)


def _x_of(point, ctx):
    """x from ``x`` or from a theta angle."""
    if "x" in point and point["x"] is not None:
        return ctx.num(point["x"])
    return angle(point, "theta", ctx)[0]


def _div(num, den):
    if den == 0:
        raise PoleError("coefficient denominator vanishes")
    if isinstance(num, int) and isinstance(den, int):
        return Fraction(num, den)
    return num / den


def _real_if_close(v):
    if isinstance(v, complex) and abs(v.imag) <= 1e-14 * max(1.0, abs(v.real)):
        return v.real
    return v


# -------------------------------------------------- the addition formula


def addition_params(a, s, t, qb: QBase):
    p = qb.p
    return a * s / t * p, a * t / s * p, -a * s * t * p, -a / (s * t) * p


def _pt_scalars(pt: AdditionPoint, ctx):
    qb = as_qbase(pt.q, ctx)
    if ctx.exact and qb.p is None:
        raise UnsupportedInExactMode("exact mode needs q to be the square of a rational")
    if pt.x is None:
        w = ctx.num(pt.w)
        x = (w + 1 / w) / 2
    else:
        x = pt.x if isinstance(pt.x, complex) else ctx.num(pt.x)
    return qb, ctx.num(pt.a), ctx.num(pt.s), ctx.num(pt.t), x


def addition_lhs(n: int, pt: AdditionPoint, form: str = "r", ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """r_n or p_n at the four composite parameters (a s/t, a t/s, -a s t, -a/(s t)) q^{1/2}."""
    qb, a, s, t, x = _pt_scalars(pt, ctx)
    return _addition_lhs(n, x, a, s, t, qb, form, ctx)


def _addition_lhs(n, x, a, s, t, qb, form, ctx):
    params = addition_params(a, s, t, qb)
    if form == "r":
        return aw_r_stable(n, x, *params, qb, ctx)
    if form == "p":
        return aw_p_raw(n, x, *params, qb, ctx)
    raise ValueError("form must be 'r' or 'p'")


def _two_phi_two(m, k, a2, T, qb, ctx):
    """2phi2(q^{-m}, a^4 q^{m+2k+1}; a^2 q^{k+1}, -a^2 T q^{k+1}; q, -T q)."""
    c = a2 * qb.q ** (k + 1)
    return rational_p_raw(m, c, c, T, qb, ctx)


def addition_rhs(n: int, pt: AdditionPoint, form: str = "r", ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """The k-sum expansion in ultraspherical-case polynomials r_k or p_k."""
    qb, a, s, t, x = _pt_scalars(pt, ctx)
    return _addition_rhs(n, x, a, s, t, qb, form, ctx)


def _addition_rhs(n, x, a, s, t, qb, form, ctx, perturb: float = 0.0):
    if a == 0:
        raise PoleError("the expansion needs a != 0")
    q, p = qb.q, qb.p
    a2 = a * a
    a4 = a2 * a2
    u, v = s * s, 1 / (t * t)
    total = 0
    terms = []
    for k in range(n + 1):
        m = n - k
        f1 = _two_phi_two(m, k, a2, u, qb, ctx)
        f2 = _two_phi_two(m, k, a2, v, qb, ctx)
        if form == "r":
            # (1 + a^2)(1 - a^2 q^k)/(1 - a^4 q^k) is 1 at k = 0, also at a = 1
            lead = 1 if k == 0 else _div((1 + a2) * (1 - a2 * q**k), 1 - a4 * q**k)
            coef = lead * _div(
                poch([q ** (-n), a4 * q, a4 * q ** (n + 1)], q, k) * (s / (a2 * t) * p) ** k,
                poch(q, q, k) * poch(a2 * q, q, k) ** 2 * poch([-a2 * u * q, -a2 * v * q], q, k),
            )
            basis = aw_r_stable(k, x, a, -a, a * p, -a * p, qb, ctx)
        elif form == "p":
            coef = _div(
                a ** m * poch(a2 * q ** (k + 1), q, m) * p**k
                * poch([q ** (-n), a4 * q ** (n + 1)], q, k)
                * poch([-a2 * u * q ** (k + 1), -a2 * v * q ** (k + 1)], q, m),
                poch([q, a4 * q**k], q, k) * (s / t) ** m,
            )
            basis = aw_p_raw(k, x, a, -a, a * p, -a * p, qb, ctx)
        else:
            raise ValueError("form must be 'r' or 'p'")
        terms.append(coef * f1 * f2 * basis)
    if perturb:
        # the largest term is nonzero whenever the sum is, so the control always bites
        big = max(range(n + 1), key=lambda k: magnitude(terms[k]))
        terms[big] = terms[big] * (1 + perturb)
    for term in terms:
        total = total + term
    if form == "r":
        pref = (-1) ** n * a2**n * p ** (n * (n + 1))
    else:
        pref = (-1) ** n * p ** (n * n)
    return pref * total


def fourier_rhs(n: int, s, t, theta_point: dict, q, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """The a = 1 expansion in cos(k theta) = T_k(x).

    Uses the shifted-factorial block (-q^{k+1}s^2, -q^{k+1}t^{-2}; q)_{n-k} (s/t)^{k-n}
    and cosine weights 2 - delta_{k,0}; with p_k(x; 1, -1, q^{1/2}, -q^{1/2}) =
    2 (q^k;q)_k T_k(x) this is term by term the general formula at a = 1.
    """
    qb = as_qbase(q, ctx)
    qq, p = qb.q, qb.p
    s, t = ctx.num(s), ctx.num(t)
    x = _x_of(theta_point, ctx)
    u, v = s * s, 1 / (t * t)
    total = 0
    for k in range(n + 1):
        m = n - k
        c = qq ** (k + 1)
        f1 = rational_p_raw(m, c, c, u, qb, ctx)
        f2 = rational_p_raw(m, c, c, v, qb, ctx)
        coef = _div(
            p**k * poch([qq ** (n + 1), qq ** (-n)], qq, k) * poch([-c * u, -c * v], qq, m),
            poch(qq, qq, k) ** 2 * (s / t) ** m,
        )
        total = total + coef * f1 * f2 * (1 if k == 0 else 2) * chebyshev_t(k, x)
    return (-1) ** n * p ** (n * n) * poch(qq, qq, n) * total


# ------------------------------------------------------- Rahman-Verma


def _ultra4(a, qb):
    return a, a * qb.p, -a, -a * qb.p


def rv_sides(n: int, a, point: dict, q, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """Both sides of the Rahman-Verma addition formula at angles theta, phi, psi."""
    qb = as_qbase(q, ctx)
    qq, p = qb.q, qb.p
    a = ctx.num(a)
    x, _ = angle(point, "theta", ctx)
    x1, w1 = angle(point, "phi", ctx)
    x2, w2 = angle(point, "psi", ctx)
    lhs = aw_p_raw(n, x, *_ultra4(a, qb), qb, ctx)
    a2 = a * a
    a4 = a2 * a2
    total = 0
    for k in range(n + 1):
        m = n - k
        # (a^4 q^{-1}; q)_k / (a^4 q^{-1}; q)_{2k} = 1 / (a^4 q^{k-1}; q)_k
        coef = _div(
            poch(qq, qq, n) * poch([a4 * qq**n, a2 * p, -a2 * p, -a2], qq, k) * a**m,
            poch(qq, qq, k) * poch(qq, qq, m) * poch(a4 * qq ** (k - 1), qq, k)
            * poch([a2 * p, -a2 * p, -a2], qq, n),
        )
        ak = a * p**k
        f1 = aw_p_raw(m, x1, ak, ak * p, -ak, -ak * p, qb, ctx)
        f2 = aw_p_raw(m, x2, ak, ak * p, -ak, -ak * p, qb, ctx)
        inner = aw_p_raw(k, x, a * w1 * w2, a / (w1 * w2), a * w1 / w2, a * w2 / w1, qb, ctx)
        total = total + coef * f1 * f2 * inner
    return lhs, _real_if_close(total)


# ------------------------------------------------------------ classical


def geg_sides(n: int, lam, phi_: float, psi: float, theta: float, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """Classical addition formula at the composite argument, with the lambda = 1/2 limit form."""
    lam = ctx.num(lam)
    cf, sf = math.cos(phi_), math.sin(phi_)
    cp, sp = math.cos(psi), math.sin(psi)
    X = cf * cp + sf * sp * math.cos(theta)
    lhs = ultra_classical(n, lam, X, ctx)
    total = 0
    for k in range(n + 1):
        # (2 lam + 2k - 1)/(2 lam - 1)_{n+k+1}; the k = 0 factor reduces to 1/(2 lam)_n
        if k == 0:
            c = math.factorial(n) / pochhammer(2 * lam, n)
            last = 1
        else:
            c = 4**k * (2 * lam + 2 * k - 1) * math.factorial(n - k) * pochhammer(lam, k) ** 2 / pochhammer(2 * lam, n + k)
            last = ultra_over_2lm1(k, lam, math.cos(theta), ctx)
        total = total + (
            c * (sf * sp) ** k * ultra_classical(n - k, lam + k, cf, ctx) * ultra_classical(n - k, lam + k, cp, ctx) * last
        )
    return lhs, total


def geg_raw_sides(n: int, lam, phi_: float, psi: float, theta: float, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """The same expansion written with the transformed argument on the last factor."""
    lam = ctx.num(lam)
    cf, sf = math.cos(phi_), math.sin(phi_)
    cp, sp = math.cos(psi), math.sin(psi)
    ct = math.cos(theta)
    lhs = ultra_classical(n, lam, ct, ctx)
    y = (ct - cf * cp) / (sf * sp)
    total = 0
    for k in range(n + 1):
        if k == 0:
            c = math.factorial(n) / pochhammer(2 * lam, n)
            last = 1
        else:
            c = 4**k * (2 * lam + 2 * k - 1) * math.factorial(n - k) * pochhammer(lam, k) ** 2 / pochhammer(2 * lam, n + k)
            last = ultra_over_2lm1(k, lam, y, ctx)
        total = total + (
            c * (sf * sp) ** k * ultra_classical(n - k, lam + k, cf, ctx) * ultra_classical(n - k, lam + k, cp, ctx) * last
        )
    return lhs, total


# -------------------------------------------------- Bateman-type product


def bateman_sides(n: int, a, point: dict, q, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """Product of two ultraspherical-case r_n's and its single-sum expansion.

    The terminating 4phi3's cancel heavily, so double mode evaluates at guard
    precision and rounds.
    """
    if ctx.mode == "double":
        lhs, rhs = bateman_sides(n, a, point, q, guard_context(ctx))
        return round_to(lhs, ctx), _real_if_close(round_to(rhs, ctx))
    qb = as_qbase(q, ctx)
    qq, p = qb.q, qb.p
    a = ctx.num(a)
    x1, w1 = angle(point, "phi", ctx)
    x2, w2 = angle(point, "psi", ctx)
    ultra = _ultra4(a, qb)
    lhs = aw_r_stable(n, x1, *ultra, qb, ctx) * aw_r_stable(n, x2, *ultra, qb, ctx)
    a2 = a * a
    a4 = a2 * a2
    e = w1 / w2
    total = 0
    for m in range(n + 1):
        outer = _div(
            poch([qq ** (-n), a4 * qq**n, -p / e, -a2 * e * p], qq, m) * qq**m,
            poch([qq, a2 * p, -a2 * p, -a2 * qq], qq, m),
        )
        inner = phi_eval(
            phi(
                [qq ** (-m), a2, a2 * w1 * w1, a2 / (w2 * w2)],
                [a4, -a2 * e * p, -e * p / qq**m],
                qq, qq, m,
            ),
            ctx,
        )
        total = total + outer * inner
    rhs = _div(1 + a2 * qq**n, 1 + a2) * (-1) ** n / p**n * total
    return lhs, _real_if_close(rhs)


# ------------------------------------- connection coefficients, special case


def conn_spec_coefficient(n: int, k: int, a, s, t, qb: QBase, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """Closed form of A_{n,k} for the addition-formula parameters (single sum of 4phi3's)."""
    if ctx.mode == "double":
        work = guard_context(ctx)
        val = conn_spec_coefficient(n, k, work.num(a), work.num(s), work.num(t), as_qbase(qb, work), work)
        return round_to(val, ctx)
    q, p = qb.q, qb.p
    a2 = a * a
    a4 = a2 * a2
    # (1 - a^4 q^{2k}) / (1 - a^4 q^k) is 1 at k = 0
    ratio = 1 if k == 0 else _div(1 - a4 * q ** (2 * k), 1 - a4 * q**k)
    pref = (-1) ** n * s**n / t**n * p ** (n * (2 * k + 2 - n)) * ratio * _div(
        (1 + a2) * poch([q ** (-n), a4 * q], q, k) * poch(a4 * q ** (n + 1), q, n) ** 2,
        (1 + a2 * q**n) * poch([q, a4 * q ** (n + 1)], q, k) * poch(a2 * q, q, n) ** 2
        * poch([-s * s * a2 * q, -a2 * q / (t * t)], q, n),
    )
    qn = q**n
    total = 0
    for m in range(n - k + 1):
        outer = _div(
            poch([q ** (k - n), 1 / (a4 * qn * q**k), s / t * p, t / (s * a2 * qn) * p], q, m) * q**m,
            poch([q, p / (a2 * qn), -p / (a2 * qn), -q / (a2 * qn)], q, m),
        )
        if outer == 0:
            continue
        inner = phi_eval(
            phi(
                [q ** (-m), 1 / (a2 * qn), -1 / (a2 * s * s * qn), -t * t / (a2 * qn)],
                [1 / (a4 * qn * qn), t / (s * a2 * qn) * p, t / s * p / q**m],
                q, q, m,
            ),
            ctx,
        )
        total = total + outer * inner
    return pref * total


def conn_spec_general(n: int, k: int, a, s, t, qb: QBase, ctx: ArithmeticContext = DEFAULT_CONTEXT,
                      method: str = "phi43-2.10"):
    """The same coefficient from the general connection machinery."""
    params = ConnectionParams(*addition_params(a, s, t, qb), a, a * qb.p, -a * qb.p, -a, qb)
    return connection_A(n, k, params, method, ctx)


def conn_spec_sides(n: int, pt: AdditionPoint, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    qb, a, s, t, x = _pt_scalars(pt, ctx)
    lhs = _addition_lhs(n, x, a, s, t, qb, "r", ctx)
    rhs = 0
    for k in range(n + 1):
        rhs = rhs + conn_spec_coefficient(n, k, a, s, t, qb, ctx) * aw_r_stable(k, x, a, -a, a * qb.p, -a * qb.p, qb, ctx)
    return lhs, rhs


# ------------------------------------- the route through formal arguments


def _string_e4(m: int, b, u, qb: QBase, ctx):
    """r_m(x; b, b q^{1/2}, -b, -b q^{1/2}) / w^m in its 2phi2 form, as a function of u = w^{-2}."""
    if m == 0:
        return ctx.num(1)
    q = qb.q
    b2 = b * b
    b4 = b2 * b2
    q1m = q ** (1 - m)
    pref = _div(poch([b2, u * q1m / b2], q, m) * b**m, poch(b4, q, m))
    return pref * phi_eval(phi([q ** (-m), q1m / b4], [q1m / b2, u * q1m / b2], q, u * q, m), ctx)


def add_via_217_rhs(n: int, pt: AdditionPoint, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """Expansion whose r_{n-k} factors sit at (s - 1/s)/(2i) and (1/t - t)/(2i).

    Those arguments correspond to e^{i phi} = i/s and e^{i psi} = i t; the
    two r_{n-k} are taken from their 2phi2 form, where only
    e^{-2i phi} = -s^2, e^{-2i psi} = -t^{-2} and (e^{i phi} e^{i psi})^{n-k} = (-t/s)^{n-k}
    enter, so everything stays real.
    """
    qb, a, s, t, x = _pt_scalars(pt, ctx)
    q, p = qb.q, qb.p
    a2 = a * a
    a4 = a2 * a2
    b = 1 / (a * p**n)
    total = 0
    for k in range(n + 1):
        m = n - k
        # (1 - a^2 q^k)/(1 - a^2) is 1 at k = 0
        lead = 1 if k == 0 else _div(1 - a2 * q**k, 1 - a2)
        coef = lead * (-1) ** k * p ** (k * (2 * n + 1)) * _div(
            poch([q ** (-n), a4], q, k), poch([q, a4 * q ** (n + 1)], q, k)
        )
        pair = (-t / s) ** m * _string_e4(m, b, -s * s, qb, ctx) * _string_e4(m, b, -1 / (t * t), qb, ctx)
        total = total + coef * pair * aw_r_stable(k, x, a, -a, a * p, -a * p, qb, ctx)
    pref = _div(
        s**n * p ** (-n * (n - 1)) * poch(a4 * q ** (n + 1), q, n) ** 2,
        t**n * poch(a2 * q, q, n) ** 2 * poch([-s * s * a2 * q, -a2 * q / (t * t)], q, n),
    )
    return pref * total


# ------------------------------------------------- degenerate expansions


def _imag_scale(point: dict, ctx):
    """u = i s.  ``sigma`` gives u directly (s = -i sigma, real arithmetic)."""
    if "sigma" in point:
        return ctx.num(point["sigma"])
    if ctx.exact:
        raise UnsupportedInExactMode("give sigma (s = -i sigma) in exact mode")
    s = ctx.num(point["s"])
    return ctx.mp.mpc(0, 1) * s if ctx.mode == "extended" else 1j * s


def deg_add_sides(n: int, a, point: dict, q, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """Degenerate addition formula written in u = i s."""
    qb = as_qbase(q, ctx)
    qq, p = qb.q, qb.p
    a = ctx.num(a)
    u = _imag_scale(point, ctx)
    x = _x_of(point, ctx)
    a2 = a * a
    a4 = a2 * a2
    u2 = u * u
    lhs = _div(aw_factor(x, -u * p ** (1 - n), qq, n), poch(a2 * u2 * qq, qq, n))
    total = 0
    for k in range(n + 1):
        coef = (-u * p ** (n + 1) / a) ** k * _div(
            poch([qq ** (-n), a4], qq, k), poch([qq, a2, a2 * u2 * qq], qq, k)
        )
        f = _two_phi_two(n - k, k, a2, -u2, qb, ctx)
        total = total + coef * f * aw_r_stable(k, x, a, a * p, -a * p, -a, qb, ctx)
    return lhs, total


def _sum_until_small(term_fn, ctx, kmax=QBESSEL_MAX_TERMS):
    """Sum term_fn(k), k = 0, 1, ... until three consecutive terms are negligible.

    Returns (value, K) where K is the number of terms used.
    """
    tol = ctx.series_tol
    total = 0
    small = 0
    for k in range(kmax + 1):
        t = term_fn(k)
        total = total + t
        if magnitude(t) <= tol * max(magnitude(total), 1e-300) or t == 0:
            small += 1
            if small >= 3:
                return total, k + 1
        else:
            small = 0
    raise TruncationFailure(f"expansion did not settle within {kmax} terms")


def qbessel_deg_sides(a, point: dict, q, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """Infinite degenerate expansion; returns (lhs, rhs, K)."""
    qb = as_qbase(q, ctx)
    qq, p = qb.q, qb.p
    a = ctx.num(a)
    u = _imag_scale(point, ctx)
    x = _x_of(point, ctx)
    a2 = a * a
    a4 = a2 * a2
    lhs = aw_factor_infinite(x, -u * p, qq, ctx)

    def term(k):
        c = a2 * qq ** (k + 1)
        zero_phi_one = phi_eval(phi([], [c], qq, u * u * qq ** (k + 1)), ctx)
        coef = (u / a) ** k * p ** (k * k) * poch(a4, qq, k) / poch([qq, a2], qq, k)
        return coef * zero_phi_one * aw_r_stable(k, x, a, a * p, -a * p, -a, qb, ctx)

    rhs, K = _sum_until_small(term, ctx)
    return lhs, rhs, K


def qbessel_deg_j_rhs(alpha, point: dict, q, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """The same expansion in Jackson q-Bessel functions and C_k(x; q^alpha | q); returns (rhs, K)."""
    if ctx.exact:
        raise UnsupportedInExactMode("q-Bessel expansions are nonterminating")
    qb = as_qbase(q, ctx)
    qq = qb.q
    alpha = ctx.num(alpha)
    if not alpha > 0:
        raise DomainError("this form needs alpha > 0")
    s = ctx.num(point["s"])
    _, w = angle(point, "theta", ctx) if "theta" in point or "w_theta" in point else (None, None)
    if w is None:
        x = ctx.num(point["x"])
        w = complex(x, math.sqrt(max(0.0, 1 - float(x) ** 2)))
    qa = qq**alpha
    iu = ctx.mp.mpc(0, 1) if ctx.mode == "extended" else 1j
    arg = 2 * s * qq ** (-alpha / 2)

    def term(k):
        return (
            iu**k * qq ** (k * k / 2 + k * alpha / 2) * (1 - qa * qq**k) / (1 - qa)
            * qbessel2(alpha + k, arg, qb, ctx) * cq_ultra_rogers(k, w, qa, qb, ctx)
        )

    total, K = _sum_until_small(term, ctx)
    pref = qq ** (alpha * alpha / 2) / s**alpha * qpoch_infinite(qq, qq, ctx) / qpoch_infinite(qa * qq, qq, ctx)
    return pref * total, K


def qbessel_add_rhs(point: dict, q, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """Expansion of the Askey-Wilson q-Bessel function; returns (rhs, K)."""
    qb = as_qbase(q, ctx)
    qq, p = qb.q, qb.p
    a, s, t = (ctx.num(point[k]) for k in ("a", "s", "t"))
    _check_qbessel_domain(a, s, t)
    x = _x_of(point, ctx)
    a2 = a * a
    a4 = a2 * a2

    def term(k):
        c = a2 * qq ** (k + 1)
        j1 = phi_eval(phi([], [c], qq, -s * s * qq ** (k + 1)), ctx)
        j2 = phi_eval(phi([], [c], qq, -qq ** (k + 1) / (t * t)), ctx)
        coef = (-1) ** k * p ** (k * k) * (s / (a * t)) ** k / (
            poch([qq, a2 * qq], qq, k) * poch(a4 * qq**k, qq, k)
        )
        return coef * j1 * j2 * aw_p_raw(k, x, a, -a, a * p, -a * p, qb, ctx)

    total, K = _sum_until_small(term, ctx)
    return total / qpoch_infinite(-1 / (a2 * t * t), qq, ctx), K


def _check_qbessel_domain(a, s, t):
    if not 0 < a < 1:
        raise DomainError("need 0 < a < 1")
    if not 0 < s < 1 / t:
        raise DomainError("need 0 < s < 1/t")


def qbessel_add_lhs(point: dict, q, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    a, s, t = (ctx.num(point[k]) for k in ("a", "s", "t"))
    _check_qbessel_domain(a, s, t)
    if "theta" in point:
        theta = point["theta"]
    else:
        theta = math.acos(float(point["x"]))
    return aw_qbessel(theta, a, s, t, q, ctx)


# ------------------------------------------------- divided-difference check


def dq_lowering_check(n: int, pt: AdditionPoint, ctx: ArithmeticContext = DEFAULT_CONTEXT,
                      tol: float | None = None) -> ResidualReport:
    """Apply D_q to the p-form expansion at degree n and compare with degree n-1 at q^{1/2} a.

    D_q F(w) = (F(q^{1/2} w) - F(q^{-1/2} w)) / (x(q^{1/2} w) - x(q^{-1/2} w)) with
    x(w) = (w + 1/w)/2.  Lowering multiplies by
    K = 2 q^{-(n-1)/2} (1 - q^n)(1 - a^4 q^{n+1}) / (1 - q), since the product of
    the four composite parameters is a^4 q^2.  lhs = D_q of the expansion,
    rhs = K times the lowered expansion; the details also carry D_q of the
    polynomial side and K times the lowered polynomial.
    """
    if n < 1:
        raise ValueError("the lowering check needs n >= 1")
    qb, a, s, t, x = _pt_scalars(pt, ctx)
    q, p = qb.q, qb.p
    if pt.w is not None:
        w = ctx.num(pt.w)
    else:
        if ctx.exact:
            raise UnsupportedInExactMode("exact mode needs w = e^{i theta} on the point")
        w = x + 1j * cmath.sqrt(1 - x * x) if ctx.mode != "extended" else x + ctx.mp.mpc(0, 1) * ctx.mp.sqrt(1 - x * x)
    xp = (p * w + 1 / (p * w)) / 2
    xm = (w / p + p / w) / 2
    dx = xp - xm
    d_rhs = (_addition_rhs(n, xp, a, s, t, qb, "p", ctx) - _addition_rhs(n, xm, a, s, t, qb, "p", ctx)) / dx
    d_lhs = (_addition_lhs(n, xp, a, s, t, qb, "p", ctx) - _addition_lhs(n, xm, a, s, t, qb, "p", ctx)) / dx
    a4 = a**4
    K = 2 * (1 - q**n) * (1 - a4 * q ** (n + 1)) / ((1 - q) * p ** (n - 1))
    low_rhs = K * _addition_rhs(n - 1, x, a * p, s, t, qb, "p", ctx)
    low_lhs = K * _addition_lhs(n - 1, x, a * p, s, t, qb, "p", ctx)
    point = {"n": n, "q": pt.q, "a": pt.a, "s": pt.s, "t": pt.t}
    point.update({"w_theta": pt.w} if pt.w is not None else {"x": pt.x})
    tol = DEFAULT_DOUBLE_TOL if tol is None else tol
    rep = make_report("DQ-LOWER", point, _real_if_close(d_rhs), _real_if_close(low_rhs), ctx.mode, tol,
                      {"dq_poly": _real_if_close(d_lhs), "lowered_poly": _real_if_close(low_lhs), "K": K})
    side = make_report("DQ-LOWER", point, d_lhs, low_lhs, ctx.mode, tol)
    rep.passed = rep.passed and side.passed
    return rep


# ------------------------------------------------------------ q -> 1 scans

LIMIT_IDS = ("ADD->GEG", "QBESSEL-ADD->classical")
LIMIT_DEFAULTS = {
    "ADD->GEG": {"n": 2, "lam": 1.0, "phi": 0.7, "psi": 1.2, "theta": 0.5},
    "QBESSEL-ADD->classical": {"alpha": 1.0, "s": 0.3, "t": 1.5, "theta": 0.7},
}


def default_q_sequence(jmax: int = 10, jmin: int = 2) -> list:
    return [1 - 2.0 ** (-j) for j in range(jmin, jmax + 1)]


def _geg_q_side(point, q, ctx, method="series"):
    n = int(point["n"])
    lam = float(point["lam"])
    a = q ** (lam / 2 - 0.25)
    s, t = math.tan(point["phi"] / 2), math.tan(point["psi"] / 2)
    qb = as_qbase(q, ctx)
    params = addition_params(ctx.num(a), ctx.num(s), ctx.num(t), qb)
    return aw_r_stable(n, ctx.cos(ctx.num(point["theta"])), *params, qb, ctx, method)


def _geg_classical(point, ctx):
    n, lam = int(point["n"]), float(point["lam"])
    X = math.cos(point["phi"]) * math.cos(point["psi"]) + math.sin(point["phi"]) * math.sin(point["psi"]) * math.cos(point["theta"])
    return ultra_classical(n, lam, X, ctx) * math.factorial(n) / pochhammer(2 * lam, n)


def _bessel_q_side(point, q, ctx):
    alpha, s, t = (float(point[k]) for k in ("alpha", "s", "t"))
    return aw_qbessel(point["theta"], q ** (alpha / 2), (1 - q) * s, t / (1 - q), q, ctx)


def _bessel_classical(point, ctx):
    alpha, s, t, th = (float(point[k]) for k in ("alpha", "s", "t", "theta"))
    y = 1 / (t * t) + s * s + 2 * s * math.cos(th) / t
    return float(mpmath.hyp0f1(alpha + 1, -y))


def limit_scan_q_to_1(limit_id: str, target_point: dict | None = None, q_sequence=None,
                      ctx: ArithmeticContext = DEFAULT_CONTEXT) -> list:
    """Gap between the q-side quantity and its classical limit along q_j -> 1.

    ADD->GEG uses a = q^{lam/2 - 1/4}, s = tan(phi/2), t = tan(psi/2) in the
    r-form and compares with C_n^lam(X) n!/(2 lam)_n at the composite
    argument X.  QBESSEL-ADD->classical uses a = q^{alpha/2}, s -> (1-q)s,
    t -> t/(1-q) and compares with 0F1(; alpha+1; -(t^-2 + s^2 + 2 s t^-1 cos theta)).
    Each record's abs_residual is the gap.
    """
    if ctx.exact:
        raise UnsupportedInExactMode("limit scans are floating-point only")
    if limit_id not in LIMIT_IDS:
        raise ValueError(f"unknown limit id {limit_id!r}; choose from {LIMIT_IDS}")
    point = dict(LIMIT_DEFAULTS[limit_id])
    point.update(target_point or {})
    qs = default_q_sequence() if q_sequence is None else list(q_sequence)
    if any(b <= a for a, b in zip(qs, qs[1:])):
        raise ValueError("the q sequence must increase")
    if limit_id == "ADD->GEG":
        target = _geg_classical(point, ctx)
        side = lambda q: _geg_q_side(point, q, ctx)
    else:
        target = _bessel_classical(point, ctx)
        side = lambda q: _bessel_q_side(point, q, ctx)
    out = []
    for q in qs:
        rec = make_report(limit_id, dict(point, q=q), side(q), target, ctx.mode, float("inf"))
        out.append(rec)
    return out


def limit_verdict(reports: list, tail_start: int = 5, final_max: float = 1e-2, jmin: int = 2) -> dict:
    """Monotone-tail verdict: gaps must not increase from j = tail_start on."""
    gaps = [r.abs_residual for r in reports]
    tail = gaps[max(0, tail_start - jmin):]
    decreasing = all(b <= a for a, b in zip(tail, tail[1:]))
    final = gaps[-1] if gaps else 0.0
    # last step ratio; about 1/2 for a gap linear in 1 - q
    ratio = gaps[-1] / gaps[-2] if len(gaps) > 1 and gaps[-2] else 0.0
    return {"gaps": gaps, "decreasing_tail": decreasing, "final_gap": final, "final_ratio": ratio,
            "halving": ratio <= 0.5 * 1.2, "pass": decreasing and final < final_max}


def coefficient_limit_gap(n: int, k: int, lam: float, phi_: float, q: float, which: str = "s",
                          ctx: ArithmeticContext = DEFAULT_CONTEXT) -> float:
    """Gap between a 2phi2 factor of the r-form and its limit C_{n-k}^{lam+k}((-/+)cos) (n-k)!/(2 lam + 2k)_{n-k}.

    ``which="s"`` uses s = tan(phi/2) (limit at cos phi); ``"t"`` uses
    t = tan(phi/2) in the t^{-2} factor (limit at -cos phi).
    """
    qb = as_qbase(q, ctx)
    a2 = q ** (lam - 0.5)
    h = math.tan(phi_ / 2)
    T = h * h if which == "s" else 1 / (h * h)
    val = _two_phi_two(n - k, k, a2, T, qb, ctx)
    c = math.cos(phi_) if which == "s" else -math.cos(phi_)
    m = n - k
    target = ultra_classical(m, lam + k, c, ctx) * math.factorial(m) / pochhammer(2 * lam + 2 * k, m)
    return abs(val - target)


# ---------------------------------------------------------------- catalog

Axes = list  # [(keys tuple, values list)], expanded as a cartesian product

_ADD_AXES = [
    (("q",), [0.09, 0.25, 0.64]),
    (("a",), [0.3, 0.7, 1.0]),
    (("s", "t"), [(0.5, 2.0), (1.3, 0.4), (1.0, 1.0)]),
    (("x",), [-0.9, 0.1, 0.8]),
]


def _n_axis(top: int):
    return (("n",), list(range(top + 1)))


@dataclass(frozen=True)
class IdentityEntry:
    """One catalog identity: domain text, independent side evaluators and default grids."""

    id: str
    anchor: str
    title: str
    domain: str
    lhs: Callable | None
    rhs: Callable | None
    grids: dict  # mode -> Axes
    tol: float = DEFAULT_DOUBLE_TOL
    check: Callable | None = None  # full checker for chain identities
    validate: Callable | None = None
    details: Callable | None = None

    @property
    def modes(self) -> tuple:
        return tuple(m for m in ("double", "exact") if m in self.grids)


def _add_lhs(form):
    def f(point, ctx):
        return addition_lhs(int(point["n"]), AdditionPoint.from_point(point), form, ctx)
    return f


def _add_rhs(form):
    def f(point, ctx, perturb=0.0):
        pt = AdditionPoint.from_point(point)
        qb, a, s, t, x = _pt_scalars(pt, ctx)
        return _addition_rhs(int(point["n"]), x, a, s, t, qb, form, ctx, perturb)
    return f


def _sym_point(point):
    sym = point["sym"]
    s, t = point["s"], point["t"]
    out = dict(point)
    del out["sym"]
    if sym == "swap":
        out["s"], out["t"] = t, s
    elif sym == "s-inv":
        out["s"] = _neg_inv(s)
    elif sym == "t-inv":
        out["t"] = _neg_inv(t)
    else:
        raise DomainError(f"unknown symmetry {sym!r}; use swap, s-inv or t-inv")
    return out


def _neg_inv(v):
    if isinstance(v, str):
        return -1 / Fraction(v)
    if isinstance(v, float):
        return -1 / Fraction(repr(v))
    return -1 / Fraction(v)


def _sym_lhs(point, ctx):
    # the polynomial side only sees a permutation of its parameters, so the
    # content of each symmetry is that the expansion side is unchanged
    base = dict(point)
    del base["sym"]
    return _add_rhs("p")(base, ctx)


def _sym_rhs(point, ctx, perturb=0.0):
    return _add_rhs("p")(_sym_point(point), ctx, perturb)


def _fourier_lhs(point, ctx):
    return _add_lhs("p")(dict(point, a=1), ctx)


def _fourier_rhs(point, ctx):
    return fourier_rhs(int(point["n"]), point["s"], point["t"], point, point["q"], ctx)


def _rv_lhs(point, ctx):
    qb = _qb(point, ctx)
    x, _ = angle(point, "theta", ctx)
    return aw_p_raw(int(point["n"]), x, *_ultra4(_num(point, "a", ctx), qb), qb, ctx)


def _rv_rhs(point, ctx):
    return rv_sides(int(point["n"]), point["a"], point, point["q"], ctx)[1]


def _geg_args(point):
    return int(point["n"]), point["lam"], float(point["phi"]), float(point["psi"]), float(point["theta"])


def _geg_lhs(point, ctx):
    n, lam, f, p_, th = _geg_args(point)
    X = math.cos(f) * math.cos(p_) + math.sin(f) * math.sin(p_) * math.cos(th)
    return ultra_classical(n, lam, X, ctx)


def _geg_rhs(point, ctx):
    return geg_sides(*_geg_args(point), ctx)[1]


def _geg_raw_lhs(point, ctx):
    n, lam, _, _, th = _geg_args(point)
    return ultra_classical(n, lam, math.cos(th), ctx)


def _geg_raw_rhs(point, ctx):
    return geg_raw_sides(*_geg_args(point), ctx)[1]


def _classical_validate(point):
    ClassicalAdditionPoint(point["lam"], float(point["phi"]), float(point["psi"]), float(point["theta"]), int(point["n"]))
    if not float(point["lam"]) > 0:
        raise DomainError("lambda must be positive")


def _bateman_lhs(point, ctx):
    work = guard_context(ctx)
    qb = _qb(point, work)
    a = _num(point, "a", work)
    n = int(point["n"])
    x1, _ = angle(point, "phi", work)
    x2, _ = angle(point, "psi", work)
    u = _ultra4(a, qb)
    return round_to(aw_r_stable(n, x1, *u, qb, work) * aw_r_stable(n, x2, *u, qb, work), ctx)


def _bateman_rhs(point, ctx):
    return bateman_sides(int(point["n"]), point["a"], point, point["q"], ctx)[1]


def _conn_rhs(point, ctx):
    # the expansion sum itself cancels (terms far larger than r_n), so the
    # whole sum runs at guard precision in double mode
    work = guard_context(ctx)
    pt = AdditionPoint.from_point(point)
    qb, a, s, t, x = _pt_scalars(pt, work)
    n = int(point["n"])
    total = 0
    for k in range(n + 1):
        total = total + conn_spec_coefficient(n, k, a, s, t, qb, work) * aw_r_stable(k, x, a, -a, a * qb.p, -a * qb.p, qb, work)
    return round_to(total, ctx)


def _via_rhs(point, ctx):
    return add_via_217_rhs(int(point["n"]), AdditionPoint.from_point(point), ctx)


def _via_validate(point):
    if Fraction(repr(point["a"]) if isinstance(point["a"], float) else point["a"]) ** 2 == 1:
        raise DomainError("this route divides by 1 - a^2; a = +-1 is excluded")


def _deg_lhs(point, ctx):
    qb = _qb(point, ctx)
    n = int(point["n"])
    a = _num(point, "a", ctx)
    u = _imag_scale(point, ctx)
    x = _x_of(point, ctx)
    return _div(aw_factor(x, -u * qb.p ** (1 - n), qb.q, n), poch(a * a * u * u * qb.q, qb.q, n))


def _deg_rhs(point, ctx):
    return deg_add_sides(int(point["n"]), point["a"], point, point["q"], ctx)[1]


def _deg_validate(point):
    a = Fraction(repr(point["a"]) if isinstance(point["a"], float) else point["a"])
    if a * a == 1:
        raise DomainError("a^2 = 1 puts a zero in (a^2;q)_k")


def _qb_add_lhs(point, ctx):
    return qbessel_add_lhs(point, point["q"], ctx)


def _qb_add_rhs(point, ctx):
    return qbessel_add_rhs(point, point["q"], ctx)[0]


def _qb_add_details(point, ctx):
    return {"K": qbessel_add_rhs(point, point["q"], ctx)[1]}


def _qb_add_validate(point):
    a, s, t = (float(point[k]) for k in ("a", "s", "t"))
    _check_qbessel_domain(a, s, t)


def _qb_deg_lhs(point, ctx):
    qb = _qb(point, ctx)
    return aw_factor_infinite(_x_of(point, ctx), -_imag_scale(point, ctx) * qb.p, qb.q, ctx)


def _qb_deg_rhs(point, ctx):
    return qbessel_deg_sides(point["a"], point, point["q"], ctx)[1]


def _qb_deg_validate(point):
    a, q = float(point["a"]), float(point["q"])
    if a == 0:
        raise DomainError("a must be nonzero")
    j = math.log(a * a) / math.log(q) if a * a != 1 else 0.0
    if abs(j - round(j)) < 1e-12 and round(j) <= 0:
        raise DomainError("a^2 = q^{-j} puts a zero in (a^2;q)_k")


def _qb_deg_details(point, ctx):
    return {"K": qbessel_deg_sides(point["a"], point, point["q"], ctx)[2]}


def _qb_j_rhs(point, ctx):
    return qbessel_deg_j_rhs(point["alpha"], point, point["q"], ctx)[0]


def _qb_j_lhs(point, ctx):
    qb = _qb(point, ctx)
    s = _num(point, "s", ctx)
    iu = ctx.mp.mpc(0, 1) if ctx.mode == "extended" else 1j
    return aw_factor_infinite(_x_of(point, ctx), -iu * s * qb.p, qb.q, ctx)


def _qb_j_details(point, ctx):
    """The degenerate expansion at a = q^{alpha/2}, for comparison with the Jackson form."""
    q = float(point["q"])
    a = q ** (float(point["alpha"]) / 2)
    _, rhs, K = qbessel_deg_sides(a, point, point["q"], ctx)
    return {"K": qbessel_deg_j_rhs(point["alpha"], point, point["q"], ctx)[1], "phi01_form": rhs}


def _chain(tid):
    def f(point, ctx, tol, perturb=0.0, flip=False):
        rep = phi_transform_check(tid, point, ctx, tol)
        if perturb or flip:
            rhs = -rep.rhs if flip else rep.rhs * (1 + perturb)
            rep = make_report(tid, point, rep.lhs, rhs, ctx.mode, tol, rep.details)
        return rep
    return f


_RV_TRIPLES = [(0.4, 0.9, 1.4), (1.1, 0.3, 2.0), (2.5, 1.2, 0.7), (0.0, 0.5, 0.5), (3.0, 2.2, 1.6)]
_RV_W = [("2/3", "5/7", "3/2"), ("-3/4", "4/3", "2/5"), ("5/2", "-2/3", "7/5"), ("1", "3/5", "3/5"), ("-1/2", "9/7", "-4/3")]
_PAIRS = [(0.9, 1.4), (0.3, 2.0), (1.2, 1.2), (2.5, 0.7), (1.7, 0.2)]
_PAIRS_W = [("2/3", "5/7"), ("-3/4", "4/3"), ("5/2", "5/2"), ("-1/2", "9/7"), ("3/5", "-7/3")]
_QB_ADD_POINTS = [
    {"a": 0.5, "s": 0.3, "t": 2.0, "theta": 1.1, "q": 0.25},
    {"a": 0.8, "s": 0.2, "t": 3.0, "theta": 0.4, "q": 0.25},
    {"a": 0.6, "s": 0.5, "t": 1.5, "theta": 2.0, "q": 0.5},
    {"a": 0.3, "s": 0.1, "t": 5.0, "theta": 2.9, "q": 0.64},
    {"a": 0.9, "s": 0.6, "t": 1.2, "theta": 0.0, "q": 0.09},
]


def _fixed(points):
    keys = tuple(sorted(points[0]))
    return [(keys, [tuple(p[k] for k in keys) for p in points])]


def _build_catalog() -> dict:
    add_exact = [_n_axis(6)] + _ADD_AXES
    entries = [
        IdentityEntry("ADD-R", "Eq 1.09, Thm 1.12", "addition formula for continuous q-ultraspherical polynomials, r-normalization",
                      "q in (0,1), a != 0, s, t != 0, x real (any rational x exactly)",
                      _add_lhs("r"), _add_rhs("r"), {"double": [_n_axis(8)] + _ADD_AXES, "exact": add_exact}),
        IdentityEntry("ADD-P", "Eq 1.20, Thm 1.12", "addition formula for continuous q-ultraspherical polynomials, p-normalization",
                      "q in (0,1), a != 0, s, t != 0, x real (any rational x exactly)",
                      _add_lhs("p"), _add_rhs("p"), {"double": [_n_axis(8)] + _ADD_AXES, "exact": add_exact}),
        IdentityEntry("ADD-SYM", "Eq 1.20 symmetries", "invariance of the expansion side under (s,t)->(t,s), s->-1/s, t->-1/t",
                      "as ADD-P; expansion at the point against the expansion after the symmetry named by sym",
                      _sym_lhs, _sym_rhs,
                      {m: [_n_axis(5)] + _ADD_AXES + [(("sym",), ["swap", "s-inv", "t-inv"])] for m in ("double", "exact")}, tol=1e-12),
        IdentityEntry("FOURIER", "Eq 1.21", "a = 1 case written as a cosine expansion",
                      "q in (0,1), s, t != 0, x real",
                      _fourier_lhs, _fourier_rhs,
                      {m: [_n_axis(6), (("q",), [0.09, 0.25, 0.64]), (("s", "t"), [(0.5, 2.0), (1.3, 0.4), (0.8, 1.7)]),
                           (("x",), [-0.9, 0.1, 0.8])] for m in ("double", "exact")}),
        IdentityEntry("RV", "Eq 1.01", "Rahman-Verma addition formula for continuous q-ultraspherical polynomials",
                      "a^4 q^{k-1} != q^{-j} (so a != 1); angles theta, phi, psi real or rational w_*",
                      _rv_lhs, _rv_rhs,
                      {"double": [_n_axis(6), (("q",), [0.25, 0.64]), (("a",), [0.3, 0.7]), (("theta", "phi", "psi"), _RV_TRIPLES)],
                       "exact": [_n_axis(5), (("q",), [0.25, 0.64]), (("a",), [0.3, 0.7]), (("w_theta", "w_phi", "w_psi"), _RV_W)]}),
        IdentityEntry("GEG", "Eq 1.05 with Eq 1.08", "Gegenbauer addition formula at the composite argument",
                      "lambda > 0 (lambda = 1/2 via the cosine limit), sin phi, sin psi > 0",
                      _geg_lhs, _geg_rhs,
                      {"double": [_n_axis(6), (("lam",), [0.5, 0.8, 1.5]), (("phi", "psi", "theta"), [(0.7, 1.2, 0.5), (2.0, 0.4, 2.8), (1.5, 1.5, 1.0)])]},
                      validate=_classical_validate),
        IdentityEntry("GEG-RAW", "Eq 1.04", "Gegenbauer addition formula with the transformed argument",
                      "lambda > 0, sin phi, sin psi > 0; the transformed argument may leave [-1, 1]",
                      _geg_raw_lhs, _geg_raw_rhs,
                      {"double": [_n_axis(6), (("lam",), [0.5, 0.8, 1.5]), (("phi", "psi", "theta"), [(0.7, 1.2, 0.5), (2.0, 0.4, 2.8), (1.5, 1.5, 1.0)])]},
                      validate=_classical_validate),
        IdentityEntry("BATEMAN", "Eq 2.11", "Bateman-type product formula for two ultraspherical-case r_n",
                      "a != 0, a^2 q^{1/2}, -a^2 q^{1/2}, -a^2 q never q^{-j}; phi, psi real or rational w_*",
                      _bateman_lhs, _bateman_rhs,
                      {"double": [_n_axis(6), (("q",), [0.25, 0.64]), (("a",), [0.3, 0.7]), (("phi", "psi"), _PAIRS)],
                       "exact": [_n_axis(5), (("q",), [0.25, 0.64]), (("a",), [0.3, 0.7]), (("w_phi", "w_psi"), _PAIRS_W)]}),
        IdentityEntry("CONN-SPEC", "Eqs 2.12/2.13", "connection formula specialized to the addition-formula parameters",
                      "as ADD-R",
                      _add_lhs("r"), _conn_rhs,
                      {"double": [_n_axis(6)] + _ADD_AXES, "exact": [_n_axis(4)] + _ADD_AXES}),
        IdentityEntry("ADD-VIA-2.17", "Eq 2.17", "expansion with r_{n-k} at the formal arguments (s-1/s)/2i and (1/t-t)/2i",
                      "as ADD-R with a^2 != 1",
                      _add_lhs("r"), _via_rhs,
                      {"double": [_n_axis(8)] + [(k, v if k != ("a",) else [0.3, 0.7, 1.3]) for k, v in _ADD_AXES],
                       "exact": [_n_axis(5)] + [(k, v if k != ("a",) else [0.3, 0.7, 1.3]) for k, v in _ADD_AXES]},
                      validate=_via_validate),
        IdentityEntry("STRING", "Eq 2.14", "4phi3 -> 2phi1 -> 2phi2 string for ultraspherical-case r_n",
                      "a^4 != q^{-j}, a != 0; theta real or rational w_theta",
                      None, None,
                      {"double": [_n_axis(5), (("q",), [0.09, 0.25, 0.64]), (("a",), [0.3, 0.6]), (("theta",), [0.4, 1.0, 2.6])],
                       "exact": [_n_axis(5), (("q",), [0.09, 0.25, 0.64]), (("a",), [0.3, 0.6]), (("w_theta",), ["2/3", "5/4", "-3/7"])]},
                      tol=1e-12, check=_chain("STRING")),
        IdentityEntry("DEG-ADD", "Eq 2.20", "degenerate addition formula (t -> i a q^{n/2})",
                      "a^2 != 1, a != 0; s real (complex sides) or sigma = i s real",
                      _deg_lhs, _deg_rhs,
                      {"double": [_n_axis(6), (("q",), [0.09, 0.25, 0.64]), (("a",), [0.3, 0.7]), (("s",), [0.5, 1.3]), (("x",), [-0.9, 0.1, 0.8])],
                       "exact": [_n_axis(5), (("q",), [0.09, 0.25, 0.64]), (("a",), [0.3, 0.7]), (("sigma",), [0.5, 1.3]), (("x",), [-0.9, 0.1, 0.8])]},
                      validate=_deg_validate),
        IdentityEntry("QBESSEL-ADD", "Eq 2.24", "addition formula for the Askey-Wilson q-Bessel function",
                      "0 < a < 1, 0 < s < 1/t, theta real",
                      _qb_add_lhs, _qb_add_rhs, {"double": _fixed(_QB_ADD_POINTS)},
                      validate=_qb_add_validate, details=_qb_add_details),
        IdentityEntry("QBESSEL-DEG", "Eq 2.26", "degenerate q-Bessel addition formula",
                      "a != 0, a^2 != q^{-j}; s real (or sigma = i s), x real",
                      _qb_deg_lhs, _qb_deg_rhs,
                      {"double": [(("q",), [0.09, 0.25, 0.64]), (("a",), [0.3, 0.7, 1.3]), (("s",), [0.4, 1.5]), (("theta",), [0.3, 1.9])]},
                      validate=_qb_deg_validate, details=_qb_deg_details),
        IdentityEntry("QBESSEL-DEG-J", "Eq 2.27", "degenerate q-Bessel expansion in Jackson q-Bessel functions",
                      "alpha > 0, s > 0, theta real",
                      _qb_j_lhs, _qb_j_rhs,
                      {"double": [(("q",), [0.09, 0.25, 0.64]), (("alpha",), [0.5, 1.0, 2.5]), (("s",), [0.4, 1.5]), (("theta",), [0.3, 1.9])]},
                      details=_qb_j_details),
        IdentityEntry("RAT-SYM", "Eq 3.14", "five-member symmetry chain of the rational biorthogonal functions",
                      "alpha, beta > -1, t > 0",
                      None, None,
                      {"double": [_n_axis(5), (("q",), [0.25, 0.64]), (("alpha", "beta"), [(0.3, 0.7), (-0.5, 1.5), (0.5, -0.2)]), (("t",), [0.4, 1.5])],
                       "exact": [_n_axis(5), (("q",), [0.25, 0.64]), (("alpha", "beta"), [(0.5, 0.0), (-0.5, 1.5), (1.0, -0.5)]), (("t",), [0.4, 1.5])]},
                      tol=1e-12, check=_chain("RAT-SYM")),
    ]
    entries.extend(_supporting_entries())
    return {e.id: e for e in entries}


# parameter sets for the connection suites: (alpha, beta, gamma, delta | a, b, c, d), q
CONN_SETS = {
    "P1": (("3/10", "1/2", "-2/5", "7/10"), ("1/5", "3/5", "-1/2", "9/20"), "1/4"),
    "P2": (("7/10", "-3/10", "1/5", "9/10"), ("1/2", "2/5", "-3/5", "1/10"), "16/25"),
    "P3": (("6/5", "1/2", "-7/10", "3/10"), ("4/5", "-1/5", "3/5", "2/5"), "9/100"),
}
_PERMS = ["bacd", "cdab", "dcba", "adbc"]
_AW_SETS = [("3/10", "-1/2", "7/10", "1/5"), ("9/10", "2/5", "-3/5", "1/4"), ("1/2", "1/2", "-1/3", "6/5")]


def _conn_params(point, ctx):
    target, source, q = CONN_SETS[point["set"]]
    return ConnectionParams(*(ctx.num(Fraction(v)) for v in target + source), as_qbase(ctx.num(Fraction(q)), ctx))


def _conn_lhs(point, ctx):
    return connection_A(int(point["n"]), int(point["k"]), _conn_params(point, ctx), "sum-2.04", ctx)


def _conn_method_rhs(point, ctx):
    return connection_A(int(point["n"]), int(point["k"]), _conn_params(point, ctx), point["method"], ctx)


def _conn_validate(point):
    if not 0 <= int(point["k"]) <= int(point["n"]):
        raise DomainError("need 0 <= k <= n")
    if point["set"] not in CONN_SETS:
        raise DomainError(f"unknown parameter set {point['set']!r}; choose from {sorted(CONN_SETS)}")


def _conn_sum_lhs(point, ctx):
    work = guard_context(ctx)
    P = _conn_params(point, work)
    x = work.num(point["x"])
    return round_to(aw_r_stable(int(point["n"]), x, P.alpha, P.beta, P.gamma, P.delta, P.q, work), ctx)


def _conn_sum_rhs(point, ctx):
    # the connection sum cancels like the coefficients do, so it runs at guard precision
    work = guard_context(ctx)
    P = _conn_params(point, work)
    x = work.num(point["x"])
    n = int(point["n"])
    total = 0
    for k in range(n + 1):
        total = total + connection_A(n, k, P, "phi43-2.10", work) * aw_r_stable(k, x, P.a, P.b, P.c, P.d, P.q, work)
    return round_to(total, ctx)


def _aw_series(point, order, ctx):
    work = guard_context(ctx)
    vals = dict(zip("abcd", (work.num(Fraction(v)) for v in _AW_SETS[int(point["set"])])))
    qb = as_qbase(work.num(point["q"]), work)
    args = [vals[ch] for ch in order]
    return round_to(aw_p_raw(int(point["n"]), work.num(point["x"]), *args, qb, work, method="series"), ctx)


def _perm_validate(point):
    if sorted(point["perm"]) != list("abcd"):
        raise DomainError("perm must be a rearrangement of 'abcd'")


def _dq_check(point, ctx, tol, perturb=0.0, flip=False):
    rep = dq_lowering_check(int(point["n"]), AdditionPoint.from_point(point), ctx, tol)
    if perturb or flip:
        rhs = -rep.rhs if flip else rep.rhs * (1 + perturb)
        rep = make_report("DQ-LOWER", rep.point, rep.lhs, rhs, ctx.mode, tol, rep.details)
    return rep


def _supporting_entries() -> list:
    conn_axes = {m: [(("set",), list(CONN_SETS)), (("n", "k"), [(n, k) for n in range(top + 1) for k in range(n + 1)]),
                     (("method",), ["sum-2.05", "phi43-2.09", "phi43-2.10"])]
                 for m, top in (("double", 6), ("exact", 6))}
    aw_axes = [(("set",), [0, 1, 2]), _n_axis(6), (("q",), [0.09, 0.25, 0.64]), (("x",), [-0.9, 0.1, 0.8]),
               (("perm",), _PERMS)]
    dq_axes = {"double": [(("n",), list(range(1, 7)))] + _ADD_AXES,
               "exact": [(("n",), list(range(1, 5)))] + [ax for ax in _ADD_AXES if ax[0] != ("x",)]
               + [(("w_theta",), ["2/3", "-5/4"])]}
    return [
        IdentityEntry("CONN-METHODS", "Eqs 2.04/2.05/2.09/2.10", "A_{n,k} by the double sum against each other route",
                      "all interior denominators nonzero; named parameter sets P1-P3",
                      _conn_lhs, _conn_method_rhs, conn_axes, tol=1e-10, validate=_conn_validate),
        IdentityEntry("CONN-SUM", "Eq 1.10", "connection expansion of r_n(alpha, beta, gamma, delta) in r_k(a, b, c, d)",
                      "named parameter sets P1-P3, x real",
                      _conn_sum_lhs, _conn_sum_rhs,
                      {m: [(("set",), list(CONN_SETS)), _n_axis(6), (("x",), [-0.9, 0.1, 0.8])] for m in ("double", "exact")},
                      tol=1e-10),
        IdentityEntry("AW-PERM", "Eq 1.02", "symmetry of p_n(x; a, b, c, d) in its four parameters",
                      "the 4phi3 with the first parameter listed in perm in the leading role",
                      lambda point, ctx: _aw_series(point, "abcd", ctx),
                      lambda point, ctx: _aw_series(point, point["perm"], ctx),
                      {"double": aw_axes, "exact": aw_axes}, tol=1e-12, validate=_perm_validate),
        IdentityEntry("DQ-LOWER", "Eq 1.20 under D_q", "divided difference of the addition formula lowers n and a",
                      "as ADD-P with n >= 1",
                      None, None, dq_axes, check=_dq_check),
    ]


CATALOG: dict = _build_catalog()
IDENTITY_IDS = tuple(CATALOG)


def expand_grid(axes: Axes, overrides: dict | None = None) -> list:
    """Cartesian product of the axes after applying overrides (key -> list of values).

    Overriding one key of a joint axis splits that axis into independent ones.
    """
    axes = list(axes)
    for key, values in (overrides or {}).items():
        found = False
        new_axes = []
        for keys, vals in axes:
            if key in keys:
                found = True
                if len(keys) == 1:
                    new_axes.append((keys, list(values)))
                    continue
                for i, k in enumerate(keys):
                    if k == key:
                        new_axes.append(((k,), list(values)))
                    else:
                        seen = []
                        for v in vals:
                            if v[i] not in seen:
                                seen.append(v[i])
                        new_axes.append(((k,), seen))
            else:
                new_axes.append((keys, vals))
        if not found:
            new_axes.append(((key,), list(values)))
        axes = new_axes
    points = [{}]
    for keys, vals in axes:
        nxt = []
        for p in points:
            for v in vals:
                q = dict(p)
                if len(keys) == 1:
                    q[keys[0]] = v
                else:
                    q.update(zip(keys, v))
                nxt.append(q)
        points = nxt
    return points


def default_points(identity_id: str, mode: str, overrides: dict | None = None) -> list:
    entry = CATALOG[identity_id]
    if mode not in entry.grids:
        return []
    return expand_grid(entry.grids[mode], overrides)


def identity_residual(identity_id: str, point: dict, ctx: ArithmeticContext = DEFAULT_CONTEXT,
                      tol: float | None = None, perturb: float = 0.0, flip_sign: bool = False) -> ResidualReport:
    """Evaluate both sides of a catalog identity at ``point`` and report.

    ``perturb`` scales one expansion coefficient (addition formulas) or the
    whole right-hand side by 1 + perturb, and ``flip_sign`` negates the
    right-hand side; both exist for negative controls.
    """
    if identity_id not in CATALOG:
        raise KeyError(f"unknown identity {identity_id!r}")
    entry = CATALOG[identity_id]
    tol = entry.tol if tol is None else tol
    if ctx.exact and isinstance(perturb, float):
        perturb = Fraction(repr(perturb))
    if entry.validate is not None:
        entry.validate(point)
    if entry.check is not None:
        return entry.check(point, ctx, tol, perturb, flip_sign)
    lhs = entry.lhs(point, ctx)
    if perturb and identity_id in ("ADD-R", "ADD-P", "ADD-SYM"):
        rhs = entry.rhs(point, ctx, perturb=perturb)
    else:
        rhs = entry.rhs(point, ctx)
        if perturb:
            rhs = rhs * (1 + perturb)
    if flip_sign:
        rhs = -rhs
    details = entry.details(point, ctx) if entry.details is not None else {}
    return make_report(identity_id, point, _real_if_close(lhs), _real_if_close(rhs), ctx.mode, tol, details)
