"""The Askey-Roy weight, quadrature on (0, inf), the bilateral q-integral and
the integral identities built on them (biorthogonality, moments, classical
beta/Jacobi checks, the alpha/beta -> infinity degenerations).

Quadrature runs in double precision with numpy: the integrand is written in
u = log t, the tails are cut where a sampled envelope is negligible, and the
remaining interval is bisected adaptively with Gauss-Legendre panels (each
panel's 10-point value is checked against the sum over its two halves).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable

import numpy as np

from .context import (
    DEFAULT_CONTEXT,
    ArithmeticContext,
    ConvergenceFailure,
    DivergenceError,
    DomainError,
    TruncationFailure,
    UnsupportedInExactMode,
    as_qbase,
    guard_context,
    magnitude,
    round_to,
)
from .hyperq import BilateralSeries, psi11_eval
from .polyq import INF, jacobi_classical, rational_p_raw
from .qcore import gamma_reflection, qgamma, qpoch_finite, qpoch_infinite
from .report import DEFAULT_QUADRATURE_TOL, ResidualReport, make_report

_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)
U_LIMIT = 700.0  # exp(u) stays finite in double
MAX_PANELS = 20000


def _is_inf(v) -> bool:
    return v is INF or (isinstance(v, str) and v.lower() in ("inf", "infinity"))


def _inf_or(v):
    return INF if _is_inf(v) else v


@dataclass(frozen=True)
class AskeyRoyMeasure:
    """Weight parameters; alpha and/or beta may be INF for the degenerate measures."""

    alpha: Any
    beta: Any
    c: float
    q: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", _inf_or(self.alpha))
        object.__setattr__(self, "beta", _inf_or(self.beta))
        for v in (self.alpha, self.beta):
            if v is not INF and not float(v) > -1:
                raise DomainError("alpha and beta must exceed -1")
        if float(self.c) == math.floor(float(self.c)):
            raise DomainError("c must not be an integer")
        if not 0 < float(self.q) < 1:
            raise DomainError("need 0 < q < 1")


@dataclass(frozen=True)
class QIntegralSpec:
    s: float
    q: float
    tail_tol: float | None = None

    def __post_init__(self):
        if not float(self.s) > 0:
            raise DomainError("the q-integral needs s > 0")
        if not 0 < float(self.q) < 1:
            raise DomainError("need 0 < q < 1")


@dataclass
class QuadratureResult:
    value: Any
    error_estimate: float
    evaluations: int
    tail_cutoffs: tuple
    panels: int = 0
    details: dict = field(default_factory=dict)


# ------------------------------------------------------------ weights


def _ratio_product(nums: list, dens: list, q, tol: float, max_terms: int = 100000):
    """prod_m prod_i (1 + n_i q^m) / prod_j (1 + d_j q^m), factor by factor.

    Works on scalars of any floating type and on numpy arrays; forming the
    ratios pairwise keeps huge arguments from overflowing.
    """
    out = 1
    qm = 1
    for _ in range(max_terms):
        big = max([_mag(v * qm) for v in nums + dens] or [0.0])
        if big <= 0.5 and 2 * big / (1 - float(q)) < tol:
            return out
        num = 1
        for v in nums:
            num = num * (1 + v * qm)
        den = 1
        for v in dens:
            den = den * (1 + v * qm)
        out = out * num / den
        qm = qm * q
    raise TruncationFailure("infinite product ratio did not converge")


def _mag(v) -> float:
    if isinstance(v, np.ndarray):
        return float(np.max(np.abs(v))) if v.size else 0.0
    return magnitude(v)


def _weight_factors(t, m: AskeyRoyMeasure, q, qpow):
    """Numerator and denominator arguments of the weight's infinite products at t."""
    nums = []
    if m.beta is not INF:
        nums.append(t * qpow(m.beta + 1))
    if m.alpha is not INF:
        nums.append(qpow(m.alpha + 2) / t)
    dens = [t * qpow(-m.c), qpow(1 + m.c) / t]
    return nums, dens


def ar_weight(t, m: AskeyRoyMeasure, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """w(t) = t^{c-1} (-t q^{beta+1}, -q^{alpha+2}/t; q)_inf / (-t q^{-c}, -q^{1+c}/t; q)_inf.

    Factors with an infinite parameter are 1.
    """
    if ctx.exact:
        raise UnsupportedInExactMode("the weight involves infinite products")
    t = ctx.num(t)
    if not t > 0:
        raise DomainError("the weight lives on t > 0")
    q = ctx.num(m.q)
    nums, dens = _weight_factors(t, m, q, lambda e: q ** ctx.num(e))
    return t ** (ctx.num(m.c) - 1) * _ratio_product(nums, dens, q, ctx.series_tol, ctx.max_terms)


def _weight_times_t_np(u: np.ndarray, m: AskeyRoyMeasure) -> np.ndarray:
    """t w(t) at t = e^u (the dt = t du Jacobian folded in)."""
    q = float(m.q)
    t = np.exp(u)
    nums, dens = _weight_factors(t, m, q, lambda e: q ** float(e))
    return np.exp(float(m.c) * u) * _ratio_product(nums, dens, q, 2.2e-16)


def ar_normalization(m: AskeyRoyMeasure, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """The constant making the weight a probability measure on (0, inf)."""
    if ctx.exact:
        raise UnsupportedInExactMode("the normalization involves q-gamma values")
    qb = as_qbase(ctx.num(m.q), ctx)
    q = qb.q
    c = ctx.num(m.c)
    out = q ** (-c * c) * qgamma(c, qb, ctx) * qgamma(1 - c, qb, ctx) / gamma_reflection(c, ctx)
    al, be = m.alpha, m.beta
    if al is not INF and be is not INF:
        al, be = ctx.num(al), ctx.num(be)
        return out * qgamma(al + be + 2, qb, ctx) / (qgamma(al + 1, qb, ctx) * qgamma(be + 1, qb, ctx))
    finite = be if al is INF else al
    out = out / ((1 - q) * qpoch_infinite(q, q, ctx))
    if finite is not INF:
        out = out * qpoch_infinite(q ** (ctx.num(finite) + 1), q, ctx)
    return out


def askey_roy_closed_form(m: AskeyRoyMeasure, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """Total mass of the unnormalized weight (finite alpha, beta)."""
    return 1 / ar_normalization(m, ctx)


# ------------------------------------------------------- quadrature


def _as_columns(vals, n: int) -> np.ndarray:
    arr = np.asarray(vals, dtype=float)
    if arr.ndim == 0:
        return np.full((n, 1), float(arr))
    if arr.ndim == 1:
        return arr.reshape(n, 1) if arr.shape[0] == n else np.broadcast_to(arr, (n, arr.shape[0])).copy()
    return arr


def _panel_rules(g, lo: np.ndarray, hi: np.ndarray):
    """Whole-panel and two-half 10-point Gauss values for every panel at once."""
    mid = (lo + hi) / 2
    h = (hi - lo) / 2
    nodes_whole = mid[:, None] + h[:, None] * _GL_X[None, :]
    qmid_l = (lo + mid) / 2
    qmid_r = (mid + hi) / 2
    nodes_l = qmid_l[:, None] + (h / 2)[:, None] * _GL_X[None, :]
    nodes_r = qmid_r[:, None] + (h / 2)[:, None] * _GL_X[None, :]
    P = len(lo)
    nodes = np.concatenate([nodes_whole, nodes_l, nodes_r], axis=1).ravel()
    vals = _as_columns(g(nodes), nodes.size).reshape(P, 30, -1)
    w = _GL_W[None, :, None]
    whole = np.sum(vals[:, :10] * w, axis=1) * h[:, None]
    halves = (np.sum(vals[:, 10:20] * w, axis=1) + np.sum(vals[:, 20:] * w, axis=1)) * (h / 2)[:, None]
    absint = (np.sum(np.abs(vals[:, 10:20]) * w, axis=1) + np.sum(np.abs(vals[:, 20:]) * w, axis=1)) * (h / 2)[:, None]
    return halves, np.abs(whole - halves), absint, nodes.size


def _find_cutoff(g, start: float, step: float, direction: int, rate: float, scale: float, tol: float):
    """Walk outward until the sampled envelope of g bounds the remaining tail below tol * scale."""
    probe = np.linspace(0.0, 1.0, 9)
    u = start
    quiet = 0
    evals = 0
    while abs(u) < U_LIMIT:
        block = u + direction * step * probe
        env = float(np.max(np.abs(_as_columns(g(block), block.size))))
        evals += block.size
        if env / rate <= tol * scale:
            quiet += 1
            if quiet >= 2:
                return u, evals
        else:
            quiet = 0
        u = u + direction * step
    raise TruncationFailure("integrand tail does not decay within |log t| < 700")


def integrate_log(g: Callable, period: float, rates: tuple = (1.0, 1.0), rtol: float = 1e-11,
                  atol: float = 1e-300) -> QuadratureResult:
    """Integrate g(u) over the real line; g maps an array of u to values (or value columns).

    ``rates`` are exponential decay rates assumed beyond the cutoffs (left,
    right); ``period`` sets the initial panel width.
    """
    step = max(period, 0.5)
    centre = np.linspace(-4 * step, 4 * step, 81)
    scale = float(np.max(np.abs(_as_columns(g(centre), centre.size)))) * step
    scale = max(scale, atol)
    tail_tol = rtol * 1e-3
    lo_cut, e1 = _find_cutoff(g, -step, step, -1, max(rates[0], 1e-3), scale, tail_tol)
    hi_cut, e2 = _find_cutoff(g, step, step, +1, max(rates[1], 1e-3), scale, tail_tol)
    evals = centre.size + e1 + e2
    npan = max(8, int(math.ceil((hi_cut - lo_cut) / (step / 2))))
    edges = np.linspace(lo_cut, hi_cut, npan + 1)
    todo_lo, todo_hi = edges[:-1], edges[1:]
    width = hi_cut - lo_cut
    done_lo, done_val, done_err, done_abs = [], [], [], []
    act_lo = act_hi = act_val = act_err = act_abs = None
    while True:
        val, err, absint, ne = _panel_rules(g, todo_lo, todo_hi)
        evals += ne
        if act_lo is None:
            act_lo, act_hi, act_val, act_err, act_abs = todo_lo, todo_hi, val, err, absint
        else:
            act_lo = np.concatenate([act_lo, todo_lo])
            act_hi = np.concatenate([act_hi, todo_hi])
            act_val = np.concatenate([act_val, val])
            act_err = np.concatenate([act_err, err])
            act_abs = np.concatenate([act_abs, absint])
        all_abs = act_abs.sum(axis=0) + (np.sum(done_abs, axis=0) if done_abs else 0)
        target = np.maximum(atol, rtol * all_abs)
        total_err = act_err.sum(axis=0) + (np.sum(done_err, axis=0) if done_err else 0)
        if np.all(total_err <= target):
            break
        density = target[None, :] * ((act_hi - act_lo) / width)[:, None]
        split = np.any(act_err > 0.5 * density, axis=1)
        if not np.any(split):
            split = np.zeros(len(act_lo), dtype=bool)
            split[np.argmax(np.max(act_err / target[None, :], axis=1))] = True
        keep = ~split
        done_lo.extend(act_lo[keep])
        done_val.extend(act_val[keep])
        done_err.extend(act_err[keep])
        done_abs.extend(act_abs[keep])
        mid = (act_lo[split] + act_hi[split]) / 2
        todo_lo = np.concatenate([act_lo[split], mid])
        todo_hi = np.concatenate([mid, act_hi[split]])
        act_lo = act_hi = act_val = act_err = act_abs = None
        if len(done_lo) + len(todo_lo) > MAX_PANELS:
            raise ConvergenceFailure(f"adaptive quadrature exceeded {MAX_PANELS} panels")
    # deterministic reduction: panels in order of their left edge, pairwise summed
    all_lo = np.concatenate([np.array(done_lo, dtype=float), act_lo])
    all_val = np.concatenate([np.array(done_val).reshape(-1, act_val.shape[1]), act_val])
    order = np.argsort(all_lo, kind="stable")
    value = np.sum(all_val[order], axis=0)
    err = total_err + scale * tail_tol
    return QuadratureResult(value, float(np.max(err)), evals, (math.exp(lo_cut), math.exp(hi_cut)), len(order))


def _squeeze(res: QuadratureResult) -> QuadratureResult:
    if res.value.shape == (1,):
        res.value = float(res.value[0])
    return res


def _check_floating(ctx: ArithmeticContext):
    if ctx.exact:
        raise UnsupportedInExactMode("quadrature needs floating arithmetic")


def _decay_rates(m: AskeyRoyMeasure) -> tuple:
    left = 1.0 if m.alpha is INF else float(m.alpha) + 1
    right = 1.0 if m.beta is INF else float(m.beta) + 1
    return left, right


def integrate_ar(f: Callable, m: AskeyRoyMeasure, ctx: ArithmeticContext = DEFAULT_CONTEXT,
                 rtol: float = 1e-11) -> QuadratureResult:
    """Integral of f against the normalized Askey-Roy measure.

    ``f`` receives a numpy array of t values and returns an array of values,
    or a 2-d array with one column per integrand; plain constants are allowed.
    """
    _check_floating(ctx)
    period = -math.log(float(m.q))

    def g(u):
        t = np.exp(u)
        return _as_columns(f(t), u.size) * _weight_times_t_np(u, m)[:, None]

    res = integrate_log(g, period, _decay_rates(m), rtol)
    norm = float(ar_normalization(m, ctx.with_mode("double")))
    res.value = res.value * norm
    res.error_estimate *= abs(norm)
    return _squeeze(res)


# --------------------------------------------- vectorized rational functions


def _phi_np(upper: list, lower: list, q: float, z, n: int):
    """Terminating r phi s with upper q^{-n}; parameters and z may be arrays."""
    r, s = len(upper), len(lower)
    total = 0
    term = 1
    for k in range(n + 1):
        total = total + term
        num = 1
        for a in upper:
            num = num * (1 - a * q**k)
        den = 1 - q ** (k + 1)
        for b in lower:
            den = den * (1 - b * q**k)
        term = term * num / den * z * ((-1) * q**k) ** (1 + s - r)
    return total


def _poch_np(a, q: float, n: int):
    out = 1
    for m in range(n):
        out = out * (1 - a * q**m)
    return out


def rational_np(n: int, alpha, beta, t: np.ndarray, q: float) -> np.ndarray:
    """p_n^{(alpha,beta)}(t) on an array; alpha/beta may be INF."""
    t = np.asarray(t, dtype=float)
    if n == 0:
        return np.ones_like(t)
    qn = q ** (-n)
    if alpha is INF or beta is INF:
        if alpha is not INF:
            lower = q ** (float(alpha) + 1)
        elif beta is not INF:
            lower = -t * q ** (float(beta) + 1)
        else:
            lower = 0.0
        return np.broadcast_to(_phi_np([qn], [lower], q, -q * t, n), t.shape)
    qa1 = q ** (float(alpha) + 1)
    qb1 = q ** (float(beta) + 1)
    out = np.empty_like(t)
    small = np.abs(t) <= 1
    ts, tl = t[small], t[~small]
    # the terminating 2phi1 form in t, or in 1/t past |t| = 1
    out[small] = _phi_np([qn, q ** (1 - n) / qb1], [qa1], q, -ts * qb1 * q**n, n) / _poch_np(-ts * qb1, q, n)
    out[~small] = (
        (-1) ** n * _poch_np(qb1, q, n) * tl**n / (_poch_np(qa1, q, n) * _poch_np(-tl * qb1, q, n))
        * _phi_np([qn, q ** (1 - n) / qa1], [qb1], q, -qa1 * q**n / tl, n)
    )
    return out


def biorthogonality_rhs(n: int, m_idx: int, alpha, beta, q, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """The diagonal value h_n (times delta_{n,m}) shared by both biorthogonality relations.

    With alpha or beta infinite it reduces to (-1)^n q^{-n(n-1)/2} (q;q)_n.
    """
    if n != m_idx:
        return ctx.num(0)
    qq = ctx.num(q)
    sign = (-1) ** n
    base = sign * qpoch_finite(qq, qq, n) / qq ** (n * (n - 1) // 2)
    if alpha is INF or beta is INF:
        return base
    ab = ctx.num(alpha) + ctx.num(beta)
    return base * (1 - qq ** (n + ab + 1)) / ((1 - qq ** (2 * n + ab + 1)) * qpoch_finite(qq ** (ab + 2), qq, n))


def _pair_columns(pairs: list, meas: AskeyRoyMeasure):
    q = float(meas.q)
    a, b = meas.alpha, meas.beta

    def f(t):
        cache_l, cache_r = {}, {}
        cols = []
        for n, m_idx in pairs:
            if n not in cache_l:
                cache_l[n] = rational_np(n, a, b, t, q)
            if m_idx not in cache_r:
                cache_r[m_idx] = rational_np(m_idx, b, a, q / t, q)
            cols.append(cache_l[n] * cache_r[m_idx])
        return np.stack(cols, axis=1)

    return f


def pairing_matrix(nmax: int, meas: AskeyRoyMeasure, ctx: ArithmeticContext = DEFAULT_CONTEXT,
                   rtol: float = 1e-11) -> tuple:
    """All pairings for n, m <= nmax from one vector-valued quadrature: (matrix, result)."""
    pairs = [(n, m) for n in range(nmax + 1) for m in range(nmax + 1)]
    res = integrate_ar(_pair_columns(pairs, meas), meas, ctx, rtol)
    vals = np.atleast_1d(res.value)
    return vals.reshape(nmax + 1, nmax + 1), res


def pairing_continuous(n: int, m_idx: int, meas: AskeyRoyMeasure, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """Integral of p_n^{(alpha,beta)}(t) p_m^{(beta,alpha)}(q/t) against the normalized measure."""
    return integrate_ar(_pair_columns([(n, m_idx)], meas), meas, ctx).value


# ---------------------------------------------------------- q-integral


def q_integral(f: Callable, spec: QIntegralSpec, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """(1 - q) sum over k in Z of s q^k f(s q^k); each tail stops after five negligible terms.

    ``f`` may return a list, in which case the sum is taken componentwise and
    a term is negligible once every component is.
    """
    _check_floating(ctx)
    q = ctx.num(spec.q)
    s = ctx.num(spec.s)
    tol = spec.tail_tol if spec.tail_tol is not None else ctx.rel_tol
    total = None
    for direction in (1, -1):
        partial = None
        quiet = 0
        k = 0 if direction == 1 else -1
        for _ in range(ctx.max_terms):
            t = s * q**k
            val = f(t)
            vec = isinstance(val, (list, tuple))
            terms = [t * v for v in val] if vec else [t * val]
            partial = terms if partial is None else [p + x for p, x in zip(partial, terms)]
            if all(magnitude(x) <= tol * magnitude(p) * 1e-2 for x, p in zip(terms, partial)):
                quiet += 1
                if quiet >= 5:
                    break
            else:
                quiet = 0
            k += direction
        else:
            raise DivergenceError("q-integral tail did not settle")
        total = partial if total is None else [a + b for a, b in zip(total, partial)]
    out = [(1 - q) * v for v in total]
    return out if vec else out[0]


def _qint_weight(alpha, beta, c, ctx: ArithmeticContext, q):
    """t^{c-1} (-t q^{beta+1}, -q^{alpha+2}/t; q)_inf / (-t q^{-c}, -q^{1+c}/t; q)_inf as a function."""
    c = ctx.num(c)

    def w(t):
        nums = []
        if beta is not INF:
            nums.append(t * q ** (ctx.num(beta) + 1))
        if alpha is not INF:
            nums.append(q ** (ctx.num(alpha) + 2) / t)
        dens = [t * q ** (-c), q ** (1 + c) / t]
        return t ** (c - 1) * _ratio_product(nums, dens, q, ctx.series_tol, ctx.max_terms)

    return w


def _gamma_ratio(alpha, beta, qb, ctx):
    """Gamma_q(alpha+1) Gamma_q(beta+1) / Gamma_q(alpha+beta+2)."""
    al, be = ctx.num(alpha), ctx.num(beta)
    return qgamma(al + 1, qb, ctx) * qgamma(be + 1, qb, ctx) / qgamma(al + be + 2, qb, ctx)


def qintegral_pairing_matrix(nmax: int, alpha, beta, spec: QIntegralSpec,
                             ctx: ArithmeticContext = DEFAULT_CONTEXT) -> list:
    """All discrete-weight pairings for n, m <= nmax from one pass over the nodes s q^k.

    Double mode sums at guard precision (the terms cancel for larger n).
    """
    _check_floating(ctx)
    work = guard_context(ctx)
    qb = as_qbase(work.num(spec.q), work)
    q = qb.q
    qa1, qb1 = q ** (work.num(alpha) + 1), q ** (work.num(beta) + 1)
    w = _qint_weight(alpha, beta, 0, work, q)
    size = nmax + 1

    def f(t):
        wt = w(t)
        left = [rational_p_raw(n, qa1, qb1, t, qb, work) * wt for n in range(size)]
        right = [rational_p_raw(m, qb1, qa1, q / t, qb, work) for m in range(size)]
        return [ln * rm for ln in left for rm in right]

    vals = q_integral(f, QIntegralSpec(work.num(spec.s), q, spec.tail_tol), work)
    norm = _gamma_ratio(alpha, beta, qb, work)
    return [[round_to(vals[n * size + m] / norm, ctx) for m in range(size)] for n in range(size)]


def pairing_qintegral(n: int, m_idx: int, alpha, beta, spec: QIntegralSpec,
                      ctx: ArithmeticContext = DEFAULT_CONTEXT):
    """The discrete-weight pairing; it shares its diagonal values with the continuous one."""
    _check_floating(ctx)
    work = guard_context(ctx)
    qb = as_qbase(work.num(spec.q), work)
    q = qb.q
    qa1, qb1 = q ** (work.num(alpha) + 1), q ** (work.num(beta) + 1)
    w = _qint_weight(alpha, beta, 0, work, q)

    def f(t):
        return rational_p_raw(n, qa1, qb1, t, qb, work) * rational_p_raw(m_idx, qb1, qa1, q / t, qb, work) * w(t)

    val = q_integral(f, QIntegralSpec(work.num(spec.s), q, spec.tail_tol), work) / _gamma_ratio(alpha, beta, qb, work)
    return round_to(val, ctx)


# ------------------------------------------------------ moment formula


def _moment_integrand(k: int, l: int, meas: AskeyRoyMeasure):
    q = float(meas.q)
    qa1 = q ** (float(meas.alpha) + 1)
    qb1 = q ** (float(meas.beta) + 1)

    def f(t):
        left = q ** (k * (k - 1) / 2) * t**k / (_poch_np(qa1, q, k) * _poch_np(-t * qb1, q, k))
        right = q ** (l * (l - 1) / 2) * (q / t) ** l / (_poch_np(qb1, q, l) * _poch_np(-qa1 * q / t, q, l))
        return left * right

    return f


def moment_closed_form(k: int, l: int, alpha, beta, q, ctx: ArithmeticContext = DEFAULT_CONTEXT):
    qq = ctx.num(q)
    return qq ** (k * l) / qpoch_finite(qq ** (ctx.num(alpha) + ctx.num(beta) + 2), qq, k + l)


def moment_check(k: int, l: int, meas: AskeyRoyMeasure, ctx: ArithmeticContext = DEFAULT_CONTEXT,
                 tol: float = DEFAULT_QUADRATURE_TOL) -> ResidualReport:
    """Quadrature of the mixed moment against q^{kl} / (q^{alpha+beta+2}; q)_{k+l}."""
    if k < 0 or l < 0:
        raise DomainError("moments need k, l >= 0")
    res = integrate_ar(_moment_integrand(k, l, meas), meas, ctx)
    rhs = float(moment_closed_form(k, l, meas.alpha, meas.beta, meas.q, ctx.with_mode("double")))
    point = {"k": k, "l": l, "alpha": meas.alpha, "beta": meas.beta, "c": meas.c, "q": meas.q}
    return make_report("MOMENT", point, res.value, rhs, "double", tol,
                       {"error_estimate": res.error_estimate, "evaluations": res.evaluations})


# ----------------------------------------------------- integral catalog

INTEGRAL_IDS = ("AR", "BETA", "JACOBI-RAT", "AR-Q", "RAMANUJAN", "C-INDEP", "PASTRO-BC", "PASTRO")

INTEGRAL_ANCHORS = {
    "AR": "Eq 3.01",
    "BETA": "Eq 3.03",
    "JACOBI-RAT": "Eq 3.06",
    "AR-Q": "Eq 3.11",
    "RAMANUJAN": "Eq 3.13",
    "C-INDEP": "Eq 3.15",
    "PASTRO-BC": "Eq 4.04 with Eq 4.05",
    "PASTRO": "Eq 4.06",
}

INTEGRAL_TITLES = {
    "AR": "Askey-Roy q-beta integral: quadrature of the weight against its closed form",
    "BETA": "beta integral on (0, inf)",
    "JACOBI-RAT": "Jacobi orthogonality moved to (0, inf) by x = (1-t)/(1+t)",
    "AR-Q": "q-integral version of the Askey-Roy integral",
    "RAMANUJAN": "the c = 0 q-integral evaluated through the 1psi1 sum",
    "C-INDEP": "c-independence of the q-integral against the Askey-Roy weight",
    "PASTRO-BC": "biorthogonality after beta -> inf (finite beta gives the large-beta check)",
    "PASTRO": "biorthogonality after alpha, beta -> inf",
}


def _p(params: dict, key: str, default=None):
    v = params.get(key, default)
    if v is None:
        raise DomainError(f"missing parameter {key!r}")
    return v


def _c_indep_f(name: str):
    if name == "one":
        return lambda t: 1
    if name == "inv1pt":
        return lambda t: 1 / (1 + t)
    raise DomainError(f"unknown test function {name!r}; use 'one' or 'inv1pt'")


def _ar_q_pref(s, c, q, ctx):
    """(-s q^{-c}, -q^{1+c}/s; q)_inf / (s^c (-s, -q/s; q)_inf)."""
    return _ratio_product([s * q ** (-c), q ** (1 + c) / s], [s, q / s], q, ctx.series_tol, ctx.max_terms) / s**c


def integral_check(identity_id: str, params: dict, ctx: ArithmeticContext = DEFAULT_CONTEXT,
                   tol: float | None = None) -> ResidualReport:
    """Evaluate both sides of one integral identity and report."""
    _check_floating(ctx)
    dbl = ctx.with_mode("double")
    details: dict = {}
    if identity_id == "AR":
        meas = AskeyRoyMeasure(_p(params, "alpha"), _p(params, "beta"), _p(params, "c"), _p(params, "q"))
        res = integrate_log(lambda u: _weight_times_t_np(u, meas), -math.log(float(meas.q)), _decay_rates(meas))
        lhs = float(res.value[0])
        rhs = float(askey_roy_closed_form(meas, dbl))
        details = {"error_estimate": res.error_estimate}
        default_tol = DEFAULT_QUADRATURE_TOL
    elif identity_id == "BETA":
        al, be = float(_p(params, "alpha")), float(_p(params, "beta"))
        if not (al > -1 and be > -1):
            raise DomainError("alpha and beta must exceed -1")
        res = integrate_log(lambda u: np.exp((al + 1) * u - (al + be + 2) * np.logaddexp(0, u)), 1.0, (al + 1, be + 1))
        lhs = float(res.value[0])
        rhs = math.gamma(al + 1) * math.gamma(be + 1) / math.gamma(al + be + 2)
        details = {"error_estimate": res.error_estimate}
        default_tol = DEFAULT_QUADRATURE_TOL
    elif identity_id == "JACOBI-RAT":
        return _jacobi_rat(params, tol)
    elif identity_id in ("AR-Q", "RAMANUJAN", "C-INDEP"):
        return _qint_checks(identity_id, params, ctx, tol)
    elif identity_id in ("PASTRO-BC", "PASTRO"):
        n, m_idx = int(_p(params, "n")), int(_p(params, "m"))
        alpha = INF if identity_id == "PASTRO" else _p(params, "alpha")
        beta = _inf_or(params.get("beta", "inf")) if identity_id == "PASTRO-BC" else INF
        meas = AskeyRoyMeasure(alpha, beta, _p(params, "c"), _p(params, "q"))
        lhs = float(pairing_continuous(n, m_idx, meas, dbl))
        rhs = float(biorthogonality_rhs(n, m_idx, INF, INF, meas.q, dbl))
        scale = delta_scale(n, m_idx, INF, INF, meas.q)
        return make_report(identity_id, params, lhs, rhs, "double", DEFAULT_QUADRATURE_TOL if tol is None else tol,
                           {"beta": meas.beta, "scale": scale}, abs_floor=scale)
    else:
        raise KeyError(f"unknown integral identity {identity_id!r}")
    return make_report(identity_id, params, lhs, rhs, "double", default_tol if tol is None else tol, details)


def delta_scale(n: int, m_idx: int, alpha, beta, q) -> float:
    """max(1, sqrt|h_n h_m|): the size off-diagonal pairings are measured against."""
    dbl = ArithmeticContext("double")
    hn = abs(float(biorthogonality_rhs(n, n, alpha, beta, q, dbl)))
    hm = abs(float(biorthogonality_rhs(m_idx, m_idx, alpha, beta, q, dbl)))
    return max(1.0, math.sqrt(hn * hm))


def _jacobi_rat(params: dict, tol):
    n, m_idx = int(_p(params, "n")), int(_p(params, "m"))
    al, be = float(_p(params, "alpha")), float(_p(params, "beta"))
    if not (al > -1 and be > -1):
        raise DomainError("alpha and beta must exceed -1")
    dbl = ArithmeticContext("double")

    def g(u):
        t = np.exp(u)
        x = (1 - t) / (1 + t)
        pn = np.array([jacobi_classical(n, al, be, xi, dbl) for xi in x])
        pm = np.array([jacobi_classical(m_idx, al, be, xi, dbl) for xi in x])
        return pn * pm * np.exp((al + 1) * u - (al + be + 2) * np.logaddexp(0, u))

    res = integrate_log(g, 1.0, (al + 1, be + 1))
    lhs = float(res.value[0])
    def h(k):
        if k == 0:
            # (alpha+beta+1) Gamma(alpha+beta+1) = Gamma(alpha+beta+2), also at alpha+beta = -1
            return math.gamma(al + 1) * math.gamma(be + 1) / math.gamma(al + be + 2)
        return math.gamma(k + al + 1) * math.gamma(k + be + 1) / (
            (2 * k + al + be + 1) * math.factorial(k) * math.gamma(k + al + be + 1))

    rhs = h(n) if n == m_idx else 0.0
    scale = max(1.0, math.sqrt(abs(h(n) * h(m_idx))))
    return make_report("JACOBI-RAT", params, lhs, rhs, "double", DEFAULT_QUADRATURE_TOL if tol is None else tol,
                       {"error_estimate": res.error_estimate, "scale": scale}, abs_floor=scale)


def _qint_checks(identity_id: str, params: dict, ctx: ArithmeticContext, tol):
    work = guard_context(ctx)
    qb = as_qbase(work.num(_p(params, "q")), work)
    q = qb.q
    al, be = _p(params, "alpha"), _p(params, "beta")
    if not (float(al) > -1 and float(be) > -1):
        raise DomainError("alpha and beta must exceed -1")
    s = work.num(_p(params, "s"))
    spec = QIntegralSpec(s, q)
    details: dict = {}
    if identity_id == "AR-Q":
        c = work.num(_p(params, "c"))
        lhs = _ar_q_pref(s, c, q, work) * q_integral(_qint_weight(al, be, c, work, q), spec, work)
        rhs = _gamma_ratio(al, be, qb, work)
    elif identity_id == "RAMANUJAN":
        lhs = q_integral(_qint_weight(al, be, 0, work, q), spec, work)
        alw, bew = work.num(al), work.num(be)
        pref = (1 - q) * _ratio_product([s * q ** (bew + 1), q ** (alw + 2) / s], [s, q / s], q, work.series_tol)
        psi = psi11_eval(BilateralSeries(-s * q ** (-alw - 1), -s * q ** (bew + 1), q, q ** (alw + 1)), work)
        details = {"psi11_form": round_to(pref * psi, ctx)}
        rhs = _gamma_ratio(al, be, qb, work)
    else:
        c = work.num(params.get("c", 0.5))
        f = _c_indep_f(params.get("f", "inv1pt"))
        w = _qint_weight(al, be, c, work, q)
        lhs = _ar_q_pref(s, c, q, work) * q_integral(lambda t: f(t) * w(t), spec, work)
        alw, bew = work.num(al), work.num(be)
        pref = (1 - q) * _ratio_product([s * q ** (bew + 1), q ** (alw + 2) / s], [s, q / s], q, work.series_tol)
        # the bilateral k-sum of the right side, summed in both directions
        total = 0
        for direction in (1, -1):
            quiet = 0
            k = 0 if direction == 1 else -1
            partial = 0
            for _ in range(work.max_terms):
                ratio = qpoch_finite(-s * q ** (-alw - 1), q, k) / qpoch_finite(-s * q ** (bew + 1), q, k)
                term = f(s * q**k) * ratio * q ** (k * (alw + 1))
                partial = partial + term
                if magnitude(term) <= work.rel_tol * magnitude(partial) * 1e-2:
                    quiet += 1
                    if quiet >= 5:
                        break
                else:
                    quiet = 0
                k += direction
            else:
                raise DivergenceError("bilateral sum did not settle")
            total = total + partial
        rhs = pref * total
    lhs, rhs = round_to(lhs, ctx), round_to(rhs, ctx)
    return make_report(identity_id, params, lhs, rhs, ctx.mode, 1e-12 if tol is None else tol, details)



# ---------------------------------------------- suites over default grids

MEASURE_IDS = ("BIORTHO", "BIORTHO-Q", "MOMENT")
MEASURE_ANCHORS = {"BIORTHO": "Eq 1.16, Thm 1.13", "BIORTHO-Q": "Eq 1.19, Thm 1.17", "MOMENT": "Eq 3.08"}
MEASURE_TITLES = {
    "BIORTHO": "biorthogonality of p_n^{(alpha,beta)}(t) and p_m^{(beta,alpha)}(q/t) under the Askey-Roy measure",
    "BIORTHO-Q": "the same biorthogonality under the discrete q-integral weight, any s > 0",
    "MOMENT": "mixed moments of the Askey-Roy measure",
}

_AB = [-0.4, 0.0, 1.5]
_NM5 = [(n, m) for n in range(6) for m in range(6)]
_NM4 = [(n, m) for n in range(5) for m in range(5)]

SUITE_GRIDS = {
    "BIORTHO": [(("q",), [0.25, 0.5]), (("alpha",), _AB), (("beta",), _AB), (("c",), [0.25, 0.5]), (("n", "m"), _NM5)],
    "BIORTHO-Q": [(("q",), [0.25, 0.5]), (("alpha",), _AB), (("beta",), _AB), (("s",), [0.7, 1.0, 1.9]), (("n", "m"), _NM5)],
    "MOMENT": [(("q",), [0.25, 0.5]), (("alpha", "beta"), [(0.0, 0.0), (0.5, -0.2), (-0.4, 1.5)]), (("c",), [0.3]),
               (("k", "l"), [(k, l) for k in range(4) for l in range(4)])],
    "AR": [(("q",), [0.25, 0.5]), (("alpha",), _AB), (("beta",), _AB), (("c",), [0.25, 0.5, -0.7, 1.3])],
    "BETA": [(("alpha",), [-0.4, 0.0, 0.5, 1.5]), (("beta",), [-0.4, 0.0, 0.5, 1.5])],
    "JACOBI-RAT": [(("alpha", "beta"), [(0.0, 0.0), (0.5, -0.3), (-0.4, 1.5)]), (("n", "m"), _NM4)],
    "AR-Q": [(("q",), [0.25, 0.5]), (("alpha",), _AB), (("beta",), _AB), (("c",), [0.25, 0.6]), (("s",), [0.7, 1.9])],
    "RAMANUJAN": [(("q",), [0.25, 0.5]), (("alpha",), _AB), (("beta",), _AB), (("s",), [0.7, 1.0, 1.9])],
    "C-INDEP": [(("q",), [0.25, 0.5]), (("alpha", "beta"), [(0.0, 0.0), (0.5, 1.0), (-0.4, 1.5)]), (("c",), [0.25, 0.6]),
                (("s",), [0.7, 1.9]), (("f",), ["one", "inv1pt"])],
    "PASTRO-BC": [(("q",), [0.25, 0.5]), (("alpha",), [-0.4, 1.5]), (("beta",), ["inf", 40]), (("c",), [0.5]),
                  (("n", "m"), [(n, m) for n in range(5) for m in range(5)])],
    "PASTRO": [(("q",), [0.25, 0.5]), (("c",), [0.25, 0.5]), (("n", "m"), _NM4)],
}

SUITE_TOLS = {"BIORTHO": 1e-9, "BIORTHO-Q": 1e-10, "MOMENT": 1e-9}


@lru_cache(maxsize=64)
def _cached_pairings(alpha, beta, c, q, nmax: int):
    M, _ = pairing_matrix(nmax, AskeyRoyMeasure(alpha, beta, c, q))
    return M


@lru_cache(maxsize=128)
def _cached_qpairings(alpha, beta, s, q, nmax: int):
    return qintegral_pairing_matrix(nmax, alpha, beta, QIntegralSpec(s, q), ArithmeticContext("double"))


def measure_residual(identity_id: str, point: dict, ctx: ArithmeticContext = DEFAULT_CONTEXT,
                     tol: float | None = None, perturb: float = 0.0, flip_sign: bool = False) -> ResidualReport:
    """One grid point of an integral suite; ``perturb``/``flip_sign`` alter the closed-form side."""
    _check_floating(ctx)
    dbl = ArithmeticContext("double")
    details: dict = {}
    abs_floor = 1e-30
    if identity_id in ("BIORTHO", "BIORTHO-Q"):
        n, m_idx = int(point["n"]), int(point["m"])
        al, be, q = point["alpha"], point["beta"], point["q"]
        nmax = max(5, n, m_idx)
        if identity_id == "BIORTHO":
            lhs = float(_cached_pairings(al, be, point["c"], q, nmax)[n, m_idx])
        else:
            lhs = float(_cached_qpairings(al, be, point["s"], q, nmax)[n][m_idx])
        rhs = float(biorthogonality_rhs(n, m_idx, al, be, q, dbl))
        abs_floor = delta_scale(n, m_idx, al, be, q)
        details = {"scale": abs_floor}
    elif identity_id in ("PASTRO-BC", "PASTRO"):
        # one quadrature per measure serves every (n, m) cell of the grid
        n, m_idx, q = int(point["n"]), int(point["m"]), point["q"]
        al = "inf" if identity_id == "PASTRO" else point["alpha"]
        be = point.get("beta", "inf") if identity_id == "PASTRO-BC" else "inf"
        lhs = float(_cached_pairings(al, be, point["c"], q, max(4, n, m_idx))[n, m_idx])
        rhs = float(biorthogonality_rhs(n, m_idx, INF, INF, q, dbl))
        abs_floor = delta_scale(n, m_idx, INF, INF, q)
        details = {"beta": _inf_or(be), "scale": abs_floor}
    elif identity_id == "MOMENT":
        rep = moment_check(int(point["k"]), int(point["l"]), AskeyRoyMeasure(point["alpha"], point["beta"], point["c"], point["q"]), dbl)
        lhs, rhs, details = rep.lhs, rep.rhs, rep.details
    elif identity_id in INTEGRAL_IDS:
        rep = integral_check(identity_id, point, ctx, tol)
        lhs, rhs, details = rep.lhs, rep.rhs, rep.details
        abs_floor = details.get("scale", 1e-30)
        tol = rep.tol
    else:
        raise KeyError(f"unknown integral identity {identity_id!r}")
    if perturb:
        rhs = rhs * (1 + perturb)
    if flip_sign:
        rhs = -rhs
    tol = SUITE_TOLS.get(identity_id, DEFAULT_QUADRATURE_TOL) if tol is None else tol
    return make_report(identity_id, point, lhs, rhs, ctx.mode if identity_id in INTEGRAL_IDS else "double", tol, details, abs_floor)
