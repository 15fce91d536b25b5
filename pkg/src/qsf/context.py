"""Arithmetic modes, the q base, and the error hierarchy shared by every module."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any

import mpmath

DOUBLE = "double"
EXTENDED = "extended"
EXACT = "exact"
MODES = (DOUBLE, EXTENDED, EXACT)


class QSFError(Exception):
    """Base class for every error raised by the toolkit."""


class UnsupportedInExactMode(QSFError):
    pass


class TruncationFailure(QSFError):
    pass


class ConvergenceFailure(QSFError):
    pass


class SeriesPole(QSFError):
    pass


class PoleError(QSFError):
    pass


class DivergenceError(QSFError):
    pass


class DomainError(QSFError):
    pass


class DegenerateNormalization(QSFError):
    pass


def is_complex(v) -> bool:
    """True for Python complex and mpmath mpc values (from any mpmath context)."""
    return isinstance(v, complex) or type(v).__name__ == "mpc"


def is_mpf(v) -> bool:
    return type(v).__name__ == "mpf"


@lru_cache(maxsize=None)
def _mp_context(dps: int) -> mpmath.ctx_mp.MPContext:
    # private context so extended precision never touches mpmath's global one
    ctx = mpmath.MPContext()
    ctx.dps = dps
    return ctx


@dataclass(frozen=True)
class ArithmeticContext:
    """Scalar mode plus tolerances; passed explicitly to every evaluation."""

    mode: str = DOUBLE
    rel_tol: float = 1e-12
    abs_tol: float = 1e-300
    max_terms: int = 10000
    dps: int = 40

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown arithmetic mode {self.mode!r}")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be at least 1")

    @property
    def exact(self) -> bool:
        return self.mode == EXACT

    @property
    def mp(self) -> mpmath.ctx_mp.MPContext:
        return _mp_context(self.dps)

    @property
    def eps(self) -> float:
        if self.mode == EXTENDED:
            return 10.0 ** (-self.dps)
        if self.mode == EXACT:
            return 0.0
        return 2.220446049250313e-16

    @property
    def series_tol(self) -> float:
        """Relative size below which a term no longer matters to a sum."""
        return max(self.eps, self.rel_tol * 1e-4)

    def num(self, v: Any):
        """Convert a Python number (or "p/q" string) to this mode's scalar type."""
        if self.mode == EXACT:
            if isinstance(v, complex):
                raise UnsupportedInExactMode("complex scalars have no exact form")
            if isinstance(v, float):
                return Fraction(repr(v))
            return Fraction(v)
        if self.mode == EXTENDED:
            if isinstance(v, Fraction):
                return self.mp.mpf(v.numerator) / v.denominator
            if is_complex(v):
                return self.mp.mpc(v)
            if isinstance(v, str) and "/" in v:
                return self.num(Fraction(v))
            return self.mp.mpf(v)
        if is_complex(v):
            return complex(v)
        if isinstance(v, str):
            return float(Fraction(v))
        return float(v)

    def sqrt(self, v):
        if self.mode == EXACT:
            return exact_sqrt(v)
        if self.mode == EXTENDED:
            return self.mp.sqrt(v)
        if isinstance(v, complex) or v < 0:
            import cmath

            return cmath.sqrt(v)
        return math.sqrt(v)

    def cos(self, v):
        if self.mode == EXACT:
            raise UnsupportedInExactMode("cos has no exact rational value")
        return self.mp.cos(v) if self.mode == EXTENDED else math.cos(v)

    def pi(self):
        if self.mode == EXACT:
            raise UnsupportedInExactMode("pi is irrational")
        return self.mp.pi if self.mode == EXTENDED else math.pi

    def with_mode(self, mode: str) -> "ArithmeticContext":
        return ArithmeticContext(mode, self.rel_tol, self.abs_tol, self.max_terms, self.dps)


DEFAULT_CONTEXT = ArithmeticContext()


def exact_sqrt(v) -> Fraction:
    """Square root of a rational that is a perfect square; raises otherwise."""
    v = Fraction(v)
    if v < 0:
        raise UnsupportedInExactMode(f"{v} has no real square root")
    rn, rd = math.isqrt(v.numerator), math.isqrt(v.denominator)
    if rn * rn != v.numerator or rd * rd != v.denominator:
        raise UnsupportedInExactMode(f"{v} is not the square of a rational")
    return Fraction(rn, rd)


@dataclass(frozen=True)
class QBase:
    """The base q (0 < q < 1) and, when known, its square root p = q^(1/2).

    Every formula here uses half-integer powers of q; they are all computed
    as integer powers of p, which keeps exact mode closed.
    """

    q: Any
    p: Any = field(default=None)

    def __post_init__(self):
        if not 0 < self.q < 1:
            raise DomainError(f"q must satisfy 0 < q < 1, got {self.q}")
        if self.p is not None:
            if not 0 < self.p < 1:
                raise DomainError(f"p must satisfy 0 < p < 1, got {self.p}")
            if isinstance(self.p, Fraction) and isinstance(self.q, Fraction):
                if self.p * self.p != self.q:
                    raise DomainError("q must equal p**2 exactly")

    @classmethod
    def from_p(cls, p) -> "QBase":
        return cls(p * p, p)

    def half(self, k: int):
        """q**(k/2) for integer k."""
        if k % 2 == 0:
            return self.q ** (k // 2)
        if self.p is None:
            raise UnsupportedInExactMode("half-integer power of q needs p = q**(1/2)")
        return self.p**k

    def power(self, e):
        """q**e for real e; exact when 2e is an integer and p is present."""
        if isinstance(self.q, Fraction):
            e2 = Fraction(e) * 2 if not isinstance(e, float) else Fraction(repr(e)) * 2
            if e2.denominator == 1:
                return self.half(int(e2))
            raise UnsupportedInExactMode(f"q**{e} is not rational")
        if isinstance(e, Fraction):
            e = float(e)
        return self.q**e


def as_qbase(q, ctx: ArithmeticContext = DEFAULT_CONTEXT) -> QBase:
    """Coerce a number or QBase into a QBase whose scalars live in ctx's mode."""
    if isinstance(q, QBase):
        qq, p = q.q, q.p
    else:
        qq, p = q, None
    if ctx.exact:
        qq = ctx.num(qq)
        if p is None:
            try:
                p = exact_sqrt(qq)
            except UnsupportedInExactMode:
                p = None
        else:
            p = ctx.num(p)
        return QBase(qq, p)
    qq = ctx.num(qq)
    p = ctx.num(p) if p is not None else ctx.sqrt(qq)
    return QBase(qq, p)


def is_zero(v) -> bool:
    return v == 0


def magnitude(v) -> float:
    """|v| as a float, for tolerance bookkeeping in any mode."""
    return float(abs(v))


GUARD_DPS = 50


def guard_context(ctx: ArithmeticContext, dps: int = GUARD_DPS) -> ArithmeticContext:
    """Working context for cancellation-prone sums: double mode computes them at
    ``dps`` digits and rounds the result; other modes are returned unchanged."""
    if ctx.mode != DOUBLE:
        return ctx
    return ArithmeticContext(EXTENDED, ctx.rel_tol, ctx.abs_tol, ctx.max_terms, dps)


def round_to(v, ctx: ArithmeticContext):
    """Bring a guarded result back to ctx's scalar type."""
    if ctx.mode != DOUBLE:
        return v
    if is_complex(v):
        return complex(v)
    return float(v)
