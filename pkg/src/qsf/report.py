"""Residual records and the pass rule shared by every identity check."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import mpmath

from .context import is_complex, is_mpf

RESIDUAL_FLOOR = 1e-30
DEFAULT_DOUBLE_TOL = 1e-9
# quadrature reaches ~1e-12; 1e-9 leaves room and still exposes a 1e-6 perturbation
DEFAULT_QUADRATURE_TOL = 1e-9


@dataclass
class ResidualReport:
    identity: str
    point: dict
    lhs: Any
    rhs: Any
    abs_residual: float
    rel_residual: float
    mode: str
    passed: bool
    tol: float = 0.0
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "identity": self.identity,
            "point": {k: format_point_value(v) for k, v in sorted(self.point.items())},
            "lhs": format_scalar(self.lhs),
            "rhs": format_scalar(self.rhs),
            "abs_residual": format_float(self.abs_residual),
            "rel_residual": format_float(self.rel_residual),
            "mode": self.mode,
            "tol": format_float(self.tol),
            "pass": self.passed,
            "details": {k: format_scalar(v) for k, v in sorted(self.details.items())},
        }


def residual(lhs, rhs, mode: str, tol: float, abs_floor: float = RESIDUAL_FLOOR):
    """Return (abs_residual, rel_residual, passed).

    rel = |lhs - rhs| / max(|lhs|, |rhs|, abs_floor).  Exact mode passes only
    on exact equality; floating modes pass when rel <= tol.
    """
    diff = lhs - rhs
    if mode == "exact" and isinstance(diff, Fraction):
        absr = abs(diff)
        scale = max(abs(Fraction(lhs)), abs(Fraction(rhs)))
        rel = absr / scale if scale else absr
        return float(absr), float(rel), diff == 0
    absr = float(abs(diff))
    scale = max(float(abs(lhs)), float(abs(rhs)), abs_floor)
    rel = absr / scale
    return absr, rel, rel <= tol


def make_report(identity, point, lhs, rhs, mode, tol, details=None, abs_floor=RESIDUAL_FLOOR):
    absr, rel, ok = residual(lhs, rhs, mode, tol, abs_floor)
    return ResidualReport(identity, dict(point), lhs, rhs, absr, rel, mode, ok, tol, dict(details or {}))


def format_float(v) -> float | str:
    v = float(v)
    if v != v or v in (float("inf"), float("-inf")):
        return str(v)
    return v


def format_scalar(v):
    """Serialize a scalar: rationals as "num/den", floating values with 17 significant digits."""
    if isinstance(v, bool):
        return v
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, int):
        return str(v)
    if is_complex(v):
        return {"re": format_scalar(v.real), "im": format_scalar(v.imag)}
    if is_mpf(v):
        return mpmath.nstr(v, 17)
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, (list, tuple)):
        return [format_scalar(x) for x in v]
    return str(v)


def format_point_value(v):
    """Point coordinates are inputs, so floats keep their shortest round-trip form."""
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return [format_point_value(x) for x in v]
    return format_scalar(v)
