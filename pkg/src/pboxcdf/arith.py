"""Arithmetic on p-box cdf-intervals.

Quantile bounds come from ordinary real-interval arithmetic on the interval
endpoints.  Each bound line is treated as a uniform distribution over its
support (the quantiles where the line runs from cdf 0 to 1); the result's
bound line is the secant of the combined distribution over the combined
support.  For sums this is exact at both support endpoints and gives the
harmonic slope ``S1*S2/(S1+S2)``.
"""

from __future__ import annotations

import math
from typing import NamedTuple

from .core import PBoxCdfInterval, TripletPoint, line_eval, point_interval

__all__ = [
    "ArithmeticOverflowError",
    "DomainWipeoutError",
    "RealInterval",
    "UniformSupport",
    "add",
    "div",
    "mul",
    "negate",
    "normalize",
    "scalar_op",
    "sub",
    "support_of",
]


class DomainWipeoutError(ArithmeticError):
    """An operation has no defined result; propagation treats it as failure."""


class ArithmeticOverflowError(ArithmeticError):
    pass


class RealInterval(NamedTuple):
    lo: float
    hi: float

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def __add__(self, other):
        return RealInterval(self.lo + other.lo, self.hi + other.hi)

    def __sub__(self, other):
        return RealInterval(self.lo - other.hi, self.hi - other.lo)

    def __mul__(self, other):
        p = (self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi)
        return RealInterval(min(p), max(p))

    def __truediv__(self, other):
        if other.lo <= 0.0 <= other.hi:
            raise DomainWipeoutError(f"division by an interval containing zero: {tuple(other)}")
        p = (self.lo / other.lo, self.lo / other.hi, self.hi / other.lo, self.hi / other.hi)
        return RealInterval(min(p), max(p))


class UniformSupport(NamedTuple):
    start: float
    width: float

    @property
    def end(self) -> float:
        return self.start + self.width

    def as_interval(self) -> RealInterval:
        return RealInterval(self.start, self.start + self.width)


def support_of(p: TripletPoint) -> UniformSupport:
    return UniformSupport(p.quantile - p.cdf / p.slope, 1.0 / p.slope)


def _quantiles(x: PBoxCdfInterval) -> RealInterval:
    return RealInterval(x.lo.quantile, x.hi.quantile)


def _check_finite(*values):
    for v in values:
        if not math.isfinite(v):
            raise ArithmeticOverflowError(f"non-finite intermediate value {v!r}")


def _anchored(start: float, width: float, at: float) -> TripletPoint:
    """Triplet at quantile ``at`` on the line rising from 0 at ``start`` over ``width``."""
    if not width > 0.0:
        raise ArithmeticOverflowError(f"degenerate support width {width!r}")
    slope = 1.0 / width
    _check_finite(start, width, slope, at)
    f = (at - start) * slope
    return TripletPoint(at, 0.0 if f < 0.0 else 1.0 if f > 1.0 else f, slope)


def normalize(lo: TripletPoint, hi: TripletPoint) -> PBoxCdfInterval:
    """Widen a computed result until it is a valid, slope-ordered interval.

    The lower-bound slope is raised to the upper-bound slope when smaller,
    then the upper-bound cdf anchor is lowered just enough that the
    upper-bound line never exceeds the lower-bound line on ``[a, b]``.
    Both moves only enlarge the enclosed cdf region.
    """
    if lo.slope < hi.slope:
        lo = TripletPoint(lo.quantile, lo.cdf, hi.slope)
    a, b = lo.quantile, hi.quantile
    xs = [a, b]
    kink = a + (1.0 - lo.cdf) / lo.slope
    if a < kink < b:
        xs.append(kink)
    f_max = min(line_eval(lo, x) + hi.slope * (b - x) for x in xs)
    if hi.cdf > f_max:
        hi = TripletPoint(b, max(0.0, f_max), hi.slope)
    return PBoxCdfInterval(lo, hi)


def negate(x: PBoxCdfInterval) -> PBoxCdfInterval:
    return scalar_op(x, -1.0, "*")


def scalar_op(x: PBoxCdfInterval, c: float, op: str) -> PBoxCdfInterval:
    """Combine ``x`` with the constant ``c`` via ``op`` in ``+ - * /``."""
    result = _scalar_op(x, c, op)
    _check_finite(*result.lo, *result.hi)
    return result


def _scalar_op(x: PBoxCdfInterval, c: float, op: str) -> PBoxCdfInterval:
    lo, hi = x
    if op == "+":
        return PBoxCdfInterval(lo._replace(quantile=lo.quantile + c), hi._replace(quantile=hi.quantile + c))
    if op == "-":
        return PBoxCdfInterval(lo._replace(quantile=lo.quantile - c), hi._replace(quantile=hi.quantile - c))
    if op == "*":
        if c == 0.0:
            return point_interval(0.0)
        if c > 0.0:
            return PBoxCdfInterval(
                TripletPoint(lo.quantile * c, lo.cdf, lo.slope / c),
                TripletPoint(hi.quantile * c, hi.cdf, hi.slope / c),
            )
        # negation reflects the distributions: the upper bound becomes the lower
        k = -c
        return normalize(
            TripletPoint(hi.quantile * c, 1.0 - hi.cdf, hi.slope / k),
            TripletPoint(lo.quantile * c, 1.0 - lo.cdf, lo.slope / k),
        )
    if op == "/":
        if c == 0.0:
            raise DomainWipeoutError("division by zero constant")
        if c > 0.0:
            return PBoxCdfInterval(
                TripletPoint(lo.quantile / c, lo.cdf, lo.slope * c),
                TripletPoint(hi.quantile / c, hi.cdf, hi.slope * c),
            )
        k = -c
        return normalize(
            TripletPoint(hi.quantile / c, 1.0 - hi.cdf, hi.slope * k),
            TripletPoint(lo.quantile / c, 1.0 - lo.cdf, lo.slope * k),
        )
    raise ValueError(f"unknown operator {op!r}")


def _is_point(x: PBoxCdfInterval) -> bool:
    return x.lo.quantile == x.hi.quantile


def _constant(value: float) -> PBoxCdfInterval:
    _check_finite(value)
    return point_interval(value)


def add(x: PBoxCdfInterval, y: PBoxCdfInterval) -> PBoxCdfInterval:
    if _is_point(x) and _is_point(y):
        return _constant(x.lo.quantile + y.lo.quantile)
    if y.lo.quantile == y.hi.quantile:
        return scalar_op(x, y.lo.quantile, "+")
    if x.lo.quantile == x.hi.quantile:
        return scalar_op(y, x.lo.quantile, "+")
    q = _quantiles(x) + _quantiles(y)
    s1, s2 = support_of(x.lo), support_of(y.lo)
    lo = _anchored(s1.start + s2.start, s1.width + s2.width, q.lo)
    s1, s2 = support_of(x.hi), support_of(y.hi)
    hi = _anchored(s1.start + s2.start, s1.width + s2.width, q.hi)
    return normalize(lo, hi)


def sub(x: PBoxCdfInterval, y: PBoxCdfInterval) -> PBoxCdfInterval:
    if _is_point(x) and _is_point(y):
        return _constant(x.lo.quantile - y.lo.quantile)
    if y.lo.quantile == y.hi.quantile:
        return scalar_op(x, y.lo.quantile, "-")
    if x.lo.quantile == x.hi.quantile:
        return scalar_op(negate(y), x.lo.quantile, "+")
    q = _quantiles(x) - _quantiles(y)
    # x's lower line against the reflection of y's upper line, and vice versa
    s1, s2 = support_of(x.lo), support_of(y.hi)
    lo = _anchored(s1.start - s2.end, s1.width + s2.width, q.lo)
    s1, s2 = support_of(x.hi), support_of(y.lo)
    hi = _anchored(s1.start - s2.end, s1.width + s2.width, q.hi)
    return normalize(lo, hi)


def _secant(support: RealInterval, at: float) -> TripletPoint:
    return _anchored(support.lo, support.hi - support.lo, at)


def mul(x: PBoxCdfInterval, y: PBoxCdfInterval) -> PBoxCdfInterval:
    if _is_point(x) and _is_point(y):
        return _constant(x.lo.quantile * y.lo.quantile)
    if y.lo.quantile == y.hi.quantile:
        return scalar_op(x, y.lo.quantile, "*")
    if x.lo.quantile == x.hi.quantile:
        return scalar_op(y, x.lo.quantile, "*")
    q = _quantiles(x) * _quantiles(y)
    lo = _secant(support_of(x.lo).as_interval() * support_of(y.lo).as_interval(), q.lo)
    hi = _secant(support_of(x.hi).as_interval() * support_of(y.hi).as_interval(), q.hi)
    return normalize(lo, hi)


def _divisor_support(p: TripletPoint, fallback: RealInterval) -> RealInterval:
    s = support_of(p).as_interval()
    if s.lo <= 0.0 <= s.hi:
        # the uniform reaches zero even though the quantile range does not
        return fallback
    return s


def div(x: PBoxCdfInterval, y: PBoxCdfInterval) -> PBoxCdfInterval:
    qy = _quantiles(y)
    if qy.lo <= 0.0 <= qy.hi:
        raise DomainWipeoutError(f"divisor quantiles {tuple(qy)} contain zero")
    if _is_point(x) and _is_point(y):
        return _constant(x.lo.quantile / y.lo.quantile)
    if y.lo.quantile == y.hi.quantile:
        return scalar_op(x, y.lo.quantile, "/")
    q = _quantiles(x) / qy
    if x.lo.quantile == x.hi.quantile:
        if x.lo.quantile == 0.0:
            return PBoxCdfInterval(*(p._replace(quantile=v) for p, v in zip(point_interval(0.0), q)))
        xs_lo = xs_hi = RealInterval(x.lo.quantile, x.lo.quantile)
    else:
        xs_lo, xs_hi = support_of(x.lo).as_interval(), support_of(x.hi).as_interval()
    lo_support = xs_lo / _divisor_support(y.lo, qy)
    hi_support = xs_hi / _divisor_support(y.hi, qy)
    if lo_support.hi == lo_support.lo or hi_support.hi == hi_support.lo:
        # constant over a point numerator: fall back to the quantile range
        lo_support = hi_support = q
    return normalize(_secant(lo_support, q.lo), _secant(hi_support, q.hi))
