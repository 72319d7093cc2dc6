"""P-box cdf-intervals: triplet points, their lattice order and construction.

A bound of a p-box cdf-interval is a triplet ``(quantile, cdf, slope)``: a
point on a uniform (straight-line) cdf.  The interval ``[lo, hi]`` encloses
every distribution whose cdf lies between the two clamped lines over the
quantile range ``[lo.quantile, hi.quantile]``.  ``lo``'s line gives the
largest cdf value a quantile can take, ``hi``'s the smallest.
"""

from __future__ import annotations

import math
import warnings
from typing import NamedTuple, Optional

from .ecdf import StaircaseEcdf

__all__ = [
    "STEEP",
    "TOL",
    "CdfRange",
    "DegenerateIntervalWarning",
    "InvalidIntervalError",
    "OutOfDomainError",
    "PBoxCdfInterval",
    "TripletPoint",
    "cdf_bounds",
    "check_interval",
    "construct_pbox",
    "enclosure_check",
    "glb",
    "interval_from_json",
    "interval_to_json",
    "is_valid",
    "leq_u",
    "line_eval",
    "lub",
    "make_interval",
    "point_interval",
    "project_cdf_range",
    "repair_dominance",
    "slopes_ordered",
    "top_interval",
    "triplet_from_json",
    "triplet_to_json",
]

TOL = 1e-9
# Finite stand-in for a vertical cdf line (a point mass).
STEEP = 1e12


class InvalidIntervalError(ValueError):
    pass


class OutOfDomainError(ValueError):
    pass


class DegenerateIntervalWarning(UserWarning):
    pass


class TripletPoint(NamedTuple):
    quantile: float
    cdf: float
    slope: float


class CdfRange(NamedTuple):
    lo_cdf: float
    hi_cdf: float


class PBoxCdfInterval(NamedTuple):
    lo: TripletPoint
    hi: TripletPoint

    @property
    def a(self) -> float:
        return self.lo.quantile

    @property
    def b(self) -> float:
        return self.hi.quantile

    @property
    def width(self) -> float:
        return self.hi.quantile - self.lo.quantile

    def is_degenerate(self) -> bool:
        return self.lo.quantile == self.hi.quantile

    def __str__(self):
        lo, hi = self.lo, self.hi
        return f"[({lo.quantile:g},{lo.cdf:g},{lo.slope:g}),({hi.quantile:g},{hi.cdf:g},{hi.slope:g})]"


def _clamp01(v: float) -> float:
    if v < 0.0:
        return 0.0
    if v > 1.0:
        return 1.0
    return v


def line_eval(p: TripletPoint, x: float) -> float:
    return _clamp01(p.cdf + p.slope * (x - p.quantile))


def cdf_bounds(interval: PBoxCdfInterval, x: float) -> CdfRange:
    """Cdf range at ``x`` with both bound lines extended beyond ``[a, b]``."""
    return CdfRange(line_eval(interval.hi, x), line_eval(interval.lo, x))


def project_cdf_range(interval: PBoxCdfInterval, x: float) -> CdfRange:
    lo, hi = interval
    if not lo.quantile <= x <= hi.quantile:
        raise OutOfDomainError(f"{x} lies outside [{lo.quantile}, {hi.quantile}]")
    hi_cdf = min(lo.slope * (x - lo.quantile) + lo.cdf, 1.0)
    lo_cdf = max(hi.cdf - hi.slope * (hi.quantile - x), 0.0)
    return CdfRange(lo_cdf, hi_cdf)


# -- the order on triplets ---------------------------------------------------

def leq_u(p: TripletPoint, q: TripletPoint) -> bool:
    return p.quantile <= q.quantile and p.cdf <= q.cdf and p.slope >= q.slope


def glb(p: TripletPoint, q: TripletPoint) -> TripletPoint:
    return TripletPoint(min(p.quantile, q.quantile), min(p.cdf, q.cdf), max(p.slope, q.slope))


def lub(p: TripletPoint, q: TripletPoint) -> TripletPoint:
    return TripletPoint(max(p.quantile, q.quantile), max(p.cdf, q.cdf), min(p.slope, q.slope))


# -- validity ----------------------------------------------------------------

def _dominance_gap(lo: TripletPoint, hi: TripletPoint, x: float) -> float:
    return line_eval(lo, x) - line_eval(hi, x)


def _breakpoints(lo: TripletPoint, hi: TripletPoint) -> list[float]:
    """Quantiles in (a, b) where either clamped bound line has a kink."""
    a, b = lo.quantile, hi.quantile
    pts = []
    for p in (lo, hi):
        for level in (0.0, 1.0):
            x = p.quantile + (level - p.cdf) / p.slope
            if a < x < b:
                pts.append(x)
    pts.sort()
    return pts


def _triplet_ok(p: TripletPoint) -> bool:
    return (
        math.isfinite(p.quantile)
        and -TOL <= p.cdf <= 1 + TOL
        and p.slope > 0
        and math.isfinite(p.slope)
    )


def check_interval(interval: PBoxCdfInterval, tol: float = TOL) -> Optional[str]:
    """Return ``None`` for a valid interval, otherwise the violated condition.

    Validity is quantile order plus dominance: on ``[a, b]`` the clamped
    lower-bound line never falls below the clamped upper-bound line.
    """
    lo, hi = interval
    if not (_triplet_ok(lo) and _triplet_ok(hi)):
        return "triplet components out of range"
    if lo.quantile > hi.quantile:
        return "lower quantile exceeds upper quantile"
    for x in (lo.quantile, *_breakpoints(lo, hi), hi.quantile):
        if _dominance_gap(lo, hi, x) < -tol:
            return f"lower bound line falls below upper bound line at {x:g}"
    return None


def is_valid(interval: PBoxCdfInterval, tol: float = TOL) -> bool:
    return check_interval(interval, tol) is None


def slopes_ordered(interval: PBoxCdfInterval) -> bool:
    return interval.lo.slope >= interval.hi.slope


def make_interval(lo: TripletPoint, hi: TripletPoint) -> PBoxCdfInterval:
    interval = PBoxCdfInterval(TripletPoint(*lo), TripletPoint(*hi))
    problem = check_interval(interval)
    if problem:
        raise InvalidIntervalError(f"{interval}: {problem}")
    return interval


def point_interval(c: float) -> PBoxCdfInterval:
    """Degenerate interval for the constant ``c`` (a vertical cdf at ``c``)."""
    p = TripletPoint(float(c), 0.0, STEEP)
    return PBoxCdfInterval(p, p)


def top_interval(a: float, b: float) -> PBoxCdfInterval:
    """Widest interval over ``[a, b]`` that the representation admits."""
    if b < a:
        raise InvalidIntervalError(f"empty quantile range [{a}, {b}]")
    if b == a:
        return point_interval(a)
    return PBoxCdfInterval(TripletPoint(float(a), 0.0, STEEP), TripletPoint(float(b), 1.0, 1.0 / (b - a)))


# -- dominance repair --------------------------------------------------------

def _feasible_pieces(lo, hi, xs, tol):
    """Maximal sub-intervals of the grid span where the gap is >= -tol.

    The gap is linear between consecutive grid points, so each piece's
    feasible part is an interval ending at a zero crossing.
    """
    pieces: list[list[float]] = []
    gaps = [_dominance_gap(lo, hi, x) for x in xs]
    for (x0, g0), (x1, g1) in zip(zip(xs, gaps), zip(xs[1:], gaps[1:])):
        ok0, ok1 = g0 >= -tol, g1 >= -tol
        if ok0 and ok1:
            seg = [x0, x1]
        elif ok0 or ok1:
            cross = x0 + (0.0 - g0) * (x1 - x0) / (g1 - g0)
            cross = min(x1, max(x0, cross))
            seg = [x0, cross] if ok0 else [cross, x1]
        else:
            continue
        if pieces and seg[0] <= pieces[-1][1]:
            pieces[-1][1] = seg[1]
        else:
            pieces.append(seg)
    return pieces


def repair_dominance(lo: TripletPoint, hi: TripletPoint, tol: float = TOL) -> Optional[PBoxCdfInterval]:
    """Shrink ``[lo, hi]`` to the quantiles where the bound lines stay ordered.

    Where the upper-bound line rises above the lower-bound line the quantile
    range is cut back to the intersection point of the two clamped lines.
    A cut bound keeps its slope and is re-anchored on its own line.  If the
    ordered quantiles form several runs the longest one is kept.  Returns
    ``None`` when no quantile survives.
    """
    a, b = lo.quantile, hi.quantile
    if a > b:
        return None
    if a == b:
        return PBoxCdfInterval(lo, hi) if _dominance_gap(lo, hi, a) >= -tol else None
    xs = [a, *_breakpoints(lo, hi), b]
    if all(_dominance_gap(lo, hi, x) >= -tol for x in xs):
        return PBoxCdfInterval(lo, hi)
    pieces = _feasible_pieces(lo, hi, xs, tol)
    if not pieces:
        return None
    first, last = max(pieces, key=lambda seg: seg[1] - seg[0])
    if first > a:
        lo = TripletPoint(first, line_eval(lo, first), lo.slope)
    if last < b:
        hi = TripletPoint(last, line_eval(hi, last), hi.slope)
    return PBoxCdfInterval(lo, hi)


# -- construction from data ---------------------------------------------------

def construct_pbox(staircase: StaircaseEcdf) -> PBoxCdfInterval:
    """Enclose a staircase ecdf between two uniform cdf lines.

    The lower bound runs from the first staircase point with the steepest
    secant to any later point; the upper bound is the flattest secant
    issued from ``(x_2, F_1)`` to the lower corners ``(x_i, F_{i-1})``.
    """
    x, f = staircase.quantiles, staircase.cdf
    n = len(x)
    if n == 1:
        warnings.warn(
            f"single observed quantile {x[0]}: degenerate interval with placeholder slope 1",
            DegenerateIntervalWarning,
            stacklevel=2,
        )
        p = TripletPoint(x[0], f[0], 1.0)
        return PBoxCdfInterval(p, p)

    s_lower = max((f[i] - f[0]) / (x[i] - x[0]) for i in range(1, n))
    if n == 2:
        s_upper = s_lower
    else:
        s_upper = min((f[i - 1] - f[0]) / (x[i] - x[1]) for i in range(2, n))
    f_b = _clamp01(s_upper * (x[-1] - x[1]) + f[0])
    return PBoxCdfInterval(TripletPoint(x[0], f[0], s_lower), TripletPoint(x[-1], f_b, s_upper))


def enclosure_check(interval: PBoxCdfInterval, staircase: StaircaseEcdf, eps: float = TOL) -> bool:
    for x, cdf in staircase.corners():
        lo_cdf, hi_cdf = cdf_bounds(interval, x)
        if not lo_cdf - eps <= cdf <= hi_cdf + eps:
            return False
    return True


# -- JSON ----------------------------------------------------------------------

def triplet_to_json(p: TripletPoint) -> dict:
    return {"q": p.quantile, "F": p.cdf, "S": p.slope}


def triplet_from_json(obj: dict) -> TripletPoint:
    return TripletPoint(float(obj["q"]), float(obj["F"]), float(obj["S"]))


def interval_to_json(interval: PBoxCdfInterval) -> dict:
    return {"lo": triplet_to_json(interval.lo), "hi": triplet_to_json(interval.hi)}


def interval_from_json(obj: dict, validate: bool = True) -> PBoxCdfInterval:
    lo, hi = triplet_from_json(obj["lo"]), triplet_from_json(obj["hi"])
    if validate:
        return make_interval(lo, hi)
    return PBoxCdfInterval(lo, hi)
