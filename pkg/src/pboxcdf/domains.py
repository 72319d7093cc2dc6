"""Domain algebras the propagation engine runs on.

An algebra bundles everything the engine needs to know about one kind of
variable domain: building wide and constant domains, intersecting them,
enforcing the ordering constraint and the four arithmetic operations.

``PBOX`` is the p-box cdf-interval domain.  ``CONVEX`` is the plain
real-interval baseline and ``CDF_POINT`` the single-line cdf-interval
baseline, which propagates quantiles like ``CONVEX`` and carries one uniform
cdf line along.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Optional

from . import arith
from .arith import RealInterval
from .core import (
    STEEP,
    TOL,
    PBoxCdfInterval,
    TripletPoint,
    glb,
    interval_to_json,
    is_valid,
    line_eval,
    lub,
    point_interval,
    repair_dominance,
    top_interval,
)

__all__ = ["CDF_POINT", "CONVEX", "PBOX", "ALGEBRAS", "PBoxAlgebra", "ConvexAlgebra", "CdfPointAlgebra"]

# Updates at or below these sizes in every component are ignored.  Cdf
# values and slopes also have to make real progress: around a cycle of
# constraints a bound line can creep towards its limit by the same small
# step each round, so a cdf move must cover RELATIVE_STEP of the room left
# to 0 or 1 and a slope move that fraction of the slope.
FLOOR = 1e-9
CDF_FLOOR = 1e-6
RELATIVE_STEP = 1e-2
CACHE_SIZE = 1 << 14


def _close(u: float, v: float) -> bool:
    return u == v or abs(u - v) <= FLOOR


def _same_line(old: TripletPoint, new: TripletPoint, width: float) -> bool:
    """True when ``new`` does not move the bound line of ``old`` far enough to count."""
    step = new.cdf - old.cdf
    room = 1.0 - old.cdf if step > 0 else old.cdf
    if abs(step) > CDF_FLOOR and abs(step) > RELATIVE_STEP * room:
        return False
    step = abs(new.slope - old.slope)
    return step * width <= CDF_FLOOR or step <= RELATIVE_STEP * old.slope


def _snap(lo_q: float, hi_q: float):
    """Quantile intersection; ``None`` when empty beyond tolerance."""
    if lo_q > hi_q:
        if lo_q - hi_q > TOL:
            return None
        hi_q = lo_q
    return lo_q, hi_q


class PBoxAlgebra:
    name = "pbox"

    def top(self, a: float, b: float) -> PBoxCdfInterval:
        return top_interval(a, b)

    def point(self, c: float) -> PBoxCdfInterval:
        return point_interval(c)

    def from_pbox(self, d: PBoxCdfInterval) -> PBoxCdfInterval:
        return d

    def bounds(self, d) -> tuple[float, float]:
        return d.lo.quantile, d.hi.quantile

    def differs(self, old, new) -> bool:
        if old is new or old == new:
            return False
        width = old.hi.quantile - old.lo.quantile
        for p, q in ((old.lo, new.lo), (old.hi, new.hi)):
            if not (_close(p.quantile, q.quantile) and _same_line(p, q, width)):
                return True
        return False

    def _close_up(self, lo: TripletPoint, hi: TripletPoint):
        snapped = _snap(lo.quantile, hi.quantile)
        if snapped is None:
            return None
        if snapped[1] != hi.quantile:
            hi = hi._replace(quantile=snapped[1])
        return repair_dominance(lo, hi)

    def _restrict(self, x, lo_q: float, hi_q: float):
        """``x`` cut to ``[lo_q, hi_q]``, each bound re-anchored on its own line."""
        snapped = _snap(lo_q, hi_q)
        if snapped is None:
            return None
        lo_q, hi_q = snapped
        lo = x.lo if lo_q == x.lo.quantile else TripletPoint(lo_q, line_eval(x.lo, lo_q), x.lo.slope)
        hi = x.hi if hi_q == x.hi.quantile else TripletPoint(hi_q, line_eval(x.hi, hi_q), x.hi.slope)
        return PBoxCdfInterval(lo, hi)

    def meet(self, x, y) -> Optional[PBoxCdfInterval]:
        """Narrow the current domain ``x`` by the proposal ``y``.

        Quantiles are intersected exactly.  The cdf components take the
        lattice join/meet of the two bounds; when that pair breaks dominance
        the cdf components of ``x`` are kept instead, so narrowing never
        cuts quantiles beyond the plain interval intersection.  A point
        domain that survives is returned unchanged.
        """
        if x.lo.quantile == x.hi.quantile:
            c = x.lo.quantile
            return x if y.lo.quantile - TOL <= c <= y.hi.quantile + TOL else None
        lo, hi = lub(x.lo, y.lo), glb(x.hi, y.hi)
        if lo == x.lo and hi == x.hi:
            return x
        snapped = _snap(lo.quantile, hi.quantile)
        if snapped is None:
            return None
        if snapped[1] != hi.quantile:
            hi = hi._replace(quantile=snapped[1])
        candidate = PBoxCdfInterval(lo, hi)
        if is_valid(candidate):
            return candidate
        return self._restrict(x, lo.quantile, hi.quantile)

    def combine(self, x, proposals) -> Optional[PBoxCdfInterval]:
        """Meet of several narrowings of ``x``; the result ignores their order."""
        if len(proposals) == 1:
            return proposals[0]
        lo = hi = None
        for p in proposals:
            lo = p.lo if lo is None else lub(lo, p.lo)
            hi = p.hi if hi is None else glb(hi, p.hi)
        snapped = _snap(lo.quantile, hi.quantile)
        if snapped is None:
            return None
        if snapped[1] != hi.quantile:
            hi = hi._replace(quantile=snapped[1])
        candidate = PBoxCdfInterval(lo, hi)
        if is_valid(candidate):
            return candidate
        return self._restrict(x, lo.quantile, hi.quantile)

    def leq(self, x, y):
        """Enforce ``x <= y``: cap x's upper bound, raise y's lower bound.

        A bound-line conflict created here cuts the quantile range back to
        where the lines cross.
        """
        new_x = self._close_up(x.lo, glb(x.hi, y.hi))
        new_y = self._close_up(lub(x.lo, y.lo), y.hi)
        if new_x is None or new_y is None:
            return None
        return new_x, new_y

    def narrow(self, x, y) -> Optional[PBoxCdfInterval]:
        """Quantile-only narrowing of ``x`` by ``y``; cdf parts stay on x's lines."""
        return self._restrict(x, max(x.lo.quantile, y.lo.quantile), min(x.hi.quantile, y.hi.quantile))

    def narrow_to(self, x, q: RealInterval) -> Optional[PBoxCdfInterval]:
        return self._restrict(x, max(x.lo.quantile, q.lo), min(x.hi.quantile, q.hi))

    def at_least(self, x, c: float):
        return self._restrict(x, max(x.lo.quantile, c), x.hi.quantile)

    # Search revisits the same operand pairs after every backtrack.
    add = staticmethod(lru_cache(maxsize=CACHE_SIZE)(arith.add))
    sub = staticmethod(lru_cache(maxsize=CACHE_SIZE)(arith.sub))
    mul = staticmethod(lru_cache(maxsize=CACHE_SIZE)(arith.mul))
    div = staticmethod(lru_cache(maxsize=CACHE_SIZE)(arith.div))

    def to_json(self, d):
        return interval_to_json(d)


class ConvexAlgebra:
    name = "convex"

    def top(self, a, b):
        return RealInterval(float(a), float(b))

    def point(self, c):
        return RealInterval(float(c), float(c))

    def from_pbox(self, d: PBoxCdfInterval) -> RealInterval:
        return RealInterval(d.lo.quantile, d.hi.quantile)

    def bounds(self, d):
        return d.lo, d.hi

    def differs(self, old, new):
        return not (_close(old.lo, new.lo) and _close(old.hi, new.hi))

    def meet(self, x, y):
        snapped = _snap(max(x.lo, y.lo), min(x.hi, y.hi))
        return None if snapped is None else RealInterval(*snapped)

    def combine(self, x, proposals):
        snapped = _snap(max(p.lo for p in proposals), min(p.hi for p in proposals))
        return None if snapped is None else RealInterval(*snapped)

    def leq(self, x, y):
        new_x = _snap(x.lo, min(x.hi, y.hi))
        new_y = _snap(max(x.lo, y.lo), y.hi)
        if new_x is None or new_y is None:
            return None
        return RealInterval(*new_x), RealInterval(*new_y)

    narrow = meet
    narrow_to = meet

    def at_least(self, x, c):
        snapped = _snap(max(x.lo, c), x.hi)
        return None if snapped is None else RealInterval(*snapped)

    @staticmethod
    def add(x, y):
        return x + y

    @staticmethod
    def sub(x, y):
        return x - y

    @staticmethod
    def mul(x, y):
        return x * y

    @staticmethod
    def div(x, y):
        return x / y

    def to_json(self, d):
        return {"lo": d.lo, "hi": d.hi}


class CdfPointAlgebra(PBoxAlgebra):
    """One uniform cdf line through both interval endpoints.

    Domains are stored as p-box intervals whose two triplets sit on the same
    line, so the p-box arithmetic applies unchanged and keeps them on one
    line.  Intersection narrows the quantiles and re-reads the cdf values
    off the variable's own line.
    """

    name = "cdf-point"

    def top(self, a, b):
        if b == a:
            return point_interval(a)
        s = 1.0 / (b - a)
        return PBoxCdfInterval(TripletPoint(float(a), 0.0, s), TripletPoint(float(b), 1.0, s))

    def from_pbox(self, d: PBoxCdfInterval) -> PBoxCdfInterval:
        a, b = d.lo.quantile, d.hi.quantile
        if a == b:
            return d
        fa, fb = d.lo.cdf, d.hi.cdf
        if fb <= fa:
            return self.top(a, b)
        s = (fb - fa) / (b - a)
        return PBoxCdfInterval(TripletPoint(a, fa, s), TripletPoint(b, fb, s))

    def meet(self, x, y):
        return self.narrow(x, y)

    def combine(self, x, proposals):
        if len(proposals) == 1:
            return proposals[0]
        return self._restrict(
            x, max(p.lo.quantile for p in proposals), min(p.hi.quantile for p in proposals)
        )

    def leq(self, x, y):
        new_x = self._restrict(x, x.lo.quantile, min(x.hi.quantile, y.hi.quantile))
        new_y = self._restrict(y, max(x.lo.quantile, y.lo.quantile), y.hi.quantile)
        if new_x is None or new_y is None:
            return None
        return new_x, new_y


PBOX = PBoxAlgebra()
CONVEX = ConvexAlgebra()
CDF_POINT = CdfPointAlgebra()
ALGEBRAS = {a.name: a for a in (PBOX, CONVEX, CDF_POINT)}
