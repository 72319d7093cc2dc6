"""Replenishment planning over uncertain demand.

Per cycle ``t`` the model has an order size ``X_t``, an order indicator
``delta_t``, the inventory ``I_t`` left after demand ``d_t`` and a cost
``a*delta_t + h*I_t + v*X_t``; the total cost is the sum over the horizon.
Plans are found by depth-first search over the indicators with propagation
at every node.
"""

from __future__ import annotations

import csv
import enum
import json
import math
import os
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .core import (
    PBoxCdfInterval,
    TripletPoint,
    construct_pbox,
    interval_from_json,
    interval_to_json,
    make_interval,
    point_interval,
)
from .domains import ALGEBRAS, PBOX
from .ecdf import read_observations, to_staircase
from .propagate import ConstraintStore, Kind

__all__ = [
    "BenchmarkRow",
    "DemandGenerator",
    "InfeasibleModelError",
    "InventoryModel",
    "ModelHandles",
    "Pattern",
    "Plan",
    "SolveReport",
    "STEEL_STUD_UNIT_COST",
    "TEN_CYCLE_LOWER",
    "TEN_CYCLE_MEANS",
    "TEN_CYCLE_UPPER",
    "build_model",
    "demand_interval",
    "generate_demands",
    "pattern_mean",
    "pattern_model",
    "run_benchmark",
    "search_min_cost",
    "ten_cycle_demands",
    "ten_cycle_model",
    "write_benchmark_csv",
]

# Cdf values at the demand quantile bounds when only a range is known.
ANCHOR_LO = 0.05
ANCHOR_HI = 0.95

TEN_CYCLE_MEANS = (26, 36, 23, 28, 32, 30, 29, 37, 25, 34)
TEN_CYCLE_LOWER = (25.6, 34.7, 22.5, 27.1, 31.7, 29.6, 28.6, 36.2, 24.0, 33.2)
TEN_CYCLE_UPPER = (26.9, 36.8, 23.9, 28.4, 33.0, 31.5, 29.9, 37.9, 25.4, 34.5)

# Cost per item built from the reconstructed steel-stud observations.
STEEL_STUD_UNIT_COST = PBoxCdfInterval(TripletPoint(5.17, 0.1, 1.2), TripletPoint(6.36, 0.7, 0.57))

DEFAULT_ORDER_COST = 100.0
# Chosen so the ten-cycle data set above spans a few replenishment plans;
# the original cost parameters are unpublished.
TEN_CYCLE_ORDER_COST = 200.0
DEFAULT_HOLDING_COST = 1.0
DEFAULT_SPREAD = 0.05
# With no stock left at the horizon the total purchase is the same for every
# plan, so a unit cost only widens every cost interval alike.
BENCH_UNIT_COST = 0.0


class InfeasibleModelError(ValueError):
    pass


# -- demand data ------------------------------------------------------------------

class Pattern(str, enum.Enum):
    P1 = "P1"
    P2 = "P2"
    P3 = "P3"
    P4 = "P4"


def pattern_mean(pattern: Union[Pattern, str], t: int, base: float = 50.0) -> float:
    """Mean demand of cycle ``t`` (1-based) for one of the four trend patterns."""
    pattern = Pattern(pattern)
    seasonal = base * (1.0 + math.sin(math.pi * t / 6.0))
    if pattern is Pattern.P1:
        mean = seasonal
    elif pattern is Pattern.P2:
        mean = seasonal + t
    elif pattern is Pattern.P3:
        mean = seasonal + (52 - t)
    else:
        mean = seasonal + min(t, 52 - t)
    return max(mean, 0.0)


def demand_interval(lower: float, upper: float, mean: Optional[float] = None) -> PBoxCdfInterval:
    """Demand interval from a quantile range, with both bound lines spanning it."""
    if upper < lower:
        raise ValueError(f"demand bounds out of order: {lower} > {upper}")
    if upper - lower < 1e-9:
        return point_interval(lower if mean is None else mean)
    s = 1.0 / (upper - lower)
    return make_interval(TripletPoint(lower, ANCHOR_LO, s), TripletPoint(upper, ANCHOR_HI, s))


@dataclass(frozen=True)
class DemandGenerator:
    pattern: Pattern
    base: float = 50.0
    spread: float = DEFAULT_SPREAD

    def __post_init__(self):
        object.__setattr__(self, "pattern", Pattern(self.pattern))
        if not 0.0 <= self.spread < 1.0:
            raise ValueError(f"spread must lie in [0, 1), got {self.spread}")

    def means(self, t_max: int) -> list[float]:
        return [pattern_mean(self.pattern, t, self.base) for t in range(1, t_max + 1)]

    def demands(self, t_max: int) -> list[PBoxCdfInterval]:
        return [demand_interval(m * (1 - self.spread), m * (1 + self.spread), m) for m in self.means(t_max)]


def generate_demands(g: DemandGenerator, t_max: int) -> list[PBoxCdfInterval]:
    if t_max < 1:
        raise ValueError("t_max must be at least 1")
    return g.demands(t_max)


def ten_cycle_demands() -> list[PBoxCdfInterval]:
    return [demand_interval(lo, hi, m) for lo, hi, m in zip(TEN_CYCLE_LOWER, TEN_CYCLE_UPPER, TEN_CYCLE_MEANS)]


# -- the model -----------------------------------------------------------------------

UnitCost = Union[float, PBoxCdfInterval]


@dataclass(frozen=True)
class InventoryModel:
    order_cost: float
    holding_cost: float
    unit_cost: UnitCost
    initial_inventory: float
    demands: tuple[PBoxCdfInterval, ...]

    def __post_init__(self):
        object.__setattr__(self, "demands", tuple(self.demands))
        if not self.demands:
            raise ValueError("horizon must be at least one cycle")
        if self.order_cost < 0 or self.holding_cost < 0:
            raise ValueError("order and holding costs must be non-negative")
        if self.initial_inventory < 0:
            raise ValueError("initial inventory must be non-negative")
        for t, d in enumerate(self.demands, start=1):
            if d.lo.quantile < 0:
                raise ValueError(f"demand of cycle {t} has a negative quantile bound")

    @property
    def horizon(self) -> int:
        return len(self.demands)

    def to_json(self) -> dict:
        v = self.unit_cost
        return {
            "N": self.horizon,
            "order_cost": self.order_cost,
            "holding_cost": self.holding_cost,
            "unit_cost": v if isinstance(v, (int, float)) else interval_to_json(v),
            "I0": self.initial_inventory,
            "demands": [interval_to_json(d) for d in self.demands],
        }

    @classmethod
    def from_json(cls, obj: dict, base_dir: Union[str, Path, None] = None) -> "InventoryModel":
        base = Path(base_dir) if base_dir is not None else Path.cwd()
        demands = []
        for entry in obj["demands"]:
            if "observations" in entry:
                path = Path(entry["observations"])
                if not path.is_absolute():
                    path = base / path
                demands.append(construct_pbox(to_staircase(read_observations(path))))
            else:
                demands.append(interval_from_json(entry))
        v = obj["unit_cost"]
        unit = float(v) if isinstance(v, (int, float)) else interval_from_json(v)
        model = cls(
            order_cost=float(obj["order_cost"]),
            holding_cost=float(obj["holding_cost"]),
            unit_cost=unit,
            initial_inventory=float(obj.get("I0", 0.0)),
            demands=tuple(demands),
        )
        if "N" in obj and int(obj["N"]) != model.horizon:
            raise ValueError(f"N={obj['N']} but {model.horizon} demands given")
        return model

    @classmethod
    def load(cls, path: Union[str, Path]) -> "InventoryModel":
        path = Path(path)
        with open(path) as fh:
            return cls.from_json(json.load(fh), base_dir=path.parent)

    def save(self, path: Union[str, Path]):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)
            fh.write("\n")


def ten_cycle_model(order_cost: float = TEN_CYCLE_ORDER_COST, holding_cost: float = DEFAULT_HOLDING_COST) -> InventoryModel:
    return InventoryModel(order_cost, holding_cost, STEEL_STUD_UNIT_COST, 0.0, tuple(ten_cycle_demands()))


def pattern_model(
    pattern: Union[Pattern, str],
    horizon: int,
    spread: float = DEFAULT_SPREAD,
    order_cost: float = DEFAULT_ORDER_COST,
    holding_cost: float = DEFAULT_HOLDING_COST,
    unit_cost: UnitCost = BENCH_UNIT_COST,
) -> InventoryModel:
    demands = generate_demands(DemandGenerator(Pattern(pattern), spread=spread), horizon)
    return InventoryModel(order_cost, holding_cost, unit_cost, 0.0, tuple(demands))


@dataclass
class ModelHandles:
    order: list[int]
    delta: list[int]
    inventory: list[int]
    demand: list[int]
    purchase: list[int]
    holding: list[int]
    cycle_cost: list[int]
    total: int


def _define(store: ConstraintStore, kind: Kind, x: int, y: int, name: str) -> int:
    """New variable holding ``x op y``, seeded with the forward evaluation."""
    alg = store.algebra
    op = {Kind.ADD: alg.add, Kind.SUB: alg.sub, Kind.MUL: alg.mul}[kind]
    z = store.new_var(op(store.domain(x), store.domain(y)), name)
    store.post(kind, z, x, y)
    return z


def build_model(m: InventoryModel, store: ConstraintStore) -> ModelHandles:
    """Post the planning constraints and propagate once.

    Two optimality cuts are posted alongside the balance equations: nothing
    is left in stock after the last cycle, and an order is only placed when
    the stock carried into its cycle is zero.  The second is applied during
    search, when an indicator is fixed to 1.
    """
    alg = store.algebra
    n = m.horizon
    upper = [alg.bounds(alg.from_pbox(d))[1] for d in m.demands]
    remaining = [sum(upper[t:]) for t in range(n + 1)]
    zero = store.constant(0.0)
    a = store.constant(m.order_cost)
    h = store.constant(m.holding_cost)
    if isinstance(m.unit_cost, (int, float)):
        v = store.constant(m.unit_cost)
    else:
        v = store.new_var(alg.from_pbox(m.unit_cost), "v")

    handles = ModelHandles([], [], [], [], [], [], [], -1)
    stock = store.constant(m.initial_inventory)
    running = None
    for t in range(n):
        label = t + 1
        x = store.new_var(alg.top(0.0, remaining[t]), f"X{label}")
        d = store.new_var(alg.top(0.0, 1.0), f"delta{label}")
        inv = store.new_var(alg.top(0.0, remaining[t + 1]), f"I{label}")
        dem = store.new_var(alg.from_pbox(m.demands[t]), f"d{label}")
        store.post(Kind.POS, x, d)
        store.post(Kind.LEQ, zero, x)
        store.post(Kind.LEQ, zero, inv)
        available = _define(store, Kind.ADD, stock, x, f"A{label}")
        store.post(Kind.SUB, inv, available, dem)
        ordering = _define(store, Kind.MUL, a, d, f"aDelta{label}")
        holding = _define(store, Kind.MUL, h, inv, f"hI{label}")
        purchase = _define(store, Kind.MUL, v, x, f"vX{label}")
        cost = _define(store, Kind.ADD, _define(store, Kind.ADD, ordering, holding, f"oh{label}"), purchase, f"C{label}")
        running = cost if running is None else _define(store, Kind.ADD, running, cost, f"S{label}")
        handles.order.append(x)
        handles.delta.append(d)
        handles.inventory.append(inv)
        handles.demand.append(dem)
        handles.purchase.append(purchase)
        handles.holding.append(holding)
        handles.cycle_cost.append(cost)
        stock = inv
    handles.total = running
    store.names[running] = "TC"
    if not store.run_to_fixpoint():
        raise InfeasibleModelError(f"model is infeasible at the root: {store.failure[1]}")
    return handles


# -- search ----------------------------------------------------------------------------

DeltaRange = tuple[int, int]


@dataclass
class Plan:
    delta: tuple[DeltaRange, ...]
    order_domains: tuple
    inventory_domains: tuple
    total_cost: object
    holding_cost: object

    @property
    def replenishments(self) -> int:
        return sum(lo for lo, _ in self.delta)


@dataclass
class SolveReport:
    model: str
    status: str  # complete | incomplete | timeout | infeasible
    plans: list[Plan] = field(default_factory=list)
    replenishment_range: Optional[tuple[int, int]] = None
    delta_hull: Optional[tuple[DeltaRange, ...]] = None
    wall_time: float = 0.0
    nodes: int = 0
    leaves: int = 0
    message: str = ""

    def to_json(self, algebra=None) -> dict:
        alg = algebra or ALGEBRAS[self.model]
        return {
            "model": self.model,
            "status": self.status,
            "message": self.message,
            "replenishment_range": list(self.replenishment_range) if self.replenishment_range else None,
            "delta_hull": [list(r) for r in self.delta_hull] if self.delta_hull else None,
            "wall_ms": round(self.wall_time * 1000.0, 3),
            "nodes": self.nodes,
            "leaves": self.leaves,
            "plans": [
                {
                    "delta": [list(r) for r in p.delta],
                    "replenishments": p.replenishments,
                    "total_cost": alg.to_json(p.total_cost),
                    "holding_cost": alg.to_json(p.holding_cost),
                    "orders": [alg.to_json(x) for x in p.order_domains],
                    "inventory": [alg.to_json(i) for i in p.inventory_domains],
                }
                for p in self.plans
            ],
        }


class _Stop(Exception):
    def __init__(self, status: str):
        self.status = status


def _suffix_bounds(m: InventoryModel, lower: Sequence[float]) -> list[float]:
    """Least ordering-plus-holding cost from cycle ``s`` on, on the lowest demands.

    ``bound[s]`` lets stock from earlier orders cover the first cycles of the
    suffix and includes holding that stock at the end of cycle ``s - 1``;
    ``fresh[e]`` is the optimal cost from ``e`` when ``e`` starts with an
    empty stock and an order.
    """
    n = m.horizon
    a, h = m.order_cost, m.holding_cost

    def carried(s: int, e: int) -> float:
        # holding over cycles s..e-1 when their demands up to e-1 are stocked
        total, tail = 0.0, 0.0
        for u in range(e - 1, s - 1, -1):
            total += tail
            tail += lower[u]
        return h * total

    fresh = [0.0] * (n + 1)
    for e in range(n - 1, -1, -1):
        fresh[e] = min(a + carried(e, f) + fresh[f] for f in range(e + 1, n + 1))
    return [min(carried(max(s - 1, 0), e) + fresh[e] for e in range(s, n + 1)) for s in range(n + 1)]


def _delta_range(alg, dom) -> DeltaRange:
    lo, hi = alg.bounds(dom)
    return (1 if lo >= 0.5 else 0, 1 if hi >= 0.5 else 0)


def _fold(alg, domains):
    total = domains[0]
    for d in domains[1:]:
        total = alg.add(total, d)
    return total


def search_min_cost(
    m: InventoryModel,
    algebra=PBOX,
    node_limit: Optional[int] = None,
    time_limit: Optional[float] = None,
    suffix_bound: bool = True,
    queue_seed: Optional[int] = None,
) -> SolveReport:
    """Depth-first branch and bound over the order indicators, 1 before 0.

    A node is pruned when its total-cost lower bound exceeds the smallest
    total-cost upper bound seen at a leaf.  The report keeps every leaf whose
    cost interval is not strictly above another leaf's.  ``queue_seed``
    makes propagation pop constraints in a seeded random order.
    """
    if isinstance(algebra, str):
        algebra = ALGEBRAS[algebra]
    alg = algebra
    started = time.perf_counter()
    report = SolveReport(model=alg.name, status="complete")
    if time_limit is not None and time_limit <= 0:
        report.status = "timeout"
        return report
    deadline = None if time_limit is None else started + time_limit

    store = ConstraintStore(alg)
    rng = None if queue_seed is None else random.Random(queue_seed)
    try:
        hd = build_model(m, store)
    except InfeasibleModelError as exc:
        report.status = "infeasible"
        report.message = str(exc)
        report.wall_time = time.perf_counter() - started
        return report

    n = m.horizon
    one, zero = alg.point(1.0), alg.point(0.0)
    if suffix_bound and m.initial_inventory == 0:
        lower = [alg.bounds(store.domain(v))[0] for v in hd.demand]
        suffix = _suffix_bounds(m, lower)
    else:
        suffix = [0.0] * (n + 1)
    leaves: list[tuple[float, float, Plan]] = []
    best_hi = math.inf

    def lower_bound(s: int) -> float:
        doms = store.domains
        lo = [alg.bounds(doms[c])[0] for c in hd.cycle_cost]
        buy = sum(alg.bounds(doms[p])[0] for p in hd.purchase[s:])
        # the suffix bound also prices the stock held at the end of cycle s-1
        held = alg.bounds(doms[hd.holding[s - 1]])[0] if s > 0 else 0.0
        return sum(lo[:s]) - held + max(held + sum(lo[s:]), suffix[s] + buy)

    def leaf():
        nonlocal best_hi
        doms = store.domains
        tc = doms[hd.total]
        lo, hi = alg.bounds(tc)
        plan = Plan(
            delta=tuple(_delta_range(alg, doms[d]) for d in hd.delta),
            order_domains=tuple(doms[x] for x in hd.order),
            inventory_domains=tuple(doms[i] for i in hd.inventory),
            total_cost=tc,
            holding_cost=_fold(alg, [doms[v] for v in hd.holding]),
        )
        leaves.append((lo, hi, plan))
        best_hi = min(best_hi, hi)

    def dfs(t: int):
        report.nodes += 1
        if node_limit is not None and report.nodes > node_limit:
            raise _Stop("incomplete")
        if deadline is not None and time.perf_counter() > deadline:
            raise _Stop("timeout")
        if lower_bound(t) > best_hi + 1e-9 * max(1.0, abs(best_hi)):
            return
        if t == n:
            leaf()
            return
        lo, hi = alg.bounds(store.domain(hd.delta[t]))
        for value, dom in ((1, one), (0, zero)):
            if not lo <= value <= hi:
                continue
            saved = store.snapshot()
            ok = store.restrict(hd.delta[t], dom)
            if ok and value == 1 and t > 0:
                ok = store.restrict(hd.inventory[t - 1], zero)
            if ok and store.run_to_fixpoint(rng):
                dfs(t + 1)
            store.restore(saved)

    try:
        dfs(0)
    except _Stop as stop:
        report.status = stop.status
    report.leaves = len(leaves)
    if leaves:
        cutoff = min(hi for _, hi, _ in leaves)
        cutoff += 1e-9 * max(1.0, abs(cutoff))
        report.plans = [p for lo, _, p in leaves if lo <= cutoff]
        counts = [p.replenishments for p in report.plans]
        report.replenishment_range = (min(counts), max(counts))
        report.delta_hull = tuple(
            (min(p.delta[t][0] for p in report.plans), max(p.delta[t][1] for p in report.plans)) for t in range(n)
        )
    elif report.status == "complete":
        report.status = "infeasible"
        report.message = "no plan satisfies the constraints"
    report.wall_time = time.perf_counter() - started
    return report


# -- benchmark -----------------------------------------------------------------------------

@dataclass(frozen=True)
class BenchmarkRow:
    pattern: str
    horizon: int
    model: str
    wall_ms: float
    nodes: int
    status: str

    FIELDS = ("pattern", "horizon", "model", "wall_ms", "nodes", "status")

    def as_row(self) -> list:
        return [self.pattern, self.horizon, self.model, f"{self.wall_ms:.3f}", self.nodes, self.status]


def _bench_cell(args) -> BenchmarkRow:
    pattern, horizon, model_name, timeout, spread = args
    if timeout is not None and timeout <= 0:
        return BenchmarkRow(pattern, horizon, model_name, 0.0, 0, "timeout")
    m = pattern_model(pattern, horizon, spread=spread)
    report = search_min_cost(m, ALGEBRAS[model_name], time_limit=timeout)
    return BenchmarkRow(pattern, horizon, model_name, report.wall_time * 1000.0, report.nodes, report.status)


def run_benchmark(
    patterns: Iterable[Union[Pattern, str]],
    horizons: Iterable[int],
    models: Iterable[str] = ("pbox", "convex", "cdf-point"),
    timeout: Optional[float] = None,
    jobs: Optional[int] = 1,
    spread: float = DEFAULT_SPREAD,
) -> list[BenchmarkRow]:
    """Solve every (pattern, horizon, model) cell; rows come back in that order."""
    horizons = list(horizons)
    if not horizons:
        raise ValueError("at least one horizon is required")
    models = list(models)
    for name in models:
        if name not in ALGEBRAS:
            raise ValueError(f"unknown model {name!r}; choose from {sorted(ALGEBRAS)}")
    cells = [
        (Pattern(p).value, int(t), name, timeout, spread) for p in patterns for t in horizons for name in models
    ]
    workers = jobs if jobs is not None else (os.cpu_count() or 1)
    if workers <= 1 or len(cells) <= 1:
        return [_bench_cell(c) for c in cells]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_bench_cell, cells))


def write_benchmark_csv(rows: Iterable[BenchmarkRow], fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(BenchmarkRow.FIELDS)
    for row in rows:
        writer.writerow(row.as_row())
