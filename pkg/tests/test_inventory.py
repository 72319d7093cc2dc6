import io
import json
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pboxcdf.arith import RealInterval
from pboxcdf.core import point_interval
from pboxcdf.domains import CDF_POINT, CONVEX, PBOX
from pboxcdf.inventory import (
    ANCHOR_HI,
    ANCHOR_LO,
    BenchmarkRow,
    DemandGenerator,
    InfeasibleModelError,
    InventoryModel,
    Pattern,
    build_model,
    demand_interval,
    generate_demands,
    pattern_mean,
    pattern_model,
    run_benchmark,
    search_min_cost,
    ten_cycle_model,
    write_benchmark_csv,
)
from pboxcdf.propagate import ConstraintStore


def single_cycle(demand, order_cost=100.0, holding_cost=1.0, unit_cost=5.0):
    return InventoryModel(order_cost, holding_cost, unit_cost, 0.0, (demand,))


def q(d):
    lo, hi = (d.lo, d.hi) if isinstance(d, RealInterval) else (d.lo.quantile, d.hi.quantile)
    return (lo, hi)


# -- demand generation ---------------------------------------------------------------

@pytest.mark.parametrize(
    "pattern, t, mean",
    [("P1", 3, 100.0), ("P2", 3, 103.0), ("P3", 3, 149.0), ("P4", 3, 103.0), ("P1", 9, 0.0), ("P4", 30, 72.0)],
)
def test_pattern_means(pattern, t, mean):
    assert pattern_mean(pattern, t) == pytest.approx(mean, abs=1e-12)


def test_means_are_clamped_at_zero():
    assert pattern_mean(Pattern.P1, 9, base=50) >= 0.0
    assert all(m >= 0 for m in DemandGenerator("P1").means(52))


def test_generated_demands_span_the_spread():
    d = generate_demands(DemandGenerator("P2", spread=0.1), 3)[2]
    assert q(d) == (pytest.approx(92.7), pytest.approx(113.3))
    assert d.lo.cdf == ANCHOR_LO and d.hi.cdf == ANCHOR_HI
    assert d.lo.slope == d.hi.slope == pytest.approx(1 / 20.6)


def test_zero_mean_gives_a_point_demand():
    d = generate_demands(DemandGenerator("P1"), 9)[8]
    assert q(d) == (pytest.approx(0.0, abs=1e-12),) * 2


def test_generator_validation():
    with pytest.raises(ValueError):
        generate_demands(DemandGenerator("P1"), 0)
    with pytest.raises(ValueError):
        DemandGenerator("P1", spread=1.5)
    with pytest.raises(ValueError):
        DemandGenerator("P5")


def test_demand_interval():
    d = demand_interval(25.6, 26.9)
    assert (*d.lo, *d.hi) == pytest.approx((25.6, ANCHOR_LO, 1 / 1.3, 26.9, ANCHOR_HI, 1 / 1.3), rel=1e-12)
    assert demand_interval(4, 4) == point_interval(4)
    with pytest.raises(ValueError):
        demand_interval(5, 4)


# -- the model -------------------------------------------------------------------------

def test_model_validation():
    with pytest.raises(ValueError):
        InventoryModel(100, 1, 0, 0, ())
    with pytest.raises(ValueError):
        InventoryModel(-1, 1, 0, 0, (point_interval(1),))
    with pytest.raises(ValueError):
        InventoryModel(100, 1, 0, 0, (demand_interval(-2, 1),))


def test_fixed_demand_forces_an_order():
    m = single_cycle(point_interval(10))
    store = ConstraintStore()
    hd = build_model(m, store)
    assert store.bounds(hd.order[0]) == (10, 10)
    assert store.bounds(hd.delta[0]) == (1, 1)
    assert store.bounds(hd.total) == (150, 150)


def test_fixed_demand_plan():
    report = search_min_cost(single_cycle(point_interval(10)))
    assert report.status == "complete"
    assert report.replenishment_range == (1, 1)
    [plan] = report.plans
    assert plan.delta == ((1, 1),)
    assert q(plan.order_domains[0]) == (10, 10)
    assert q(plan.total_cost) == (150, 150)


def test_zero_demand_needs_no_order():
    report = search_min_cost(single_cycle(point_interval(0)))
    [plan] = report.plans
    assert plan.delta == ((0, 0),)
    assert q(plan.total_cost) == (0, 0)
    assert report.replenishment_range == (0, 0)


def test_initial_stock_covers_demand():
    m = InventoryModel(100, 1, 0, 20.0, (point_interval(10), point_interval(10)))
    report = search_min_cost(m)
    assert report.replenishment_range == (0, 0)
    # 10 units held at the end of the first cycle, none at the end of the horizon
    assert q(report.plans[0].total_cost) == (10, 10)


def test_root_infeasibility_is_reported():
    # more stock than the whole horizon can consume
    m = InventoryModel(100, 1, 0, 50.0, (point_interval(10),))
    with pytest.raises(InfeasibleModelError):
        build_model(m, ConstraintStore())
    assert search_min_cost(m).status == "infeasible"


def test_zero_time_limit_times_out():
    report = search_min_cost(ten_cycle_model(), time_limit=0)
    assert report.status == "timeout" and report.plans == []


def test_node_limit_marks_the_report_incomplete():
    report = search_min_cost(ten_cycle_model(), node_limit=5)
    assert report.status == "incomplete"
    assert report.nodes == 6


# -- leaf invariants ---------------------------------------------------------------------

def check_leaf(m, plan):
    """Balance and indicator invariants of one plan."""
    total = RealInterval(m.initial_inventory, m.initial_inventory)
    before = total
    for t, (x, inv, d) in enumerate(zip(plan.order_domains, plan.inventory_domains, m.demands)):
        X, I, D = (RealInterval(*q(v)) for v in (x, inv, d))
        # each side of I_t = I_{t-1} + X_t - d_t lies inside the evaluation of the others
        for got, want in ((I, before + X - D), (X, I - before + D), (before, I - X + D)):
            assert want.lo - 1e-7 <= got.lo and got.hi <= want.hi + 1e-7
        total = total + X - D
        assert total.lo - 1e-7 <= I.lo and I.hi <= total.hi + 1e-7
        assert I.lo >= 0
        if plan.delta[t] == (0, 0):
            assert q(x) == (0, 0)
        if X.lo > 0:
            assert plan.delta[t] == (1, 1)
        before = I


@pytest.fixture(scope="module")
def ten_cycle_report():
    return search_min_cost(ten_cycle_model())


def test_ten_cycle_range(ten_cycle_report):
    r = ten_cycle_report
    assert r.status == "complete"
    lo, hi = r.replenishment_range
    assert 1 <= lo < hi <= 10
    assert all(p.replenishments in range(lo, hi + 1) for p in r.plans)


def test_ten_cycle_leaves(ten_cycle_report):
    m = ten_cycle_model()
    for plan in ten_cycle_report.plans:
        check_leaf(m, plan)


def test_returned_plans_are_not_dominated(ten_cycle_report):
    best_hi = min(q(p.total_cost)[1] for p in ten_cycle_report.plans)
    assert all(q(p.total_cost)[0] <= best_hi + 1e-6 for p in ten_cycle_report.plans)


def test_suffix_bound_keeps_the_plan_set():
    m = pattern_model("P3", 8)
    with_bound = search_min_cost(m)
    without = search_min_cost(m, suffix_bound=False)
    assert [p.delta for p in with_bound.plans] == [p.delta for p in without.plans]
    assert with_bound.nodes <= without.nodes


@given(st.integers(1, 6), st.sampled_from(list(Pattern)), st.floats(0, 0.2))
def test_pattern_leaves(horizon, pattern, spread):
    m = pattern_model(pattern, horizon, spread=spread)
    report = search_min_cost(m)
    assert report.status == "complete"
    for plan in report.plans:
        check_leaf(m, plan)


def _branch(m, alg, decisions):
    """Fix the indicators one by one; the trail of quantile bounds, or None on failure."""
    store = ConstraintStore(alg)
    hd = build_model(m, store)
    zero = alg.point(0.0)
    for t, value in enumerate(decisions):
        if not store.restrict(hd.delta[t], alg.point(float(value))):
            return None
        if value == 1 and t > 0 and not store.restrict(hd.inventory[t - 1], zero):
            return None
        if not store.run_to_fixpoint():
            return None
    return [store.bounds(v) for v in range(len(store.domains))]


@pytest.mark.parametrize("seed", range(12))
def test_pbox_and_convex_agree_on_quantiles(seed):
    rng = random.Random(seed)
    m = ten_cycle_model()
    decisions = [rng.choice((0, 1)) for _ in range(m.horizon)]
    decisions[0] = 1
    p, c = _branch(m, PBOX, decisions), _branch(m, CONVEX, decisions)
    assert (p is None) == (c is None)
    if p is not None:
        assert p == pytest.approx(c, abs=1e-9)


def test_all_models_find_the_same_plans():
    m = pattern_model("P1", 10)
    reports = [search_min_cost(m, alg) for alg in (PBOX, CONVEX, CDF_POINT)]
    deltas = [sorted(p.delta for p in r.plans) for r in reports]
    assert deltas[0] == deltas[1] == deltas[2]
    assert reports[0].nodes == reports[1].nodes


# -- files ------------------------------------------------------------------------------

def test_model_json_round_trip(tmp_path):
    m = ten_cycle_model()
    path = tmp_path / "model.json"
    m.save(path)
    assert InventoryModel.load(path) == m
    doc = json.loads(path.read_text())
    assert doc["N"] == 10 and doc["unit_cost"]["lo"] == {"q": 5.17, "F": 0.1, "S": 1.2}


def test_model_json_with_observations(tmp_path, data_dir):
    (tmp_path / "obs.csv").write_text((data_dir / "steel_stud_reconstructed.csv").read_text())
    doc = {"N": 2, "order_cost": 10, "holding_cost": 1, "unit_cost": 2, "I0": 0,
           "demands": [{"observations": "obs.csv"}, {"lo": {"q": 1, "F": 0.2, "S": 1}, "hi": {"q": 2, "F": 0.8, "S": 1}}]}
    path = tmp_path / "m.json"
    path.write_text(json.dumps(doc))
    m = InventoryModel.load(path)
    assert q(m.demands[0]) == (5.17, 6.36)
    assert m.unit_cost == 2.0


def test_horizon_mismatch_is_rejected():
    doc = ten_cycle_model().to_json()
    doc["N"] = 3
    with pytest.raises(ValueError):
        InventoryModel.from_json(doc)


def test_shipped_model_file(data_dir):
    assert InventoryModel.load(data_dir / "ten_cycle_model.json") == ten_cycle_model()


def test_report_json(ten_cycle_report):
    doc = ten_cycle_report.to_json()
    assert doc["model"] == "pbox" and doc["status"] == "complete"
    assert doc["replenishment_range"] == list(ten_cycle_report.replenishment_range)
    assert len(doc["plans"]) == len(ten_cycle_report.plans)
    assert set(doc["plans"][0]) >= {"delta", "total_cost", "orders", "inventory"}


# -- benchmark --------------------------------------------------------------------------

def test_benchmark_small_cell():
    rows = run_benchmark(["P1"], [10], ["pbox", "convex", "cdf-point"])
    assert [r.model for r in rows] == ["pbox", "convex", "cdf-point"]
    assert all(r.status == "complete" and r.nodes > 0 for r in rows)


def test_benchmark_zero_timeout():
    rows = run_benchmark(list(Pattern), [10, 14], ["pbox", "convex"], timeout=0)
    assert len(rows) == 16
    assert {r.status for r in rows} == {"timeout"}


def test_benchmark_in_parallel_keeps_row_order():
    rows = run_benchmark(["P3", "P1"], [4], ["convex"], jobs=2)
    assert [(r.pattern, r.horizon) for r in rows] == [("P3", 4), ("P1", 4)]


def test_benchmark_validation():
    with pytest.raises(ValueError):
        run_benchmark(["P1"], [], ["pbox"])
    with pytest.raises(ValueError):
        run_benchmark(["P1"], [4], ["fuzzy"])


def test_benchmark_csv():
    buf = io.StringIO()
    write_benchmark_csv([BenchmarkRow("P1", 10, "pbox", 12.3456, 7, "complete")], buf)
    assert buf.getvalue() == "pattern,horizon,model,wall_ms,nodes,status\nP1,10,pbox,12.346,7,complete\n"
