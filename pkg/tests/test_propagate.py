import random

import pytest
from hypothesis import given, settings

from pboxcdf.arith import RealInterval
from pboxcdf.core import PBoxCdfInterval, TripletPoint as T, is_valid, leq_u, point_interval, top_interval
from pboxcdf.domains import CDF_POINT, CONVEX, PBOX
from pboxcdf.propagate import (
    Inconsistent,
    Kind,
    PropagationBudgetExceeded,
    Status,
    ConstraintStore,
    propagate_add,
    propagate_arith,
    propagate_eq,
    propagate_leq,
    propagate_pos_indicator,
)

from .strategies import random_store, store_specs

I = PBoxCdfInterval(T(10, 0.14, 0.016), T(80, 0.49, 0.06))
J = PBoxCdfInterval(T(20, 0.06, 0.025), T(90, 0.9, 0.014))
U = PBoxCdfInterval(T(0, 0, 0.5), T(2, 1, 0.5))


def box(lo, hi):
    s = 1.0 / (hi - lo)
    return PBoxCdfInterval(T(lo, 0.2, s), T(hi, 0.8, s))


def quantiles(d):
    return (d.lo.quantile, d.hi.quantile)


def build(layout, alg=PBOX):
    domains, constraints = layout
    store = ConstraintStore(alg)
    for d in domains:
        store.new_var(alg.from_pbox(d))
    for kind, *args in constraints:
        store.post(kind, *args)
    return store


def fingerprint(store):
    if store.status is Status.FAILED:
        return "failed"
    return tuple(tuple(round(v, 9) for v in (*d.lo, *d.hi)) for d in store.domains)


def order_contained(inner, outer):
    return leq_u(outer.lo, inner.lo) and leq_u(inner.hi, outer.hi)


# -- ordering ------------------------------------------------------------------------

def test_ordering_example():
    s = ConstraintStore()
    x, i, j = s.new_var(top_interval(0, 100), "X"), s.new_var(I, "I"), s.new_var(J, "J")
    s.post(Kind.LEQ, i, x)
    s.post(Kind.LEQ, x, j)
    assert s.run_to_fixpoint()
    assert s.domain(x) == PBoxCdfInterval(T(10, 0.14, 0.016), T(90, 0.9, 0.014))


def test_ordering_conflict_cuts_quantiles():
    s = ConstraintStore()
    y, i, j = s.new_var(top_interval(0, 100), "Y"), s.new_var(I, "I"), s.new_var(J, "J")
    s.post(Kind.LEQ, y, i)
    s.post(Kind.LEQ, j, y)
    assert s.run_to_fixpoint()
    got = s.domain(y)
    # J's lower line 0.06 + 0.025 (x - 20) meets the initial upper line x / 100 at 88/3
    assert got.lo.quantile == pytest.approx(88 / 3)
    assert got.lo.cdf == pytest.approx(0.88 / 3)
    assert got.hi == I.hi
    assert is_valid(got)


def test_leq_with_itself_is_a_no_op():
    assert propagate_leq(I, I) == (I, I)


def test_mutual_ordering_of_disjoint_domains_fails():
    s = ConstraintStore()
    x, y = s.new_var(box(0, 1)), s.new_var(box(2, 3))
    s.post(Kind.LEQ, x, y)
    s.post(Kind.LEQ, y, x)
    assert not s.run_to_fixpoint()
    assert s.status is Status.FAILED
    assert "ordering wipeout" in s.failure[1]


# -- equality -----------------------------------------------------------------------

def test_equality_takes_the_common_part():
    x, y = propagate_eq(PBoxCdfInterval(T(0, 0, 1), T(2, 1, 0.5)), PBoxCdfInterval(T(1, 0, 1), T(3, 1, 0.5)))
    assert x == y
    assert quantiles(x) == (1, 2)
    assert is_valid(x)


def test_equality_with_itself_changes_nothing():
    assert propagate_eq(I, I) == (I, I)
    s = ConstraintStore()
    x = s.new_var(I)
    s.post(Kind.EQ, x, x)
    assert s.run_to_fixpoint()
    assert s.domain(x) == I


def test_disjoint_equality_fails():
    with pytest.raises(Inconsistent):
        propagate_eq(box(0, 1), box(2, 3))


# -- arithmetic ---------------------------------------------------------------------

def test_add_forward_projection():
    z, x, y = propagate_add(top_interval(-100, 100), U, U)
    assert z.lo == T(0, 0, 0.25) and z.hi == T(4, 1, 0.25)
    assert (x, y) == (U, U)


def test_add_with_zero_makes_the_sum_equal():
    z, x, _ = propagate_add(top_interval(-100, 100), I, point_interval(0))
    assert z == x == I


def test_infeasible_sum_fails():
    with pytest.raises(Inconsistent):
        propagate_add(point_interval(10), U, U)


def test_mul_forward_and_backward():
    z, _, _ = propagate_arith(Kind.MUL, top_interval(-100, 100), box(1, 2), box(3, 4))
    assert quantiles(z) == (3, 8)
    _, _, y = propagate_arith(Kind.MUL, point_interval(6), box(1, 2), top_interval(0, 100))
    assert quantiles(y) == (3, 6)


def test_backward_division_by_a_zero_spanning_range_is_skipped():
    z, x, y = propagate_arith(Kind.MUL, top_interval(-10, 10), box(-1, 1), box(2, 3))
    assert quantiles(x) == (-1, 1)
    assert quantiles(z) == (-3, 3)


def test_division_by_a_zero_spanning_range_fails_the_store():
    s = ConstraintStore()
    z, x, y = s.new_var(top_interval(-10, 10)), s.new_var(box(1, 2)), s.new_var(box(-1, 1))
    s.post(Kind.DIV, z, x, y)
    assert not s.run_to_fixpoint()
    assert "zero" in s.failure[1]


def test_sub_backward():
    # z = x - y with z = [0, 1] and y = [3, 4] forces x into [3, 5]
    _, x, _ = propagate_arith(Kind.SUB, box(0, 1), top_interval(-100, 100), box(3, 4))
    assert quantiles(x) == (3, 5)


# -- indicator ----------------------------------------------------------------------

def test_positive_value_sets_the_indicator():
    _, d = propagate_pos_indicator(box(5, 10), top_interval(0, 1))
    assert quantiles(d) == (1, 1)


def test_zero_indicator_forces_zero():
    x, _ = propagate_pos_indicator(box(0, 10), point_interval(0))
    assert quantiles(x) == (0, 0)


def test_indicator_one_keeps_value_positive():
    x, _ = propagate_pos_indicator(box(0, 10), point_interval(1))
    assert x.lo.quantile == pytest.approx(1e-6)


def test_undecided_indicator_changes_nothing():
    x, d = box(0, 10), top_interval(0, 1)
    assert propagate_pos_indicator(x, d) == (x, d)


def test_contradictory_indicator_fails():
    with pytest.raises(Inconsistent):
        propagate_pos_indicator(box(5, 10), point_interval(0))


def test_fractional_indicator_rounds_to_the_feasible_end():
    _, d = propagate_pos_indicator(box(0, 10), top_interval(0.5, 1))
    assert quantiles(d) == (1, 1)


# -- the store ------------------------------------------------------------------------

def test_empty_store_is_consistent():
    s = ConstraintStore()
    assert s.run_to_fixpoint()
    assert s.status is Status.CONSISTENT


def test_post_queues_the_constraint():
    s = ConstraintStore()
    x, y = s.new_var(I), s.new_var(J)
    c = s.post(Kind.LEQ, x, y)
    assert s.queued() == [c]
    s.post(Kind.LEQ, x, y)
    assert len(s.queued()) == 2


def test_post_checks_arity_and_handles():
    s = ConstraintStore()
    x, y = s.new_var(I), s.new_var(J)
    with pytest.raises(ValueError):
        s.post(Kind.ADD, x, y)
    with pytest.raises(ValueError):
        s.post(Kind.LEQ, x, 7)


def test_failed_store_rejects_posts():
    s = ConstraintStore()
    x = s.new_var(box(0, 1))
    assert not s.restrict(x, box(2, 3))
    with pytest.raises(RuntimeError):
        s.post(Kind.EQ, x, x)


def test_constants_are_shared():
    s = ConstraintStore()
    assert s.constant(3) == s.constant(3.0)
    assert s.bounds(s.constant(3)) == (3, 3)


def test_budget():
    s = build(([top_interval(0, 10), top_interval(0, 10), top_interval(0, 10)], [(Kind.ADD, 0, 1, 2)]))
    s.max_steps = 0
    with pytest.raises(PropagationBudgetExceeded):
        s.run_to_fixpoint()


def test_snapshot_and_restore():
    s = ConstraintStore()
    x, y = s.new_var(top_interval(0, 100)), s.new_var(I)
    s.post(Kind.LEQ, x, y)
    saved = s.snapshot()
    assert s.run_to_fixpoint()
    assert s.domain(x) != top_interval(0, 100)
    s.restore(saved)
    assert s.domain(x) == top_interval(0, 100)


def test_json_export():
    s = ConstraintStore()
    x, i = s.new_var(top_interval(0, 100), "X"), s.new_var(I, "I")
    s.post(Kind.LEQ, i, x)
    s.run_to_fixpoint()
    doc = s.to_json()
    assert doc["algebra"] == "pbox" and doc["status"] == "consistent"
    assert [v["name"] for v in doc["variables"]] == ["X", "I"]
    assert doc["variables"][0]["domain"]["lo"] == {"q": 10, "F": 0.14, "S": 0.016}
    assert doc["constraints"] == [{"kind": "leq", "args": [1, 0]}]


# -- properties -----------------------------------------------------------------------

@settings(max_examples=60)
@given(store_specs)
def test_contractance(layout):
    s = build(layout)
    if s.run_to_fixpoint():
        for before, after in zip(layout[0], s.domains):
            assert order_contained(after, before)
            assert before.a <= after.a and after.b <= before.b
            assert is_valid(after, tol=1e-7)


@settings(max_examples=60)
@given(store_specs)
def test_single_propagators_contract(layout):
    domains, constraints = layout
    s = build(layout)
    for idx, (kind, *args) in enumerate(constraints):
        if s.propagate(idx).failed:
            break
    else:
        for before, after in zip(domains, s.domains):
            assert order_contained(after, before)


@settings(max_examples=60)
@given(store_specs)
def test_fixpoint_is_idempotent(layout):
    s = build(layout)
    if s.run_to_fixpoint():
        for idx in range(len(s.constraints)):
            assert not s.propagate(idx).changed


@settings(max_examples=40)
@given(store_specs)
def test_confluence(layout):
    results = {fingerprint(_solved(layout, None))}
    for seed in range(4):
        results.add(fingerprint(_solved(layout, random.Random(seed))))
    assert len(results) == 1


def _solved(layout, rng, alg=PBOX):
    s = build(layout, alg)
    s.run_to_fixpoint(rng)
    return s


@settings(max_examples=60)
@given(store_specs)
def test_pbox_quantiles_lie_inside_convex(layout):
    p, c = _solved(layout, None), _solved(layout, None, CONVEX)
    if c.status is Status.FAILED:
        assert p.status is Status.FAILED
    elif p.status is Status.CONSISTENT:
        for d, r in zip(p.domains, c.domains):
            assert r.lo <= d.lo.quantile and d.hi.quantile <= r.hi


@settings(max_examples=60)
@given(store_specs)
def test_cdf_point_quantiles_match_convex(layout):
    p, c = _solved(layout, None, CDF_POINT), _solved(layout, None, CONVEX)
    assert p.status == c.status
    if c.status is Status.CONSISTENT:
        assert [quantiles(d) for d in p.domains] == pytest.approx([tuple(r) for r in c.domains], abs=1e-9)


def test_arithmetic_stores_match_convex():
    rng = random.Random(7)
    checked = 0
    for _ in range(100):
        layout = random_store(rng, kinds=(Kind.ADD, Kind.SUB, Kind.EQ))
        p, c = _solved(layout, None), _solved(layout, None, CONVEX)
        assert p.status == c.status
        if c.status is Status.CONSISTENT:
            checked += 1
            assert [quantiles(d) for d in p.domains] == pytest.approx([tuple(r) for r in c.domains], abs=1e-9)
    assert checked >= 20
