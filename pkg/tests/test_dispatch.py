import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dervalue.devices import make_device
from dervalue.dispatch import (
    DayProblem, baseline_bill, exchange_cost, grid_exchange, highs_split, no_device_cost,
    run_year, solve_day, state_trajectory,
)

from _oracles import grid_bound, grid_dp, ideal_spec, random_instance


def test_zero_net_load_idles():
    d = solve_day(DayProblem(np.zeros(24), np.full(24, 0.3), np.full(24, 0.1), make_device(3.0)))
    assert np.all(d.u == 0) and d.cost == 0


def test_worked_arbitrage_day():
    n = np.zeros(24)
    n[18] = 1.0
    q = np.full(24, 0.2)
    q[18] = 0.4
    p = DayProblem(n, q, np.zeros(24), ideal_spec(1.0, 1.0))
    for backend in ("exact", "highs"):
        d = solve_day(p, backend=backend)
        assert d.cost == pytest.approx(0.2, abs=1e-6)
        assert d.u[18] == pytest.approx(-1.0, abs=1e-6)
        assert d.u[:18].sum() == pytest.approx(1.0, abs=1e-6)
    assert grid_dp(n, q, np.zeros(24), ideal_spec(1.0, 1.0)) == pytest.approx(0.2, abs=1e-12)


def test_surplus_day_costs_nothing():
    n = -np.linspace(0.1, 2, 24)
    d = solve_day(DayProblem(n, np.full(24, 0.3), np.zeros(24), make_device(2.0)))
    assert d.cost == 0


def test_rejects_bad_problem():
    with pytest.raises(ValueError):
        DayProblem(np.zeros(24), np.full(24, 0.1), np.full(24, 0.2), make_device(1.0))
    with pytest.raises(ValueError):
        DayProblem(np.zeros(24), np.full(24, 0.2), np.zeros(24), make_device(1.0), x0=2.0)
    with pytest.raises(ValueError):
        solve_day(DayProblem(np.zeros(24), np.ones(24), np.zeros(24), make_device(1.0)), backend="x")


def test_exact_matches_highs(rng):
    for _ in range(150):
        n, q, r, spec, x0 = random_instance(rng, ideal=bool(rng.integers(2)))
        p = DayProblem(n, q, r, spec, x0)
        a = solve_day(p, backend="exact")
        b = solve_day(p, backend="highs")
        assert a.cost == pytest.approx(b.cost, abs=1e-6)


def test_lp_vs_grid_dp(rng):
    for _ in range(30):
        n, q, r, spec, x0 = random_instance(rng, ideal=bool(rng.integers(2)))
        lp = solve_day(DayProblem(n, q, r, spec, x0)).cost
        dp = grid_dp(n, q, r, spec, x0)
        assert lp <= dp + 1e-6
        assert dp - lp <= grid_bound(q, spec) + 1e-6


def test_highs_split_complementarity(rng):
    for _ in range(40):
        n, q, r, spec, x0 = random_instance(rng)
        s = highs_split(DayProblem(n, q, r, spec, x0))
        assert np.all(np.minimum(s["u_plus"], s["u_minus"]) <= 1e-6)
        assert np.all(np.minimum(s["g_plus"], s["g_minus"]) <= 1e-6)


def _check_feasible(d, p):
    s = p.spec
    assert np.all(d.u <= s.charge_rate + 1e-9) and np.all(d.u >= -s.discharge_rate - 1e-9)
    x = state_trajectory(d.u, p.x0, s.eta_self)
    assert np.all(x >= -1e-9) and np.all(x <= s.capacity + 1e-9)
    assert np.allclose(x, d.x, atol=1e-9)
    assert np.allclose(grid_exchange(p.net_load, d.u, s), d.g, atol=1e-12)
    assert d.cost == pytest.approx(exchange_cost(d.g, p.buy, p.sell), abs=1e-12)
    assert d.cost <= no_device_cost(p.net_load, p.buy, p.sell) + 1e-9


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_solution_feasible_and_no_worse_than_idle(seed):
    n, q, r, spec, x0 = random_instance(np.random.default_rng(seed))
    p = DayProblem(n, q, r, spec, x0)
    _check_feasible(solve_day(p), p)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_monotone_in_capacity_and_rate(seed):
    rng = np.random.default_rng(seed)
    n, q, r, spec, x0 = random_instance(rng)
    base = solve_day(DayProblem(n, q, r, spec, x0)).cost
    from dataclasses import replace

    bigger = replace(spec, capacity=spec.capacity * 1.5)
    faster = replace(spec, charge_rate=spec.charge_rate * 1.5, discharge_rate=spec.discharge_rate * 1.5)
    assert solve_day(DayProblem(n, q, r, bigger, x0)).cost <= base + 1e-9
    assert solve_day(DayProblem(n, q, r, faster, x0)).cost <= base + 1e-9


def test_run_year_chaining(rng):
    load = rng.uniform(0.2, 2.0, 48)
    sun = np.tile(np.clip(np.sin(np.linspace(-np.pi / 2, 3 * np.pi / 2, 24)), 0, None), 2)
    gen = 2.0 * sun
    buy = np.tile(np.r_[np.full(16, 0.2), np.full(5, 0.45), np.full(3, 0.2)], 2)
    sell = np.full(48, 0.03)
    spec = make_device(2.0)
    yr = run_year(load, gen, buy, sell, spec)
    n = load - 0.92 * gen
    d0 = solve_day(DayProblem(n[:24], buy[:24], sell[:24], spec, 0.0))
    d1 = solve_day(DayProblem(n[24:], buy[24:], sell[24:], spec, d0.x[-1]))
    assert yr.end_states[0] == pytest.approx(d0.x[-1])
    assert yr.daily_costs == pytest.approx([d0.cost, d1.cost])
    assert yr.bill == pytest.approx(d0.cost + d1.cost)
    assert yr.bill <= baseline_bill(load, buy)


def test_run_year_without_technology(rng):
    load = rng.uniform(0, 3, 72)
    buy = rng.uniform(0.1, 0.4, 72)
    spec = ideal_spec(0.0, 0.0)
    yr = run_year(load, np.zeros(72), buy, np.zeros(72), spec)
    assert yr.bill == pytest.approx(baseline_bill(load, buy), rel=1e-12)


def test_baseline_bill_examples(rng):
    assert baseline_bill(np.ones(24 * 366), np.full(24 * 366, 0.25)) == pytest.approx(0.25 * 24 * 366)
    assert baseline_bill(np.zeros(48), np.ones(48)) == 0
    load, price = rng.random(240), rng.random(240)
    assert baseline_bill(load, price) == pytest.approx(sum(a * b for a, b in zip(load, price)), rel=1e-12)
    with pytest.raises(ValueError):
        baseline_bill(np.ones(24), np.ones(48))


def test_household_year_invariants(small_world):
    from dervalue.household import policy_schedules, simulate_bills
    from dervalue.tariffs import Policy

    _, hh, lib = small_world
    for pol in Policy:
        sched = policy_schedules(hh[:4], pol, lib)
        bills = simulate_bills(hh[:4], sched)
        for h in hh[:4]:
            b = bills[h.household_id]
            s = sched[h.household_id]
            res = b.result
            x = res.x
            assert np.all(x >= -1e-9) and np.all(x <= h.spec.capacity + 1e-9)
            idle = (h.net_load.clip(min=0) * s.buy + h.net_load.clip(max=0) * s.sell).reshape(-1, 24).sum(1)
            assert np.all(res.daily_costs <= idle + 1e-9)
            assert b.with_tech <= b.baseline + 1e-6
