import numpy as np
import pytest

from dervalue.devices import make_device
from dervalue.dispatch import DayProblem, exchange_cost, grid_exchange, no_device_cost, plan_and_evaluate, solve_day
from dervalue.forecast import (
    InfeasibleSchedule, NoiseModel, fit_line, forecast_costs, noise_draws, perturb_day,
    realized_cost, seed_list, voi_household,
)
from dervalue.household import policy_schedules, simulate_bills
from dervalue.tariffs import Policy, PriceSchedule

from _oracles import random_instance


def test_perturb_day_examples():
    l = np.linspace(0, 2, 24)
    e = np.linspace(1, 0, 24)
    zero = NoiseModel.for_household(0, l, e, 1, "h")
    lh, eh = perturb_day(l, e, zero, 3)
    assert np.array_equal(lh, l) and np.array_equal(eh, e)
    big = NoiseModel(100, 50.0, 50.0, 1, "h")
    lh, eh = perturb_day(l, e, big, 3)
    assert np.all(lh >= 0) and np.all(eh >= 0)
    assert (lh == 0).any()
    again = perturb_day(l, e, big, 3)
    assert np.array_equal(again[0], lh) and np.array_equal(again[1], eh)
    assert not np.array_equal(perturb_day(l, e, big, 4)[0], lh)
    with pytest.raises(ValueError):
        NoiseModel.for_household(-1, l, e, 0, "h")


def test_noise_depends_on_key_and_seed():
    a = noise_draws(1, "h1", 3)[0]
    assert not np.array_equal(a, noise_draws(1, "h2", 3)[0])
    assert not np.array_equal(a, noise_draws(2, "h1", 3)[0])
    assert np.array_equal(a, noise_draws(1, "h1", 3)[0])
    assert seed_list(5, 3) == seed_list(5, 3) and len(set(seed_list(5, 30))) == 30


def test_realized_cost_examples(rng):
    for _ in range(20):
        n, q, r, spec, x0 = random_instance(rng)
        p = DayProblem(n, q, r, spec, x0)
        d = solve_day(p)
        assert realized_cost(d.u, n, q, r, spec, x0) == pytest.approx(d.cost, abs=1e-12)
        assert realized_cost(np.zeros(24), n, q, r, spec, x0) == pytest.approx(no_device_cost(n, q, r))
        n_hat = n + rng.normal(0, 0.5, 24)
        plan = solve_day(DayProblem(n_hat, q, r, spec, x0))
        realized = realized_cost(plan.u, n, q, r, spec, x0)
        assert realized >= d.cost - 1e-6
        assert plan_and_evaluate(DayProblem(n_hat, q, r, spec, x0), n).cost == pytest.approx(realized, abs=1e-9)
    spec = make_device(1.0)
    with pytest.raises(InfeasibleSchedule):
        realized_cost(np.full(24, spec.charge_rate), np.zeros(24), np.ones(24), np.zeros(24), spec)


def test_fit_line():
    x = np.arange(0, 101, 10.0)
    b, a, r2 = fit_line(x, 3 + 0.5 * x)
    assert (b, a, r2) == pytest.approx((0.5, 3.0, 1.0))
    with pytest.raises(ValueError):
        fit_line([1, 1], [2, 3])


def test_voi_small_world(small_world):
    _, hh, lib = small_world
    sched = policy_schedules(hh[:3], Policy.P1, lib)
    bills = simulate_bills(hh[:3], sched)
    seeds = seed_list(0, 4)
    for h in hh[:3]:
        res = voi_household(h, sched[h.household_id], (0, 20, 50, 100), seeds)
        b_n = bills[h.household_id].with_tech
        assert np.all(res.costs[:, 0] == b_n)
        assert np.all(res.costs >= b_n - 1e-6)
        assert res.norm_slope == pytest.approx(res.slope / h.z)
    with pytest.raises(ValueError):
        voi_household(hh[0], sched[hh[0].household_id], (10, 20), seeds)


def test_slope_doubles_with_prices(small_world):
    _, hh, lib = small_world
    h = hh[1]
    s = policy_schedules([h], Policy.P3, lib)[h.household_id]
    s2 = PriceSchedule(2 * s.buy, 2 * s.sell)
    seeds = seed_list(1, 3)
    a = voi_household(h, s, (0, 30, 60), seeds)
    b = voi_household(h, s2, (0, 30, 60), seeds)
    assert b.slope == pytest.approx(2 * a.slope, rel=1e-4)


def test_common_random_numbers(small_world):
    _, hh, lib = small_world
    h = hh[0]
    s = policy_schedules([h], Policy.P1, lib)[h.household_id]
    seeds = seed_list(3, 2)
    full = forecast_costs(h, s, [0, 40, 80], seeds)
    part = forecast_costs(h, s, [80], seeds)
    assert np.array_equal(full[:, 2], part[:, 0])
