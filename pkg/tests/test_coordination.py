import numpy as np
import pytest

from dervalue.coordination import (
    GroupInputs, ScalingLaw, adopters_at, capacity_fraction, n_adopters, rank_households,
    solve_group_year, total_cost_no_coord, vca_curve, vci_values,
)
from dervalue.devices import aggregate_devices, make_device
from dervalue.dispatch import DayProblem, run_year, solve_day
from dervalue.forecast import forecast_costs, seed_list
from dervalue.household import Household, policy_schedules, simulate_bills
from dervalue.tariffs import Policy, PriceSchedule


def test_orderings():
    s = {"h1": 5.0, "h2": 1.0, "h3": 3.0}
    assert rank_households(s, "forward").order == ("h1", "h3", "h2")
    assert rank_households(s, "reverse").order == ("h2", "h3", "h1")
    assert rank_households(s, "forward").order == rank_households(s, "reverse").order[::-1]
    tie = {"b": 1.0, "a": 1.0, "c": 2.0}
    assert rank_households(tie, "forward").order == ("c", "a", "b")
    assert rank_households(tie, "reverse").order == ("a", "b", "c")
    r1 = rank_households(s, "random", 3)
    assert sorted(r1.order) == sorted(s) and r1.order == rank_households(s, "random", 3).order
    with pytest.raises(ValueError):
        rank_households(s, "random")
    with pytest.raises(ValueError):
        rank_households({}, "forward")


def test_adopters():
    o = rank_households({f"h{i}": float(i) for i in range(10)}, "forward")
    assert adopters_at(o, 0) == []
    assert len(adopters_at(o, 100)) == 10
    assert adopters_at(o, 25) == ["h9", "h8"]
    assert n_adopters(3, 100 / 3 * 3) == 3
    with pytest.raises(ValueError):
        n_adopters(10, 120)


def test_total_cost_no_coord():
    with_tech = {"a": 1.0, "b": 2.0, "c": 3.0}
    base = {"a": 5.0, "b": 6.0, "c": 7.0}
    assert total_cost_no_coord([], with_tech, base) == 18
    assert total_cost_no_coord(["a", "b", "c"], with_tech, base) == 6
    o = rank_households({"a": 1.0, "b": 3.0, "c": 2.0}, "forward")
    totals = [total_cost_no_coord(adopters_at(o, t), with_tech, base) for t in range(0, 101, 10)]
    assert np.all(np.diff(totals) <= 0)
    with pytest.raises(KeyError):
        total_cost_no_coord(["z"], with_tech, base)


def test_scaling_law():
    law = ScalingLaw()
    xs = np.logspace(-3, 4, 50)
    w = np.array([law(x) for x in xs])
    assert np.all((w >= law.cv_min) & (w <= law.cv_max))
    assert np.all(np.diff(w) <= 0)
    assert ScalingLaw.constant(0.3)(12345.0) == 0.3
    with pytest.raises(ValueError):
        ScalingLaw(cv_min=0.5, cv_max=0.1)


def _household(hid, load, sun, z=None):
    from dervalue.devices import net_zero_size, pv_generation

    z = z if z is not None else net_zero_size(load, sun)
    spec = make_device(z)
    return Household(hid, "z", load, sun, spec, pv_generation(z, sun))


def _days(n_days, rng, shape):
    return np.concatenate([shape * rng.uniform(0.8, 1.2, 24) for _ in range(n_days)])


SUN = np.clip(np.sin(np.linspace(-np.pi / 2, 3 * np.pi / 2, 24)), 0, None) * 0.8
DAYTIME = np.r_[np.full(8, 0.3), np.full(10, 1.6), np.full(6, 0.4)]
EVENING = np.r_[np.full(16, 0.3), np.full(6, 2.0), np.full(2, 0.6)]
TOU = np.r_[np.full(16, 0.2), np.full(5, 0.36), np.full(3, 0.2)]


def _world(n_days=20, seed=0):
    rng = np.random.default_rng(seed)
    sun = np.tile(SUN, n_days) * rng.uniform(0.6, 1.0, 24 * n_days)
    hh = [
        _household("a", _days(n_days, rng, DAYTIME), sun),
        _household("b", _days(n_days, rng, EVENING), sun),
        _household("c", _days(n_days, rng, (DAYTIME + EVENING) / 2), sun),
        _household("d", _days(n_days, rng, EVENING * 0.7), sun),
        _household("e", _days(n_days, rng, DAYTIME * 1.3), sun),
    ]
    buy = np.tile(TOU, n_days)
    return hh, buy


def test_group_degenerate_cases():
    hh, buy = _world()
    sched = {h.household_id: PriceSchedule(buy, 0.8 * buy) for h in hh}
    gi = GroupInputs.build(hh, sched)
    c0 = solve_group_year(gi, []).bill
    n_g = gi.load_total
    assert c0 == pytest.approx(float(np.dot(n_g, gi.buy)), rel=1e-12)
    one = GroupInputs.build(hh[:1], sched)
    b_n = run_year(hh[0].load, hh[0].generation, buy, 0.8 * buy, hh[0].spec).bill
    assert solve_group_year(one, ["a"]).bill == pytest.approx(b_n, rel=1e-12)


def test_group_never_worse_per_day_with_shared_prices():
    hh, buy = _world(n_days=15, seed=4)
    sell = 0.3 * buy
    years = {h.household_id: run_year(h.load, h.generation, buy, sell, h.spec) for h in hh}
    for adopters in (["a"], ["a", "b", "c"], [h.household_id for h in hh]):
        gen = sum(h.generation for h in hh if h.household_id in adopters)
        spec = aggregate_devices(h.spec for h in hh if h.household_id in adopters)
        load = sum(h.load for h in hh)
        n_g = load - 0.92 * gen
        for j in range(15):
            sl = slice(24 * j, 24 * j + 24)
            x0 = sum(years[i].end_states[j - 1] for i in adopters) if j else 0.0
            indiv = sum(
                years[h.household_id].daily_costs[j] if h.household_id in adopters
                else float(np.dot(h.load[sl], buy[sl]))
                for h in hh
            )
            group = solve_day(DayProblem(n_g[sl], buy[sl], sell[sl], spec, min(x0, spec.capacity))).cost
            assert group <= indiv + 1e-6


def test_clone_population_vca():
    rng = np.random.default_rng(2)
    n_days = 20
    load = _days(n_days, rng, EVENING)
    sun = np.tile(SUN, n_days)
    hh = [_household(f"c{i}", load, sun) for i in range(4)]
    buy = np.tile(TOU, n_days)
    sched = {h.household_id: PriceSchedule(buy, 0.5 * buy) for h in hh}
    bills = simulate_bills(hh, sched)
    gi = GroupInputs.build(hh, sched)
    wt = {i: b.with_tech for i, b in bills.items()}
    bl = {i: b.baseline for i, b in bills.items()}
    order = rank_households({h.household_id: 1.0 for h in hh}, "forward")
    curve = vca_curve(gi, order, [0, 25, 50, 75, 100], wt, bl)
    t_bl = curve[0].total_baseline
    assert abs(curve[0].vca) <= 1e-6 * t_bl
    assert abs(curve[-1].vca) <= 1e-6 * t_bl
    assert all(r.vca >= -1e-6 * t_bl for r in curve)


def test_heterogeneous_pair_has_positive_vca():
    rng = np.random.default_rng(5)
    n_days = 10
    sun = np.tile(SUN, n_days)
    solar_heavy = _household("a", _days(n_days, rng, DAYTIME * 0.5), sun, z=8.0)
    evening = _household("b", _days(n_days, rng, EVENING), sun)
    hh = [solar_heavy, evening]
    buy = np.tile(TOU, n_days)
    sell = np.full(buy.size, 0.03)
    sched = {h.household_id: PriceSchedule(buy, sell) for h in hh}
    bills = simulate_bills(hh, sched)
    gi = GroupInputs.build(hh, sched)
    order = rank_households({"a": 2.0, "b": 1.0}, "forward")
    res = vca_curve(gi, order, [50], {i: b.with_tech for i, b in bills.items()},
                    {i: b.baseline for i, b in bills.items()})[0]
    assert res.n_adopters == 1 and res.vca > 0


def test_uniform_price_vca_nonnegative_and_capacity(small_world):
    _, hh, lib = small_world
    sched = policy_schedules(hh, Policy.P3, lib)
    bills = simulate_bills(hh, sched)
    gi = GroupInputs.build(hh, sched)
    s_n = {i: (b.baseline - b.with_tech) / b.z for i, b in bills.items()}
    wt = {i: b.with_tech for i, b in bills.items()}
    bl = {i: b.baseline for i, b in bills.items()}
    sizes = {h.household_id: h.z for h in hh}
    for pattern, seed in (("forward", None), ("reverse", None), ("random", 1)):
        o = rank_households(s_n, pattern, seed)
        curve = vca_curve(gi, o, range(0, 101, 25), wt, bl)
        t_bl = curve[0].total_baseline
        assert abs(curve[0].vca) <= 1e-6 * t_bl
        assert all(r.vca >= -1e-6 * t_bl for r in curve)
        caps = [capacity_fraction(adopters_at(o, t), sizes) for t in range(0, 101, 10)]
        assert np.all(np.diff(caps) >= 0) and caps[-1] == pytest.approx(1.0)


def test_vci_zero_without_noise():
    hh, buy = _world(n_days=10)
    sched = {h.household_id: PriceSchedule(buy, 0.5 * buy) for h in hh}
    bills = simulate_bills(hh, sched)
    gi = GroupInputs.build(hh, sched)
    bl = {i: b.baseline for i, b in bills.items()}
    wt = {i: b.with_tech for i, b in bills.items()}
    order = rank_households({h.household_id: float(k) for k, h in enumerate(hh)}, "forward")
    seeds = seed_list(0, 3)
    fc = {h.household_id: forecast_costs(h, sched[h.household_id], [0], seeds) for h in hh}
    for t in (0, 40, 100):
        vca = vca_curve(gi, order, [t], wt, bl)[0].vca
        v = vci_values(gi, order, t, [0], fc, bl, vca, ScalingLaw.constant(0.0), seeds)
        assert np.allclose(v[0], 0.0, atol=1e-6)


def test_vci_clones_with_matching_error_is_noise():
    rng = np.random.default_rng(8)
    n_days = 30
    load = _days(n_days, rng, EVENING)
    sun = np.tile(SUN, n_days)
    hh = [_household(f"c{i}", load, sun) for i in range(3)]
    buy = np.tile(TOU, n_days)
    sched = {h.household_id: PriceSchedule(buy, 0.3 * buy) for h in hh}
    bills = simulate_bills(hh, sched)
    gi = GroupInputs.build(hh, sched)
    bl = {i: b.baseline for i, b in bills.items()}
    order = rank_households({h.household_id: 1.0 for h in hh}, "forward")
    seeds = seed_list(2, 40)
    fc = {h.household_id: forecast_costs(h, sched[h.household_id], [50], seeds) for h in hh}
    vca = vca_curve(gi, order, [100], {i: b.with_tech for i, b in bills.items()}, bl)[0].vca
    v = vci_values(gi, order, 100, [50], fc, bl, vca, ScalingLaw.constant(0.5), seeds)[50]
    se = v.std(ddof=1) / np.sqrt(v.size)
    assert abs(v.mean()) <= 4 * se + 1e-6 * sum(bl.values())
