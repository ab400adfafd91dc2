"""Daily storage scheduling and annual bills.

Each day a household (or a coordinated group) picks hourly battery actions
``u`` minimizing ``q.[g]+ + r.[g]-`` where the grid exchange is

    g = n + [u]+ / (eta_C * eta_I) + eta_D * eta_I * [u]-

and the stored energy follows ``x_h = eta_S * x_{h-1} + u_h`` within
``[0, capacity]``. Days are solved one at a time, each starting from the
previous day's final state.

Two backends return the same optimum: ``"exact"`` (default) is a compiled
piecewise-linear dynamic program; ``"highs"`` builds the split-variable LP
and hands it to scipy's HiGHS.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from . import _kernels
from .calendar import HOURS_PER_DAY
from .devices import DeviceSpec

TIE_BREAK = 1e-7


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class DayProblem:
    net_load: np.ndarray
    buy: np.ndarray
    sell: np.ndarray
    spec: DeviceSpec
    x0: float = 0.0

    def __post_init__(self):
        for name in ("net_load", "buy", "sell"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (HOURS_PER_DAY,):
                raise ValueError(f"{name} must have 24 entries")
            object.__setattr__(self, name, v)
        if np.any(self.sell < 0) or np.any(self.sell > self.buy):
            raise ValueError("prices must satisfy 0 <= sell <= buy")
        if not -1e-12 <= self.x0 <= self.spec.capacity + 1e-12:
            raise ValueError("initial state outside [0, capacity]")


@dataclass(frozen=True)
class DayDispatch:
    u: np.ndarray
    x: np.ndarray
    g: np.ndarray
    cost: float


@dataclass
class YearResult:
    bill: float
    daily_costs: np.ndarray
    end_states: np.ndarray
    u: np.ndarray = field(repr=False)
    x: np.ndarray = field(repr=False)
    g: np.ndarray = field(repr=False)


def net_load(load, generation, eta_inverter: float) -> np.ndarray:
    """``n = l - eta_I * e``."""
    return np.asarray(load, dtype=float) - eta_inverter * np.asarray(generation, dtype=float)


def grid_exchange(n, u, spec: DeviceSpec) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return (
        np.asarray(n, dtype=float)
        + spec.charge_factor * np.maximum(u, 0.0)
        + spec.discharge_factor * np.minimum(u, 0.0)
    )


def exchange_cost(g, buy, sell) -> float:
    g = np.asarray(g, dtype=float)
    return float(np.dot(np.maximum(g, 0.0), buy) + np.dot(np.minimum(g, 0.0), sell))


def state_trajectory(u, x0: float, eta_self: float) -> np.ndarray:
    x = np.empty(len(u))
    prev = x0
    for h, uh in enumerate(u):
        prev = eta_self * prev + uh
        x[h] = prev
    return x


def solve_day(problem: DayProblem, *, backend: str = "exact", tie_break: float = TIE_BREAK) -> DayDispatch:
    if backend == "exact":
        return _solve_exact(problem, problem.net_load, tie_break)
    if backend == "highs":
        return _solve_highs(problem, tie_break)
    raise ValueError(f"unknown backend {backend!r}")


def plan_and_evaluate(problem: DayProblem, n_true, *, tie_break: float = TIE_BREAK) -> DayDispatch:
    """Schedule against ``problem.net_load`` but settle against ``n_true``."""
    return _solve_exact(problem, np.asarray(n_true, dtype=float), tie_break)


def _solve_exact(p: DayProblem, n_true, tie_break):
    s = p.spec
    u = np.empty(HOURS_PER_DAY)
    x = np.empty(HOURS_PER_DAY)
    g = np.empty(HOURS_PER_DAY)
    cost = _kernels.solve_day_kernel(
        p.net_load, n_true, p.buy, p.sell, float(p.x0),
        s.capacity, s.charge_rate, s.discharge_rate,
        s.charge_factor, s.discharge_factor, s.eta_self, tie_break,
        u, x, g,
    )
    return DayDispatch(u, x, g, float(cost))


def _solve_highs(p: DayProblem, tie_break):
    split = highs_split(p, tie_break)
    u = split["u_plus"] - split["u_minus"]
    x = state_trajectory(u, p.x0, p.spec.eta_self)
    g = grid_exchange(p.net_load, u, p.spec)
    return DayDispatch(u, x, g, exchange_cost(g, p.buy, p.sell))


def highs_split(p: DayProblem, tie_break: float = TIE_BREAK) -> dict:
    """Raw split-variable LP solution: ``u_plus, u_minus, g_plus, g_minus, x``."""
    # columns per hour: u+, u-, g+, g-, x
    s = p.spec
    H = HOURS_PER_DAY
    nv = 5 * H
    iup, ium, igp, igm, ix = (np.arange(H) + k * H for k in range(5))
    c = np.zeros(nv)
    c[igp] = p.buy
    c[igm] = -p.sell
    c[iup] = tie_break
    c[ium] = tie_break
    A = np.zeros((2 * H, nv))
    b = np.zeros(2 * H)
    for h in range(H):
        # g+ - g- - a u+ + d u- = n
        A[h, igp[h]] = 1.0
        A[h, igm[h]] = -1.0
        A[h, iup[h]] = -s.charge_factor
        A[h, ium[h]] = s.discharge_factor
        b[h] = p.net_load[h]
        # x_h - eta_S x_{h-1} - u+ + u- = 0
        row = H + h
        A[row, ix[h]] = 1.0
        A[row, iup[h]] = -1.0
        A[row, ium[h]] = 1.0
        if h == 0:
            b[row] = s.eta_self * p.x0
        else:
            A[row, ix[h - 1]] = -s.eta_self
    bounds = (
        [(0.0, s.charge_rate)] * H
        + [(0.0, s.discharge_rate)] * H
        + [(0.0, None)] * (2 * H)
        + [(0.0, s.capacity)] * H
    )
    res = linprog(c, A_eq=A, b_eq=b, bounds=bounds, method="highs")
    if res.status != 0:
        raise SolverError(f"HiGHS failed: status={res.status} {res.message}")
    sol = res.x
    return {"u_plus": sol[iup], "u_minus": sol[ium], "g_plus": sol[igp], "g_minus": sol[igm], "x": sol[ix]}


def run_year(
    load,
    generation,
    buy,
    sell,
    spec: DeviceSpec,
    *,
    x0: float = 0.0,
    tie_break: float = TIE_BREAK,
    forecast_net_load=None,
) -> YearResult:
    """Solve every day in order, chaining the state of charge.

    With ``forecast_net_load`` the schedule is planned on the forecast and
    settled on the true net load.
    """
    n_true = net_load(load, generation, spec.eta_inverter)
    n_plan = n_true if forecast_net_load is None else np.asarray(forecast_net_load, dtype=float)
    buy = np.asarray(buy, dtype=float)
    sell = np.asarray(sell, dtype=float)
    hours = n_true.size
    if hours % HOURS_PER_DAY or any(v.size != hours for v in (n_plan, buy, sell)):
        raise ValueError("load, generation and prices must share a whole-day length")
    if np.any(sell < 0) or np.any(sell > buy):
        raise ValueError("prices must satisfy 0 <= sell <= buy")
    u = np.empty(hours)
    x = np.empty(hours)
    g = np.empty(hours)
    daily = np.empty(hours // HOURS_PER_DAY)
    _kernels.run_year_kernel(
        n_plan, n_true, buy, sell, float(x0),
        spec.capacity, spec.charge_rate, spec.discharge_rate,
        spec.charge_factor, spec.discharge_factor, spec.eta_self, tie_break,
        u, x, g, daily,
    )
    if not np.all(np.isfinite(daily)):
        bad = int(np.flatnonzero(~np.isfinite(daily))[0])
        raise SolverError(f"non-finite cost on day {bad}")
    end_states = x[HOURS_PER_DAY - 1 :: HOURS_PER_DAY].copy()
    return YearResult(float(daily.sum()), daily, end_states, u, x, g)


def baseline_bill(load, buy) -> float:
    """Bill without any technology, ``L . Q``."""
    load = np.asarray(load, dtype=float)
    buy = np.asarray(buy, dtype=float)
    if load.shape != buy.shape:
        raise ValueError(f"length mismatch: {load.shape} vs {buy.shape}")
    return float(np.dot(load, buy))


def no_device_cost(n, buy, sell) -> float:
    """Cost of a net-load profile settled hour by hour with the battery idle."""
    return exchange_cost(n, buy, sell)
