"""Forecast errors and the value of information.

A household with forecast-error CV ``P`` plans each day on

    l_hat = [l + eps]+,  e_hat = [e + gamma]+

with ``eps ~ N(0, (P * mean(L))^2)`` and ``gamma ~ N(0, (P * mean(E))^2)``
i.i.d. over hours and days, then pays for the schedule against the true
net load. CV levels are in percent. All levels share one set of standard
normal draws per (seed, household), so costs across the CV grid are
compared on common random numbers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calendar import HOURS_PER_DAY
from .devices import DeviceSpec
from .dispatch import TIE_BREAK, grid_exchange, exchange_cost, run_year
from .synth import _rng, derive_seed

DEFAULT_CV_GRID = tuple(range(0, 101, 10))
FEASIBILITY_TOL = 1e-9


@dataclass(frozen=True)
class NoiseModel:
    cv: float
    sigma_load: float
    sigma_gen: float
    seed: int
    key: str

    @classmethod
    def for_household(cls, cv: float, load, generation, seed: int, key: str) -> "NoiseModel":
        if cv < 0:
            raise ValueError("CV must be nonnegative")
        frac = cv / 100.0
        return cls(cv, frac * float(np.mean(load)), frac * float(np.mean(generation)), seed, key)


def noise_draws(seed: int, key: str, n_days: int) -> tuple[np.ndarray, np.ndarray]:
    """Standard normal draws ``(load, generation)``, each ``(n_days, 24)``."""
    rng = _rng(seed, "forecast", key)
    z = rng.standard_normal((2, n_days, HOURS_PER_DAY))
    return z[0], z[1]


def perturb(load, generation, sigma_load, sigma_gen, z_load, z_gen):
    """Truncated noisy forecasts of load and generation (any matching shape)."""
    if sigma_load == 0 and sigma_gen == 0:
        return np.asarray(load, dtype=float), np.asarray(generation, dtype=float)
    l_hat = np.maximum(np.asarray(load) + sigma_load * z_load, 0.0)
    e_hat = np.maximum(np.asarray(generation) + sigma_gen * z_gen, 0.0)
    return l_hat, e_hat


def perturb_day(l, e, noise: NoiseModel, j: int, n_days: int = 366):
    """Forecasts for day ``j``; draws depend only on (seed, key, j, hour)."""
    zl, zg = noise_draws(noise.seed, noise.key, n_days)
    return perturb(l, e, noise.sigma_load, noise.sigma_gen, zl[j], zg[j])


def forecast_net_load(load, generation, sigma_load, sigma_gen, z_load, z_gen, eta_inverter):
    l_hat, e_hat = perturb(load, generation, sigma_load, sigma_gen, np.ravel(z_load), np.ravel(z_gen))
    return l_hat - eta_inverter * e_hat


def seed_list(run_seed: int, n: int) -> list[int]:
    """Noise seeds shared by every household and CV level of a run."""
    return [derive_seed(run_seed, "noise", k) for k in range(n)]


class InfeasibleSchedule(ValueError):
    pass


def realized_cost(u, n_true, buy, sell, spec: DeviceSpec, x0: float = 0.0) -> float:
    """Cost of running a fixed schedule against the true net load."""
    u = np.asarray(u, dtype=float)
    tol = FEASIBILITY_TOL
    if np.any(u > spec.charge_rate + tol) or np.any(u < -spec.discharge_rate - tol):
        raise InfeasibleSchedule("schedule exceeds the rate limits")
    x = x0
    for h, uh in enumerate(u):
        x = spec.eta_self * x + uh
        if x < -tol or x > spec.capacity + tol:
            raise InfeasibleSchedule(f"state {x:.6g} out of bounds at hour {h}")
    return exchange_cost(grid_exchange(n_true, u, spec), buy, sell)


def forecast_bill(load, generation, schedule, spec: DeviceSpec, cv: float, z_load, z_gen,
                  tie_break: float = TIE_BREAK) -> float:
    """Annual bill when every day is planned on a CV-``cv`` forecast."""
    frac = cv / 100.0
    if frac == 0:
        return run_year(load, generation, schedule.buy, schedule.sell, spec, tie_break=tie_break).bill
    n_hat = forecast_net_load(
        load, generation,
        frac * float(np.mean(load)), frac * float(np.mean(generation)),
        z_load, z_gen, spec.eta_inverter,
    )
    return run_year(load, generation, schedule.buy, schedule.sell, spec,
                    forecast_net_load=n_hat, tie_break=tie_break).bill


@dataclass
class VoiResult:
    household_id: str
    z: float
    cv_grid: np.ndarray
    costs: np.ndarray          # (n_seeds, n_cv)
    slope: float               # $ per CV percentage point per year
    r2: float

    @property
    def mean_costs(self) -> np.ndarray:
        return self.costs.mean(axis=0)

    @property
    def norm_slope(self) -> float:
        return self.slope / self.z


def fit_line(x, y) -> tuple[float, float, float]:
    """Ordinary least squares ``y ~ a + b x``; returns ``(b, a, r2)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.ptp(x) == 0:
        raise ValueError("need at least two distinct CV levels")
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    b = float(np.sum((x - xm) * (y - ym)) / sxx)
    a = float(ym - b * xm)
    ss_tot = float(np.sum((y - ym) ** 2))
    ss_res = float(np.sum((y - a - b * x) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return b, a, r2


def forecast_costs(household, schedule, cv_grid, seeds) -> np.ndarray:
    """Annual bills for every (seed, CV level); shape ``(len(seeds), len(cv_grid))``."""
    n_days = household.load.size // HOURS_PER_DAY
    out = np.empty((len(seeds), len(cv_grid)))
    base = None
    for i, seed in enumerate(seeds):
        zl, zg = noise_draws(seed, household.household_id, n_days)
        for k, cv in enumerate(cv_grid):
            if cv == 0:
                if base is None:
                    base = forecast_bill(household.load, household.generation, schedule, household.spec, 0, zl, zg)
                out[i, k] = base
            else:
                out[i, k] = forecast_bill(household.load, household.generation, schedule, household.spec, cv, zl, zg)
    return out


def voi_household(household, schedule, cv_grid=DEFAULT_CV_GRID, seeds=(0,)) -> VoiResult:
    cv_grid = np.asarray(cv_grid, dtype=float)
    if cv_grid.size < 2:
        raise ValueError("CV grid needs at least two points")
    if 0 not in cv_grid:
        raise ValueError("CV grid must contain 0")
    costs = forecast_costs(household, schedule, cv_grid, list(seeds))
    slope, _, r2 = fit_line(cv_grid, costs.mean(axis=0))
    return VoiResult(household.household_id, household.z, cv_grid, costs, slope, r2)
