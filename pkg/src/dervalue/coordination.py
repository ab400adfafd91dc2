"""Adoption orderings and the value of coordinating a group of households.

The coordinator treats the whole group as one household: the load of every
member, the PV of adopters, and the pooled storage of adopters, all priced at
the mean of the members' prices. VCA compares that group's perfect-foresight
cost with the sum of bills when everyone acts alone. VCI repeats the
comparison when households plan on their own noisy forecasts and the
coordinator plans on an aggregate forecast with lower error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .calendar import HOURS_PER_DAY
from .devices import aggregate_devices
from .dispatch import TIE_BREAK, YearResult, run_year
from .forecast import forecast_net_load, noise_draws

PATTERNS = ("forward", "reverse", "random")
DEFAULT_T_GRID = tuple(range(0, 101, 10))


@dataclass(frozen=True)
class AdoptionOrdering:
    pattern: str
    order: tuple
    seed: int | None = None


def rank_households(normalized_savings: dict, pattern: str, seed: int | None = None) -> AdoptionOrdering:
    """Adoption order by normalized savings; ties go to the smaller id.

    ``forward`` puts the biggest savers first, ``reverse`` the smallest,
    ``random`` is a seeded permutation.
    """
    if not normalized_savings:
        raise ValueError("empty population")
    ids = sorted(normalized_savings)
    if pattern == "forward":
        order = sorted(ids, key=lambda i: (-normalized_savings[i], i))
    elif pattern == "reverse":
        order = sorted(ids, key=lambda i: (normalized_savings[i], i))
    elif pattern == "random":
        if seed is None:
            raise ValueError("random adoption needs a seed")
        perm = np.random.default_rng(seed).permutation(len(ids))
        order = [ids[k] for k in perm]
    else:
        raise ValueError(f"unknown pattern {pattern!r}")
    return AdoptionOrdering(pattern, tuple(order), seed)


def n_adopters(n: int, t: float) -> int:
    if not 0 <= t <= 100:
        raise ValueError(f"adoption level {t} outside [0, 100]")
    return min(n, math.floor(n * t / 100 + 1e-9))


def adopters_at(ordering: AdoptionOrdering, t: float) -> list:
    return list(ordering.order[: n_adopters(len(ordering.order), t)])


def total_cost_no_coord(adopters, with_tech: dict, baseline: dict) -> float:
    """Adopters pay their with-technology bill, everyone else the baseline."""
    a = set(adopters)
    missing = sorted((a - set(with_tech)) | (a - set(baseline)))
    if missing:
        raise KeyError(f"missing bills for {missing}")
    return float(sum(with_tech[i] if i in a else baseline[i] for i in sorted(baseline)))


@dataclass(frozen=True)
class ScalingLaw:
    """Aggregate forecast CV ``w(x) = clamp(a * x**-b, cv_min, cv_max)``.

    ``x`` is the group's mean hourly energy (kWh). The defaults are
    placeholders, not a fitted law.
    """

    a: float = 0.25
    b: float = 0.33
    cv_min: float = 0.01
    cv_max: float = 1.0

    def __post_init__(self):
        if self.a < 0 or self.cv_min < 0 or self.cv_max < self.cv_min:
            raise ValueError("invalid scaling law parameters")

    @classmethod
    def constant(cls, cv: float) -> "ScalingLaw":
        """A law that ignores group size, CV given as a fraction."""
        return cls(a=cv, b=0.0, cv_min=0.0, cv_max=max(cv, 1.0))

    def __call__(self, x: float) -> float:
        if self.b == 0:
            raw = self.a
        else:
            raw = self.a * x ** (-self.b) if x > 0 else math.inf
        return float(min(max(raw, self.cv_min), self.cv_max))


@dataclass
class GroupInputs:
    """Everything the coordinator needs that does not depend on the ordering."""

    ids: list
    load_total: np.ndarray = field(repr=False)
    generation: dict = field(repr=False)
    specs: dict = field(repr=False)
    buy: np.ndarray = field(repr=False)
    sell: np.ndarray = field(repr=False)
    self_discharge: bool = True

    @classmethod
    def build(cls, households, schedules: dict, self_discharge: bool = True) -> "GroupInputs":
        hh = sorted(households, key=lambda h: h.household_id)
        load = np.sum([h.load for h in hh], axis=0)
        buy = np.mean([schedules[h.household_id].buy for h in hh], axis=0)
        sell = np.mean([schedules[h.household_id].sell for h in hh], axis=0)
        return cls(
            [h.household_id for h in hh],
            load,
            {h.household_id: h.generation for h in hh},
            {h.household_id: h.spec for h in hh},
            buy,
            np.minimum(sell, buy),
            self_discharge,
        )

    def group(self, adopters):
        adopters = sorted(adopters)
        if adopters:
            gen = np.sum([self.generation[i] for i in adopters], axis=0)
        else:
            gen = np.zeros_like(self.load_total)
        spec = aggregate_devices(self.specs[i] for i in adopters)
        if not self.self_discharge:
            spec = replace(spec, eta_self=1.0)
        return gen, spec


def solve_group_year(inputs: GroupInputs, adopters, *, tie_break: float = TIE_BREAK,
                     forecast=None) -> YearResult:
    """Coordinated annual cost ``C(t)`` for one adopter set.

    ``forecast`` is an optional ``(law, z_load, z_gen)`` triple; the group
    then plans on an aggregate forecast and settles on the truth.
    """
    gen, spec = inputs.group(adopters)
    n_hat = None
    if forecast is not None:
        law, z_load, z_gen = forecast
        mean_l = float(inputs.load_total.mean())
        mean_e = float(gen.mean())
        n_hat = forecast_net_load(
            inputs.load_total, gen,
            law(mean_l) * mean_l, law(mean_e) * mean_e if mean_e > 0 else 0.0,
            z_load, z_gen, spec.eta_inverter,
        )
    return run_year(inputs.load_total, gen, inputs.buy, inputs.sell, spec,
                    tie_break=tie_break, forecast_net_load=n_hat)


@dataclass
class CoordResult:
    pattern: str
    t: float
    n_adopters: int
    capacity_frac: float
    total_baseline: float
    total_no_coord: float
    total_coord: float
    vci: dict = field(default_factory=dict)  # cv -> (mean, stderr, n_seeds)
    total_no_coord_mean_price: float | None = None

    @property
    def vca(self) -> float:
        return self.total_no_coord - self.total_coord

    @property
    def vca_frac(self) -> float:
        return self.vca / self.total_baseline

    @property
    def vca_mean_price(self) -> float | None:
        if self.total_no_coord_mean_price is None:
            return None
        return self.total_no_coord_mean_price - self.total_coord


def capacity_fraction(adopters, sizes: dict) -> float:
    total = sum(sizes[i] for i in sorted(sizes))
    return float(sum(sizes[i] for i in sorted(adopters)) / total)


def vca_curve(inputs: GroupInputs, ordering: AdoptionOrdering, t_grid, with_tech: dict,
              baseline: dict, *, mean_price_bills: tuple | None = None,
              tie_break: float = TIE_BREAK) -> list[CoordResult]:
    """VCA over an adoption grid for one ordering.

    ``mean_price_bills`` optionally gives ``(with_tech, baseline)`` bills
    evaluated at the group-mean prices, reported alongside.
    """
    t_bl = float(sum(baseline[i] for i in sorted(baseline)))
    sizes = {i: s.z for i, s in inputs.specs.items()}
    out = []
    for t in t_grid:
        adopters = adopters_at(ordering, t)
        c = solve_group_year(inputs, adopters, tie_break=tie_break).bill
        res = CoordResult(
            ordering.pattern, float(t), len(adopters), capacity_fraction(adopters, sizes),
            t_bl, total_cost_no_coord(adopters, with_tech, baseline), c,
        )
        if mean_price_bills is not None:
            res.total_no_coord_mean_price = total_cost_no_coord(adopters, *mean_price_bills)
        out.append(res)
    return out


def vci_values(inputs: GroupInputs, ordering: AdoptionOrdering, t: float, cv_grid,
               forecast_bills: dict, baseline: dict, vca: float, law: ScalingLaw, seeds,
               *, tie_break: float = TIE_BREAK) -> dict:
    """Per-seed VCI at one adoption level for every CV level.

    ``forecast_bills[i]`` is household ``i``'s ``(n_seeds, n_cv)`` array of
    forecast-based bills on the same seeds. Returns ``cv -> array(n_seeds)``.
    """
    adopters = set(adopters_at(ordering, t))
    n_days = inputs.load_total.size // HOURS_PER_DAY
    non_adopter_total = sum(baseline[i] for i in sorted(baseline) if i not in adopters)
    individual = np.zeros((len(seeds), len(cv_grid)))
    for i in sorted(adopters):
        individual += forecast_bills[i]
    group = np.empty(len(seeds))
    for s, seed in enumerate(seeds):
        zl, zg = noise_draws(seed, "__group__", n_days)
        group[s] = solve_group_year(inputs, adopters, tie_break=tie_break, forecast=(law, zl, zg)).bill
    return {
        cv: individual[:, k] + non_adopter_total - group - vca
        for k, cv in enumerate(cv_grid)
    }
