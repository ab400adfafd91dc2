"""Per-household bundle: load, irradiance, sizing, and annual bills."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .devices import DeviceSpec, make_device, net_zero_size, pv_generation
from .dispatch import YearResult, baseline_bill, net_load, run_year
from .tariffs import Policy, PriceSchedule, RateLibrary, assemble_policy


@dataclass
class Household:
    household_id: str
    zip: str
    load: np.ndarray = field(repr=False)
    irradiance: np.ndarray = field(repr=False)
    spec: DeviceSpec
    generation: np.ndarray = field(repr=False)

    @property
    def z(self) -> float:
        return self.spec.z

    @property
    def net_load(self) -> np.ndarray:
        return net_load(self.load, self.generation, self.spec.eta_inverter)


def prepare_households(traces, irradiance_by_zip: dict) -> list[Household]:
    """Size each household's PV and storage; sorted by household id."""
    out = []
    for t in sorted(traces, key=lambda t: t.household_id):
        try:
            sun = np.asarray(irradiance_by_zip[t.zip], dtype=float)
        except KeyError:
            raise KeyError(f"no irradiance for zip {t.zip!r} ({t.household_id})") from None
        z = net_zero_size(t.kwh, sun)
        spec = make_device(z)
        out.append(Household(t.household_id, t.zip, t.kwh, sun, spec, pv_generation(z, sun)))
    return out


@dataclass
class Bill:
    household_id: str
    z: float
    baseline: float
    baseline_daily: np.ndarray = field(repr=False)
    result: YearResult = field(repr=False)

    @property
    def with_tech(self) -> float:
        return self.result.bill


def simulate_bills(households, schedules: dict) -> dict:
    """Baseline and with-technology bills keyed by household id.

    ``schedules`` maps household id to its :class:`PriceSchedule`.
    """
    bills = {}
    for h in households:
        sched = schedules[h.household_id]
        daily_bl = (h.load * sched.buy).reshape(-1, 24).sum(axis=1)
        res = run_year(h.load, h.generation, sched.buy, sched.sell, h.spec)
        bills[h.household_id] = Bill(h.household_id, h.z, baseline_bill(h.load, sched.buy), daily_bl, res)
    return bills


def policy_schedules(households, policy: Policy, lib: RateLibrary) -> dict[str, PriceSchedule]:
    cache = {}
    out = {}
    for h in households:
        if h.zip not in cache:
            cache[h.zip] = assemble_policy(policy, h.zip, lib)
        out[h.household_id] = cache[h.zip]
    return out
