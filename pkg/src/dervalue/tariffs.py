"""Retail, wholesale and dynamic rates, and the four pricing policies.

=========  ==================  ====================
Policy     Purchase            Sale
=========  ==================  ====================
P1         retail TOU          wholesale
P2         retail dynamic      discounted dynamic
P3         retail TOU          discounted TOU
P4         flipped TOU         nothing (price 0)
=========  ==================  ====================

Sale prices are always capped at the purchase price hour by hour. Fixed
charges are not modelled.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .calendar import HOURS_PER_DAY, Calendar


class Policy(str, enum.Enum):
    P1 = "P1"
    P2 = "P2"
    P3 = "P3"
    P4 = "P4"

    @property
    def uniform_prices(self) -> bool:
        """True when every household faces the same schedule."""
        return self in (Policy.P3, Policy.P4)


@dataclass(frozen=True)
class TouRates:
    """PG&E E-TOU option B energy charges, $/kWh.

    Peak is ``[peak_start, peak_end)`` on non-holiday weekdays only.
    """

    summer_peak: float = 0.35817
    summer_offpeak: float = 0.25511
    winter_peak: float = 0.22071
    winter_offpeak: float = 0.20191
    peak_start: int = 16
    peak_end: int = 21


@dataclass(frozen=True)
class FlippedRates:
    """Off-peak is ``[offpeak_start, offpeak_end)`` every day; all else peak."""

    summer_peak: float = 0.25
    summer_offpeak: float = 0.15
    winter_peak: float = 0.30
    winter_offpeak: float = 0.20
    offpeak_start: int = 9
    offpeak_end: int = 15


@dataclass(frozen=True)
class RateConfig:
    tou: TouRates = field(default_factory=TouRates)
    flipped: FlippedRates = field(default_factory=FlippedRates)
    sale_discount: float = 0.8

    @classmethod
    def from_dict(cls, d: dict | None) -> "RateConfig":
        d = dict(d or {})
        unknown = set(d) - {"tou", "flipped", "sale_discount"}
        if unknown:
            raise ValueError(f"unknown rate keys: {sorted(unknown)}")
        return cls(
            tou=TouRates(**d.get("tou", {})),
            flipped=FlippedRates(**d.get("flipped", {})),
            sale_discount=float(d.get("sale_discount", 0.8)),
        )


@dataclass(frozen=True)
class PriceSchedule:
    buy: np.ndarray
    sell: np.ndarray

    def __post_init__(self):
        buy = np.asarray(self.buy, dtype=float)
        sell = np.asarray(self.sell, dtype=float)
        if buy.shape != sell.shape:
            raise ValueError("buy and sell must have equal length")
        if np.any(buy < 0) or np.any(sell < 0) or np.any(sell > buy):
            raise ValueError("price schedule must satisfy 0 <= sell <= buy")
        object.__setattr__(self, "buy", buy)
        object.__setattr__(self, "sell", sell)


def _seasonal(calendar: Calendar, summer, winter):
    return np.where(calendar.hourly(calendar.is_summer), summer, winter)


def build_retail_tou(calendar: Calendar, rates: TouRates = TouRates()) -> np.ndarray:
    hour = calendar.hour_of_day
    peak = (
        (hour >= rates.peak_start)
        & (hour < rates.peak_end)
        & calendar.hourly(calendar.is_business_day)
    )
    return np.where(
        peak,
        _seasonal(calendar, rates.summer_peak, rates.winter_peak),
        _seasonal(calendar, rates.summer_offpeak, rates.winter_offpeak),
    )


def build_flipped_tou(calendar: Calendar, rates: FlippedRates = FlippedRates()) -> np.ndarray:
    hour = calendar.hour_of_day
    offpeak = (hour >= rates.offpeak_start) & (hour < rates.offpeak_end)
    return np.where(
        offpeak,
        _seasonal(calendar, rates.summer_offpeak, rates.winter_offpeak),
        _seasonal(calendar, rates.summer_peak, rates.winter_peak),
    )


def discount_schedule(prices, factor: float) -> np.ndarray:
    if not 0.0 <= factor <= 1.0:
        raise ValueError(f"discount factor must be in [0, 1], got {factor}")
    return factor * np.asarray(prices, dtype=float)


class DegenerateDayError(ValueError):
    pass


def daily_revenue(loads, prices_by_zip, zips) -> np.ndarray:
    """Per-day revenue ``sum_i sum_h L_i * price(zip_i)``.

    ``prices_by_zip`` may be a single array shared by every household.
    """
    total = None
    for load, z in zip(loads, zips):
        price = prices_by_zip if isinstance(prices_by_zip, np.ndarray) else prices_by_zip[z]
        day = (np.asarray(load) * price).reshape(-1, HOURS_PER_DAY).sum(axis=1)
        total = day if total is None else total + day
    return total


def build_dynamic(tou, wholesale_by_zip: dict, loads) -> tuple[dict, np.ndarray]:
    """Wholesale prices scaled day by day to collect the TOU revenue.

    ``loads`` is a sequence of :class:`~dervalue.calendar.LoadTrace`.
    Returns the per-zip dynamic rates and the per-day scale factors.
    """
    loads = list(loads)
    if not loads:
        raise ValueError("no loads supplied for dynamic-rate scaling")
    missing = sorted({t.zip for t in loads} - set(wholesale_by_zip))
    if missing:
        raise KeyError(f"no wholesale series for zip(s) {missing}")
    kwh = [t.kwh for t in loads]
    zips = [t.zip for t in loads]
    r_tou = daily_revenue(kwh, np.asarray(tou, dtype=float), zips)
    r_w = daily_revenue(kwh, wholesale_by_zip, zips)
    bad = np.flatnonzero(r_w <= 0)
    if bad.size:
        raise DegenerateDayError(f"wholesale revenue is zero on day {int(bad[0])}")
    scale = r_tou / r_w
    hourly_scale = np.repeat(scale, HOURS_PER_DAY)
    dynamic = {z: np.asarray(w, dtype=float) * hourly_scale for z, w in wholesale_by_zip.items()}
    return dynamic, scale


@dataclass
class RateLibrary:
    """Every rate a policy may draw on, built once per run."""

    tou: np.ndarray
    flipped: np.ndarray
    wholesale: dict = field(default_factory=dict)
    dynamic: dict = field(default_factory=dict)
    dynamic_scale: np.ndarray | None = None
    sale_discount: float = 0.8

    def zips(self):
        return sorted(self.wholesale)


def build_rate_library(
    calendar: Calendar,
    loads=None,
    wholesale_by_zip: dict | None = None,
    config: RateConfig = RateConfig(),
) -> RateLibrary:
    tou = build_retail_tou(calendar, config.tou)
    flipped = build_flipped_tou(calendar, config.flipped)
    lib = RateLibrary(tou=tou, flipped=flipped, sale_discount=config.sale_discount)
    if wholesale_by_zip:
        lib.wholesale = {z: np.asarray(v, dtype=float) for z, v in wholesale_by_zip.items()}
        if loads is not None:
            lib.dynamic, lib.dynamic_scale = build_dynamic(tou, lib.wholesale, loads)
    return lib


def assemble_policy(policy: Policy | str, zip_code: str, lib: RateLibrary) -> PriceSchedule:
    policy = Policy(policy)
    if policy is Policy.P1:
        buy = lib.tou
        sell = _wholesale_for(lib.wholesale, zip_code, "wholesale")
    elif policy is Policy.P2:
        buy = _wholesale_for(lib.dynamic, zip_code, "dynamic")
        sell = discount_schedule(buy, lib.sale_discount)
    elif policy is Policy.P3:
        buy = lib.tou
        sell = discount_schedule(buy, lib.sale_discount)
    else:
        buy = lib.flipped
        sell = np.zeros_like(buy)
    return PriceSchedule(buy.copy(), np.minimum(sell, buy))


def _wholesale_for(table, zip_code, what):
    try:
        return table[zip_code]
    except KeyError:
        raise KeyError(f"no {what} prices for zip {zip_code!r}") from None


def revenue_ratio(loads, numerator, denominator) -> float:
    """Total revenue of one uniform rate relative to another over ``loads``."""
    num = sum(float(np.dot(t.kwh, numerator)) for t in loads)
    den = sum(float(np.dot(t.kwh, denominator)) for t in loads)
    return num / den
