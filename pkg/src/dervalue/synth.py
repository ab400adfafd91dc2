"""Synthetic households, irradiance and wholesale prices.

Every random stream is keyed by (seed, entity id), so a household's trace
does not depend on how many other households are generated or in which
order they are processed.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field

import numpy as np

from .calendar import HOURS_PER_DAY, Calendar, HourlySeries, LoadTrace
from .ingest import ZipGeo

ARCHETYPES = ("daytime", "evening", "flat", "dual")

# Hourly shapes before normalization; index is hour of day.
_SHAPES = {
    "daytime": [0.5, 0.45, 0.42, 0.42, 0.45, 0.55, 0.75, 0.95, 1.15, 1.35, 1.5, 1.6,
                1.65, 1.65, 1.6, 1.5, 1.4, 1.3, 1.2, 1.05, 0.9, 0.8, 0.7, 0.6],
    "evening": [0.55, 0.45, 0.4, 0.38, 0.4, 0.5, 0.8, 1.0, 0.85, 0.6, 0.5, 0.48,
                0.48, 0.5, 0.55, 0.7, 1.1, 1.7, 2.2, 2.4, 2.2, 1.8, 1.2, 0.8],
    "flat": [0.85, 0.82, 0.8, 0.8, 0.82, 0.88, 0.95, 1.0, 1.0, 0.98, 0.98, 1.0,
             1.0, 1.0, 1.0, 1.02, 1.08, 1.15, 1.2, 1.2, 1.15, 1.05, 0.95, 0.9],
    "dual": [0.5, 0.42, 0.4, 0.4, 0.45, 0.7, 1.3, 1.8, 1.6, 1.0, 0.7, 0.65,
             0.65, 0.65, 0.7, 0.8, 1.1, 1.5, 1.8, 1.9, 1.7, 1.4, 1.0, 0.7],
}


def stable_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def _rng(seed: int, *keys) -> np.random.Generator:
    words = [int(seed)] + [stable_key(k) if isinstance(k, str) else int(k) for k in keys]
    return np.random.default_rng(np.random.SeedSequence(words))


def derive_seed(seed: int, *keys) -> int:
    """A 32-bit child seed for (seed, keys), independent of call order."""
    words = [int(seed)] + [stable_key(k) if isinstance(k, str) else int(k) for k in keys]
    return int(np.random.SeedSequence(words).generate_state(1)[0])


@dataclass(frozen=True)
class SynthConfig:
    n_households: int = 200
    archetype_weights: dict = field(
        default_factory=lambda: {"daytime": 0.25, "evening": 0.4, "flat": 0.2, "dual": 0.15}
    )
    mean_load_median_kw: float = 0.8
    mean_load_sigma: float = 0.6
    mean_load_bounds: tuple = (0.12, 20.0)
    noise_cv: float = 0.25
    n_zips: int = 8
    n_nodes: int = 4
    seed: int = 0

    def validate(self) -> list[str]:
        errs = []
        if self.n_households < 1:
            errs.append("n_households must be >= 1")
        if self.n_zips < 1:
            errs.append("n_zips must be >= 1")
        if self.n_nodes < 1:
            errs.append("n_nodes must be >= 1")
        unknown = set(self.archetype_weights) - set(ARCHETYPES)
        if unknown:
            errs.append(f"unknown archetypes {sorted(unknown)}")
        w = list(self.archetype_weights.values())
        if any(x < 0 for x in w) or abs(sum(w) - 1.0) > 1e-9:
            errs.append("archetype_weights must be nonnegative and sum to 1")
        if self.noise_cv < 0 or self.mean_load_sigma < 0:
            errs.append("noise_cv and mean_load_sigma must be nonnegative")
        lo, hi = self.mean_load_bounds
        if not 0.1 <= lo < hi:
            errs.append("mean_load_bounds must satisfy 0.1 <= low < high")
        return errs


@dataclass
class Population:
    traces: list
    irradiance: dict
    zips: dict
    archetype: dict = field(default_factory=dict)


def household_ids(n: int) -> list[str]:
    width = max(5, len(str(n - 1)))
    return [f"h{i:0{width}d}" for i in range(n)]


def zip_codes(n: int) -> list[str]:
    return [f"{94000 + 7 * k:05d}" for k in range(n)]


def synth_zips(cfg: SynthConfig) -> dict:
    out = {}
    for z in zip_codes(cfg.n_zips):
        rng = _rng(cfg.seed, "zip", z)
        out[z] = ZipGeo(z, round(float(rng.uniform(36.8, 38.9)), 4), round(float(rng.uniform(-122.6, -120.6)), 4))
    return out


def clear_sky_ghi(calendar: Calendar, lat: float) -> np.ndarray:
    """Hourly clear-sky GHI (kWh/m2) from the Haurwitz model.

    Each hour is averaged over four sub-samples; local clock time is taken
    as solar time.
    """
    doy = np.repeat(calendar.day_of_year, HOURS_PER_DAY).astype(float)
    hour = calendar.hour_of_day.astype(float)
    phi = math.radians(lat)
    decl = np.radians(23.45) * np.sin(2 * np.pi * (284 + doy) / 365.0)
    total = np.zeros_like(hour)
    for frac in (0.125, 0.375, 0.625, 0.875):
        omega = np.radians(15.0 * (hour + frac - 12.0))
        cosz = np.sin(phi) * np.sin(decl) + np.cos(phi) * np.cos(decl) * np.cos(omega)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(cosz > 0, 1.098 * cosz * np.exp(-0.057 / np.where(cosz > 0, cosz, 1.0)), 0.0)
        total += w
    return total / 4.0


def synth_irradiance(cfg: SynthConfig, calendar: Calendar, zips: dict) -> dict:
    region = _rng(cfg.seed, "weather")
    summer = calendar.is_summer
    # regional daily clearness, clearer in summer
    base = np.where(summer, region.beta(9.0, 1.2, calendar.n_days), region.beta(2.6, 1.6, calendar.n_days))
    out = {}
    for z, geo in sorted(zips.items()):
        rng = _rng(cfg.seed, "irradiance", z)
        local = np.clip(base + rng.normal(0.0, 0.06, calendar.n_days), 0.05, 1.0)
        hourly = rng.lognormal(0.0, 0.08, calendar.n_hours)
        ghi = clear_sky_ghi(calendar, geo.lat) * np.repeat(local, HOURS_PER_DAY) * hourly
        out[z] = np.round(ghi, 6)
    return out


def _load_trace(cfg: SynthConfig, calendar: Calendar, hid: str, zips: list) -> tuple:
    rng = _rng(cfg.seed, "household", hid)
    names = sorted(cfg.archetype_weights)
    weights = np.array([cfg.archetype_weights[k] for k in names], dtype=float)
    archetype = names[int(rng.choice(len(names), p=weights / weights.sum()))]
    zip_code = zips[int(rng.integers(len(zips)))]
    lo, hi = cfg.mean_load_bounds
    mean_kw = float(np.clip(rng.lognormal(math.log(cfg.mean_load_median_kw), cfg.mean_load_sigma), lo, hi))

    shape = np.array(_SHAPES[archetype])
    shape = shape / shape.mean()
    # household-specific jitter of the daily shape
    shape = shape * rng.lognormal(0.0, 0.1, HOURS_PER_DAY)
    days = np.tile(shape, (calendar.n_days, 1))

    hour = np.arange(HOURS_PER_DAY)
    cooling = rng.uniform(0.0, 0.9)
    ac = np.where((hour >= 13) & (hour <= 21), 1.0, 0.15)
    days += np.outer(calendar.is_summer.astype(float) * cooling, ac)
    heating = rng.uniform(0.0, 0.4)
    eve = np.where((hour >= 17) | (hour <= 7), 1.0, 0.3)
    days += np.outer((~calendar.is_summer).astype(float) * heating, eve)

    weekend = (calendar.weekday >= 5) | calendar.is_holiday
    if archetype in ("evening", "dual"):
        midday = np.where((hour >= 9) & (hour <= 16), 0.5, 0.0)
        days += np.outer(weekend.astype(float), midday)

    # one or two low-occupancy stretches
    for _ in range(int(rng.integers(0, 3))):
        start = int(rng.integers(0, calendar.n_days - 10))
        length = int(rng.integers(4, 11))
        days[start : start + length] *= 0.3

    days *= rng.lognormal(0.0, 0.15, (calendar.n_days, 1))
    if cfg.noise_cv > 0:
        s = math.sqrt(math.log(1.0 + cfg.noise_cv**2))
        days *= rng.lognormal(-0.5 * s * s, s, days.shape)
    kwh = days.ravel()
    kwh = np.round(kwh * (mean_kw / kwh.mean()), 6)
    return LoadTrace(hid, zip_code, HourlySeries(kwh, "kWh")), archetype


def synth_population(cfg: SynthConfig, calendar: Calendar) -> Population:
    errs = cfg.validate()
    if errs:
        raise ValueError("; ".join(errs))
    zips = synth_zips(cfg)
    zip_list = sorted(zips)
    traces, kinds = [], {}
    for hid in household_ids(cfg.n_households):
        trace, kind = _load_trace(cfg, calendar, hid, zip_list)
        traces.append(trace)
        kinds[hid] = kind
    return Population(traces, synth_irradiance(cfg, calendar, zips), zips, kinds)


def synth_nodes(cfg: SynthConfig) -> dict:
    out = {}
    for k in range(cfg.n_nodes):
        node = f"NODE_{k:03d}"
        rng = _rng(cfg.seed, "node", node)
        out[node] = ZipGeo(node, round(float(rng.uniform(36.8, 38.9)), 4), round(float(rng.uniform(-122.6, -120.6)), 4))
    return out


def synth_lmp(cfg: SynthConfig, calendar: Calendar, nodes: dict) -> dict:
    """Day-ahead style nodal prices in $/MWh; may contain negatives."""
    region = _rng(cfg.seed, "lmp")
    hour = np.arange(HOURS_PER_DAY)
    evening = np.exp(-0.5 * ((hour - 19.0) / 2.2) ** 2)
    morning = np.exp(-0.5 * ((hour - 7.5) / 1.5) ** 2)
    solar_dip = np.exp(-0.5 * ((hour - 12.5) / 2.5) ** 2)
    level = np.exp(np.cumsum(region.normal(0.0, 0.04, calendar.n_days)))
    level = 34.0 * level / level.mean()
    summer = calendar.is_summer.astype(float)
    month = np.array([calendar.date_of(j).month for j in range(calendar.n_days)])
    spring = np.isin(month, (3, 4, 5)).astype(float)
    days = (
        level[:, None]
        + np.outer(18.0 + 30.0 * summer, evening)
        + np.outer(np.full(calendar.n_days, 8.0), morning)
        - np.outer(6.0 + 22.0 * spring, solar_dip)
    )
    out = {}
    for node in sorted(nodes):
        rng = _rng(cfg.seed, "lmp", node)
        congestion = rng.uniform(0.9, 1.12)
        noise = rng.normal(0.0, 3.0, days.shape)
        out[node] = np.round((days * congestion + noise).ravel(), 4)
    return out
