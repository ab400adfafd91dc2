"""CSV ingestion for loads, irradiance, wholesale prices and geography.

Hourly files are in long format, one row per (entity, hour_index). Values
are written with ``repr`` so a read/write round trip is lossless.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .calendar import Calendar, HourlySeries, LoadTrace

MIN_MEAN_KW = 0.1
MAX_ZERO_FRACTION = 0.5
EARTH_RADIUS_KM = 6371.0088


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class ZipGeo:
    zip: str
    lat: float
    lon: float

    def __post_init__(self):
        if not -90 <= self.lat <= 90 or not -180 <= self.lon <= 180:
            raise ValueError(f"{self.zip}: coordinates out of range ({self.lat}, {self.lon})")


@dataclass
class LoadIngest:
    traces: list
    excluded: dict = field(default_factory=dict)

    @property
    def n_excluded(self) -> int:
        return len(self.excluded)


def _rows(path, header):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if [c.strip() for c in first] != header:
            raise DataError(f"{path}: line 1: expected header {','.join(header)}")
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: line {reader.line_num}: expected {len(header)} fields")
            yield reader.line_num, [c.strip() for c in row]


def _read_long(path, header, n_hours, *, allow_negative=False):
    """Collect ``key -> (extra, hourly array)`` from a long-format file."""
    data = {}
    extra = {}
    seen = {}
    n_keys = len(header) - 2
    for lineno, row in _rows(path, header):
        key = row[0]
        try:
            hour = int(row[n_keys])
            value = float(row[n_keys + 1])
        except ValueError:
            raise DataError(f"{path}: line {lineno}: malformed number") from None
        if not 0 <= hour < n_hours:
            raise DataError(f"{path}: line {lineno}: hour_index {hour} outside [0, {n_hours})")
        if not math.isfinite(value) or (value < 0 and not allow_negative):
            raise DataError(f"{path}: line {lineno}: invalid value {row[n_keys + 1]!r}")
        if key not in data:
            data[key] = np.full(n_hours, np.nan)
            seen[key] = np.zeros(n_hours, dtype=bool)
            extra[key] = row[1:n_keys]
        elif row[1:n_keys] != extra[key]:
            raise DataError(f"{path}: line {lineno}: inconsistent attributes for {key!r}")
        if seen[key][hour]:
            raise DataError(f"{path}: line {lineno}: duplicate hour {hour} for {key!r}")
        seen[key][hour] = True
        data[key][hour] = value
    for key, mask in seen.items():
        if not mask.all():
            raise DataError(
                f"{path}: {key!r} has {int(mask.sum())} hourly rows, expected {n_hours}"
            )
    return {k: (extra[k], data[k]) for k in data}


def load_traces_csv(path: str | Path, calendar: Calendar) -> LoadIngest:
    """Read ``household_id,zip,hour_index,kwh`` and apply the meter filters.

    Meters with an annual mean under 0.1 kW or more than half zero readings
    are dropped; the reason is kept in ``excluded``.
    """
    raw = _read_long(path, ["household_id", "zip", "hour_index", "kwh"], calendar.n_hours)
    traces, excluded = [], {}
    for hid in sorted(raw):
        (zip_code,), kwh = raw[hid]
        if kwh.mean() < MIN_MEAN_KW:
            excluded[hid] = "low_mean"
            continue
        if np.mean(kwh == 0.0) > MAX_ZERO_FRACTION:
            excluded[hid] = "zero_readings"
            continue
        traces.append(LoadTrace(hid, zip_code, HourlySeries(kwh, "kWh")))
    return LoadIngest(traces, excluded)


def load_irradiance_csv(path, calendar: Calendar) -> dict:
    raw = _read_long(path, ["zip", "hour_index", "ghi_kwh_m2"], calendar.n_hours)
    return {z: v for z, (_, v) in sorted(raw.items())}


def load_lmp_csv(path, calendar: Calendar) -> dict:
    """Nodal prices in $/kWh; negative $/MWh prices are set to zero."""
    raw = _read_long(
        path, ["node_id", "hour_index", "usd_per_mwh"], calendar.n_hours, allow_negative=True
    )
    return {node: np.maximum(v, 0.0) / 1000.0 for node, (_, v) in sorted(raw.items())}


def _load_geo(path, key):
    out = {}
    for lineno, (name, lat, lon) in _rows(path, [key, "lat", "lon"]):
        try:
            out[name] = ZipGeo(name, float(lat), float(lon))
        except ValueError as exc:
            raise DataError(f"{path}: line {lineno}: {exc}") from None
    if not out:
        raise DataError(f"{path}: no rows")
    return out


def load_zips_csv(path) -> dict:
    return _load_geo(path, "zip")


def load_nodes_csv(path) -> dict:
    return _load_geo(path, "node_id")


def haversine_km(lat1, lon1, lat2, lon2) -> float:
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    h = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def map_zip_to_node(zips: dict, nodes: dict) -> dict:
    """Nearest node (great-circle) for every zip; ties go to the smallest id."""
    if not nodes:
        raise DataError("node set is empty")
    if not zips:
        raise DataError("zip set is empty")
    out = {}
    for z, geo in sorted(zips.items()):
        best, best_d = None, math.inf
        for node_id in sorted(nodes):
            n = nodes[node_id]
            d = haversine_km(geo.lat, geo.lon, n.lat, n.lon)
            if d < best_d:
                best, best_d = node_id, d
        out[z] = best
    return out


def wholesale_by_zip(lmp_by_node: dict, zip_to_node: dict) -> dict:
    missing = sorted({n for n in zip_to_node.values()} - set(lmp_by_node))
    if missing:
        raise DataError(f"no LMP series for node(s) {missing}")
    return {z: lmp_by_node[n] for z, n in sorted(zip_to_node.items())}


def _write_long(path, header, items):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for keys, values in items:
            for h, v in enumerate(values):
                w.writerow([*keys, h, repr(float(v))])


def write_loads_csv(path, traces) -> None:
    _write_long(
        path,
        ["household_id", "zip", "hour_index", "kwh"],
        (((t.household_id, t.zip), t.kwh) for t in sorted(traces, key=lambda t: t.household_id)),
    )


def write_irradiance_csv(path, irradiance: dict) -> None:
    _write_long(path, ["zip", "hour_index", "ghi_kwh_m2"], (((z,), v) for z, v in sorted(irradiance.items())))


def write_lmp_csv(path, lmp_usd_per_mwh: dict) -> None:
    _write_long(path, ["node_id", "hour_index", "usd_per_mwh"], (((n,), v) for n, v in sorted(lmp_usd_per_mwh.items())))


def write_geo_csv(path, geo: dict, key: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([key, "lat", "lon"])
        for name, g in sorted(geo.items()):
            w.writerow([name, repr(g.lat), repr(g.lon)])
