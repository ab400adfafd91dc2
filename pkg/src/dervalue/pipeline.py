"""End-to-end runs: inputs, rates, savings, VOI, coordination, analytic curves.

Every table is written with a header row and a sidecar ``.manifest.json``.
Rows are emitted in a canonical order (household id, policy, pattern, grid
value) so worker count never changes the output bytes.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import logging
import os
import platform
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import ToyParams, vca_table
from .calendar import Calendar, CalendarError, build_calendar, default_holidays, read_holidays
from .config import config_hash, recorded
from .coordination import (
    GroupInputs, ScalingLaw, rank_households, vca_curve, vci_values,
)
from .dispatch import SolverError
from .forecast import InfeasibleSchedule, fit_line, forecast_costs, seed_list
from .household import prepare_households, policy_schedules, simulate_bills
from .ingest import (
    DataError, load_irradiance_csv, load_lmp_csv, load_nodes_csv, load_traces_csv,
    load_zips_csv, map_zip_to_node, wholesale_by_zip, write_geo_csv, write_irradiance_csv,
    write_loads_csv, write_lmp_csv,
)
from .metrics import correlation_matrix, savings_quantiles, savings_table
from .synth import SynthConfig, derive_seed, synth_lmp, synth_nodes, synth_population
from .tariffs import (
    DegenerateDayError, Policy, PriceSchedule, RateConfig, assemble_policy, build_rate_library,
    revenue_ratio,
)

log = logging.getLogger("dervalue")

COMMANDS = ("synth", "prices", "savings", "voi", "coord", "analytic", "all")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _versions() -> dict:
    import numba
    import scipy

    return {
        "dervalue": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
        "python": platform.python_version(),
    }


@dataclass
class Inputs:
    calendar: Calendar
    traces: list
    irradiance: dict
    zips: dict
    nodes: dict = field(default_factory=dict)
    lmp_mwh: dict = field(default_factory=dict)    # node -> $/MWh as read or generated
    wholesale: dict = field(default_factory=dict)  # zip -> $/kWh, clamped at zero
    excluded: dict = field(default_factory=dict)


def make_calendar(cfg: dict) -> Calendar:
    c = cfg["calendar"]
    start = dt.date.fromisoformat(str(c["start_date"]))
    holidays = read_holidays(c["holidays"]) if c.get("holidays") else default_holidays(start, c["n_days"])
    return build_calendar(start, c["n_days"], holidays)


def synth_config(cfg: dict) -> SynthConfig:
    d = dict(cfg.get("synth") or {})
    if "mean_load_bounds" in d:
        d["mean_load_bounds"] = tuple(d["mean_load_bounds"])
    return SynthConfig(**d, seed=cfg["seed"])


def load_inputs(cfg: dict) -> Inputs:
    cal = make_calendar(cfg)
    data = cfg.get("data")
    if data:
        ingest = load_traces_csv(data["loads"], cal)
        if not ingest.traces:
            raise DataError(f"{data['loads']}: every meter was filtered out")
        irr = load_irradiance_csv(data["irradiance"], cal)
        zips = load_zips_csv(data["zips"])
        inp = Inputs(cal, ingest.traces, irr, zips, excluded=ingest.excluded)
        if data.get("lmp") or data.get("nodes"):
            if not (data.get("lmp") and data.get("nodes")):
                raise DataError("data.lmp and data.nodes must be given together")
            inp.nodes = load_nodes_csv(data["nodes"])
            inp.lmp_mwh = {}
            lmp = load_lmp_csv(data["lmp"], cal)
            used = {t.zip for t in ingest.traces}
            inp.wholesale = wholesale_by_zip(lmp, map_zip_to_node({z: zips[z] for z in sorted(used & set(zips))}, inp.nodes))
        missing = sorted({t.zip for t in ingest.traces} - set(zips))
        if missing:
            raise DataError(f"zip(s) {missing} missing from {data['zips']}")
        if ingest.excluded:
            log.info("excluded %d meters by the consumption filters", len(ingest.excluded))
        return inp
    scfg = synth_config(cfg)
    errs = scfg.validate()
    if errs:
        raise DataError("synth: " + "; ".join(errs))
    pop = synth_population(scfg, cal)
    nodes = synth_nodes(scfg)
    lmp_mwh = synth_lmp(scfg, cal, nodes)
    lmp = {n: np.maximum(v, 0.0) / 1000.0 for n, v in lmp_mwh.items()}
    zip_to_node = map_zip_to_node(pop.zips, nodes)
    return Inputs(cal, pop.traces, pop.irradiance, pop.zips, nodes, lmp_mwh,
                  wholesale_by_zip(lmp, zip_to_node))


class Run:
    """One CLI invocation: resolved config, cached intermediate results, writers."""

    def __init__(self, cfg: dict, out_dir, command: str = "all"):
        self.cfg = cfg
        self.out = Path(out_dir)
        self.command = command
        self.seed = cfg["seed"]
        self.n_jobs = cfg.get("n_jobs") or os.cpu_count() or 1
        self.tie_break = cfg["solver"]["tie_break"]
        self.failures = []
        self._inputs = None
        self._households = None
        self._lib = None
        self._bills = {}
        self._forecast = {}
        self._manifest_base = {
            "command": command,
            "config_hash": config_hash(cfg),
            "seed": self.seed,
            "versions": _versions(),
            "config": recorded(cfg),
        }

    # -- output -------------------------------------------------------
    def write_table(self, name: str, header, rows) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / name
        n = 0
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
                n += 1
        self._write_manifest(path, n)
        return path

    def _write_manifest(self, path: Path, n_rows: int):
        man = dict(self._manifest_base, file=path.name, n_rows=n_rows)
        with open(path.with_name(path.name + ".manifest.json"), "w", encoding="utf-8") as fh:
            json.dump(man, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")

    def _write_raw(self, name: str, writer, *args):
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / name
        writer(path, *args)
        with open(path, encoding="utf-8") as fh:
            n = sum(1 for _ in fh) - 1
        self._write_manifest(path, n)

    # -- parallel map with a failure ledger -----------------------------
    def pmap(self, stage: str, fn, items):
        def guarded(item):
            try:
                return fn(item)
            except (SolverError, InfeasibleSchedule) as exc:
                key = getattr(item, "household_id", str(item))
                return _Failure(stage, key, str(exc))

        if self.n_jobs > 1 and len(items) > 1:
            with ThreadPoolExecutor(self.n_jobs) as pool:
                results = list(pool.map(guarded, items))
        else:
            results = [guarded(it) for it in items]
        out = []
        for it, res in zip(items, results):
            if isinstance(res, _Failure):
                log.error("%s failed for %s: %s", res.stage, res.key, res.message)
                self.failures.append(res)
            else:
                out.append((it, res))
        return out

    def write_failures(self):
        if self.failures:
            self.write_table(
                "failures.csv", ["stage", "key", "message"],
                sorted((f.stage, f.key, f.message) for f in self.failures),
            )

    # -- cached stages ------------------------------------------------
    @property
    def inputs(self) -> Inputs:
        if self._inputs is None:
            self._inputs = load_inputs(self.cfg)
            log.info("loaded %d households over %d days", len(self._inputs.traces), self._inputs.calendar.n_days)
        return self._inputs

    @property
    def households(self):
        if self._households is None:
            inp = self.inputs
            try:
                self._households = prepare_households(inp.traces, inp.irradiance)
            except (KeyError, ValueError) as exc:
                raise DataError(str(exc)) from None
        return self._households

    @property
    def lib(self):
        if self._lib is None:
            inp = self.inputs
            try:
                self._lib = build_rate_library(
                    inp.calendar, inp.traces, inp.wholesale, RateConfig.from_dict(self.cfg["rates"]),
                )
            except (DegenerateDayError, KeyError) as exc:
                raise DataError(str(exc)) from None
        return self._lib

    def schedules(self, policy: str) -> dict:
        policy = Policy(policy)
        if policy in (Policy.P1, Policy.P2) and not self.lib.wholesale:
            raise DataError(f"policy {policy.value} needs wholesale prices (data.lmp and data.nodes)")
        return policy_schedules(self.households, policy, self.lib)

    def bills(self, policy: str) -> dict:
        if policy not in self._bills:
            sched = self.schedules(policy)
            done = self.pmap(
                f"bills:{policy}",
                lambda h: simulate_bills([h], sched)[h.household_id],
                self.households,
            )
            self._bills[policy] = {h.household_id: b for h, b in done}
            log.info("policy %s: %d bills", policy, len(done))
        return self._bills[policy]

    def forecast_table(self, policy: str, cv_grid, n_seeds: int) -> dict:
        """``household_id -> (n_seeds, n_cv)`` forecast bills, cached per column."""
        seeds = seed_list(self.seed, n_seeds)
        cache = self._forecast.setdefault((policy, tuple(seeds)), {})
        todo = [float(cv) for cv in cv_grid if float(cv) not in cache]
        if todo:
            sched = self.schedules(policy)
            done = self.pmap(
                f"forecast:{policy}",
                lambda h: forecast_costs(h, sched[h.household_id], todo, seeds),
                self.households,
            )
            for k, cv in enumerate(todo):
                cache[cv] = {h.household_id: costs[:, k] for h, costs in done}
        cols = [cache[float(cv)] for cv in cv_grid]
        ids = sorted(set.intersection(*(set(c) for c in cols))) if cols else []
        return {i: np.column_stack([c[i] for c in cols]) for i in ids}

    # -- commands -----------------------------------------------------
    def cmd_synth(self):
        inp = self.inputs
        self._write_raw("loads.csv", write_loads_csv, inp.traces)
        self._write_raw("irradiance.csv", write_irradiance_csv, inp.irradiance)
        self._write_raw("zips.csv", write_geo_csv, inp.zips, "zip")
        if inp.nodes:
            self._write_raw("nodes.csv", write_geo_csv, inp.nodes, "node_id")
        if inp.lmp_mwh:
            self._write_raw("lmp.csv", write_lmp_csv, inp.lmp_mwh)

    def cmd_prices(self):
        lib = self.lib
        zips = sorted({t.zip for t in self.inputs.traces})
        policies = [p for p in self.cfg["policies"]]
        scheds = {}
        for p in policies:
            scheds[p] = {z: self._zip_schedule(p, z) for z in zips}

        def rows():
            for p in policies:
                for z in zips:
                    s = scheds[p][z]
                    for h in range(s.buy.size):
                        yield z, h, s.buy[h], s.sell[h], p

        self.write_table("rates_audit.csv", ["zip", "hour_index", "buy", "sell", "policy"], rows())
        report = [("flipped_to_tou_revenue_ratio", revenue_ratio(self.inputs.traces, lib.flipped, lib.tou))]
        if lib.dynamic_scale is not None:
            self.write_table("dynamic_scale.csv", ["day", "scale"], enumerate(lib.dynamic_scale))
            report += [
                ("dynamic_scale_min", float(lib.dynamic_scale.min())),
                ("dynamic_scale_mean", float(lib.dynamic_scale.mean())),
                ("dynamic_scale_max", float(lib.dynamic_scale.max())),
            ]
        self.write_table("prices_report.csv", ["metric", "value"], report)

    def _zip_schedule(self, policy, zip_code) -> PriceSchedule:
        if Policy(policy) in (Policy.P1, Policy.P2) and not self.lib.wholesale:
            raise DataError(f"policy {policy} needs wholesale prices (data.lmp and data.nodes)")
        return assemble_policy(policy, zip_code, self.lib)

    def cmd_savings(self):
        sv = self.cfg["savings"]
        self.write_table(
            "sizing.csv", ["household_id", "z_kw", "capacity_kwh", "rate_kw"],
            ((h.household_id, h.z, h.spec.capacity, h.spec.charge_rate) for h in self.households),
        )
        by_policy = {}
        for p in self.cfg["policies"]:
            bills = self.bills(p)
            recs = []
            for hid in sorted(bills):
                seed = derive_seed(self.seed, "bootstrap", p, hid)
                recs += savings_table({hid: bills[hid]}, p, n_boot=sv["n_boot"], alpha=sv["alpha"], seed=seed)
            by_policy[p] = recs
            if sv.get("dispatch_dump"):
                self._dump_dispatch(p, bills)
        self.write_table(
            "savings.csv",
            ["household_id", "policy", "z", "b_bl", "b_n", "s_a", "s_n", "s_a_lo", "s_a_hi", "s_n_lo", "s_n_hi"],
            sorted(
                ((r.household_id, r.policy, r.z, r.b_bl, r.b_n, r.s_a, r.s_n, r.s_a_lo, r.s_a_hi, r.s_n_lo, r.s_n_hi)
                 for recs in by_policy.values() for r in recs),
                key=lambda row: (row[0], row[1]),
            ),
        )
        self.write_table(
            "savings_quantiles.csv", ["policy", "metric", "quantile", "value"],
            ((p, m, q, v) for p in sorted(by_policy) for m in ("s_a", "s_n")
             for q, v in savings_quantiles(by_policy[p], m)),
        )
        if all(len(r) >= 2 for r in by_policy.values()):
            self.write_table("correlations.csv", ["policy_x", "policy_y", "metric", "spearman"],
                             correlation_matrix(by_policy))
        return by_policy

    def _dump_dispatch(self, policy, bills):
        sched = self.schedules(policy)

        def rows():
            for hid in sorted(bills):
                res = bills[hid].result
                s = sched[hid]
                contrib = np.where(res.g >= 0, s.buy * res.g, s.sell * res.g)
                for k in range(res.u.size):
                    yield hid, k // 24, k % 24, res.u[k], res.x[k], res.g[k], contrib[k]

        self.write_table(f"dispatch_{policy}.csv",
                         ["household_id", "day", "hour", "u", "x", "g", "cost_contrib"], rows())

    def cmd_voi(self):
        vc = self.cfg["voi"]
        cv_grid = [float(c) for c in vc["cv_grid"]]
        table = self.forecast_table(vc["policy"], cv_grid, vc["n_seeds"])
        ids = sorted(table)
        if vc.get("max_households"):
            ids = ids[: vc["max_households"]]
        z = {h.household_id: h.z for h in self.households}
        rows = []
        for hid in ids:
            mean = table[hid].mean(axis=0)
            slope, _, r2 = fit_line(cv_grid, mean)
            for cv, c in zip(cv_grid, mean):
                rows.append((hid, z[hid], cv, c, slope, slope / z[hid], r2))
        self.write_table("voi.csv", ["household_id", "z", "cv", "annual_cost", "slope", "norm_slope", "r2"], rows)
        return rows

    def cmd_coord(self):
        co = self.cfg["coord"]
        policy = co["policy"]
        sched = self.schedules(policy)
        bills = self.bills(policy)
        hh = [h for h in self.households if h.household_id in bills]
        if len(hh) < len(self.households):
            raise SolverError("coordination needs every household's bill")
        inputs = GroupInputs.build(hh, sched, self_discharge=co["group_self_discharge"])
        with_tech = {i: b.with_tech for i, b in bills.items()}
        baseline = {i: b.baseline for i, b in bills.items()}
        s_n = {i: (b.baseline - b.with_tech) / b.z for i, b in bills.items()}

        mean_price = None
        if not Policy(policy).uniform_prices:
            flat = PriceSchedule(inputs.buy, inputs.sell)
            mp = self.pmap("bills:mean_price", lambda h: simulate_bills([h], {h.household_id: flat})[h.household_id], hh)
            mp = {h.household_id: b for h, b in mp}
            mean_price = ({i: b.with_tech for i, b in mp.items()}, {i: b.baseline for i, b in mp.items()})

        cv_grid = [float(c) for c in co["cv_grid"]]
        seeds = seed_list(self.seed, co["n_seeds"]) if cv_grid and co["n_seeds"] else []
        fc = self.forecast_table(policy, cv_grid, co["n_seeds"]) if seeds else {}
        law = ScalingLaw(**co["scaling_law"])

        rows, mp_rows = [], []
        for pattern in co["patterns"]:
            order_seed = derive_seed(self.seed, "adoption", pattern) if pattern == "random" else None
            ordering = rank_households(s_n, pattern, order_seed)
            curve = vca_curve(inputs, ordering, co["t_grid"], with_tech, baseline,
                              mean_price_bills=mean_price, tie_break=self.tie_break)
            for res in curve:
                base = (pattern, res.t, res.capacity_frac, res.total_no_coord, res.total_coord,
                        res.vca, res.vca_frac)
                if seeds:
                    vci = vci_values(inputs, ordering, res.t, cv_grid, fc, baseline, res.vca, law,
                                     seeds, tie_break=self.tie_break)
                    for cv in cv_grid:
                        v = vci[cv]
                        se = float(v.std(ddof=1) / np.sqrt(v.size)) if v.size > 1 else None
                        m = float(v.mean())
                        rows.append(base + (cv, m, m / res.total_baseline, v.size, se))
                else:
                    rows.append(base + (None, None, None, 0, None))
                if mean_price is not None:
                    mp_rows.append((pattern, res.t, res.total_no_coord_mean_price, res.total_coord,
                                    res.vca_mean_price, res.vca_mean_price / res.total_baseline))
        self.write_table(
            "coord.csv",
            ["pattern", "t_pct", "capacity_frac", "T_total", "C_total", "vca", "vca_frac_of_tbl",
             "cv", "vci", "vci_frac_of_tbl", "n_seeds", "stderr"],
            rows,
        )
        if mp_rows:
            self.write_table(
                "coord_mean_price.csv",
                ["pattern", "t_pct", "T_total_mean_price", "C_total", "vca", "vca_frac_of_tbl"],
                mp_rows,
            )
        return rows

    def cmd_analytic(self):
        a = self.cfg["analytic"]
        base = ToyParams(a["e"], a["p_a"], a["q"], a["r"], a["n"])
        rows = vca_table(base, a["steps"])
        self.write_table("analytic.csv", ["f", "vca", "vca_frac", "regime"], rows)
        return rows

    def run(self, command: str):
        steps = {
            "synth": ("synth",),
            "prices": ("prices",),
            "savings": ("savings",),
            "voi": ("voi",),
            "coord": ("coord",),
            "analytic": ("analytic",),
            "all": ("synth", "prices", "savings", "voi", "coord", "analytic"),
        }[command]
        for step in steps:
            log.info("running %s", step)
            getattr(self, f"cmd_{step}")()
        self.write_failures()
        return not self.failures


@dataclass(frozen=True)
class _Failure:
    stage: str
    key: str
    message: str


__all__ = ["COMMANDS", "Inputs", "Run", "load_inputs", "make_calendar", "CalendarError"]
