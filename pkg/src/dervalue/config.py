"""Run configuration: one YAML (or JSON) mapping, overridable from the CLI."""

from __future__ import annotations

import copy
import datetime as dt
import hashlib
import json
import os
import re
from pathlib import Path

import yaml

from .coordination import PATTERNS
from .tariffs import Policy

OUTPUT_ENV = "DERVALUE_OUTPUT_DIR"

DEFAULTS = {
    "seed": 0,
    "output_dir": "out",
    "n_jobs": None,
    "calendar": {"start_date": "2011-11-01", "n_days": 366, "holidays": None},
    "data": None,
    "synth": None,
    "policies": ["P1", "P2", "P3", "P4"],
    "rates": {},
    "savings": {"n_boot": 1000, "alpha": 0.05, "dispatch_dump": False},
    "voi": {"policy": "P1", "cv_grid": list(range(0, 101, 10)), "n_seeds": 30, "max_households": None},
    "coord": {
        "policy": "P1",
        "t_grid": list(range(0, 101, 10)),
        "patterns": list(PATTERNS),
        "cv_grid": list(range(10, 101, 10)),
        "n_seeds": 30,
        "scaling_law": {"a": 0.25, "b": 0.33, "cv_min": 0.01, "cv_max": 1.0},
        "group_self_discharge": True,
    },
    "analytic": {"e": 2.0, "p_a": 0.75, "q": 1.0, "r": 0.0, "n": 100, "steps": 100},
    "solver": {"tie_break": 1e-7},
}

# keys that never change output bytes; left out of manifests and hashes
RUNTIME_KEYS = ("output_dir", "n_jobs")

DATA_KEYS = ("loads", "irradiance", "lmp", "nodes", "zips")
SYNTH_KEYS = {
    "n_households", "archetype_weights", "mean_load_median_kw", "mean_load_sigma",
    "mean_load_bounds", "noise_cv", "n_zips", "n_nodes",
}


class ConfigError(ValueError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.diagnostics))


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


class _Loader(yaml.SafeLoader):
    pass


# YAML 1.1 needs a dot in floats; also accept forms like 1e-7
_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^[-+]?(?:[0-9][0-9_]*)(?:\.[0-9_]*)?[eE][-+]?[0-9]+$"),
    list("-+0123456789"),
)


def read_config_file(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        if str(path).endswith(".json"):
            raw = json.load(fh)
        else:
            raw = yaml.load(fh, Loader=_Loader) or {}
    if not isinstance(raw, dict):
        raise ConfigError([f"{path}: top level must be a mapping"])
    # a run manifest carries the resolved config under "config"
    if "config" in raw and "config_hash" in raw:
        raw = raw["config"]
    return raw


def resolve(raw: dict | None = None, overrides: dict | None = None, *,
            need_input: bool = False) -> dict:
    """Defaults, then file values, then CLI overrides; validated."""
    cfg = _merge(DEFAULTS, raw or {})
    cfg = _merge(cfg, overrides or {})
    if os.environ.get(OUTPUT_ENV) and not (overrides or {}).get("output_dir"):
        cfg["output_dir"] = os.environ[OUTPUT_ENV]
    for key in ("start_date",):
        v = cfg["calendar"].get(key)
        if isinstance(v, dt.date):
            cfg["calendar"][key] = v.isoformat()
    diags = validate(cfg, need_input=need_input)
    if diags:
        raise ConfigError(diags)
    return cfg


def _is_num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _check_grid(diags, path, grid, lo, hi):
    if not isinstance(grid, list) or not all(_is_num(v) for v in grid):
        diags.append(f"{path}: must be a list of numbers")
        return
    bad = [v for v in grid if not lo <= v <= hi]
    if bad:
        diags.append(f"{path}: values {bad} outside [{lo}, {hi}]")


def validate(cfg: dict, *, need_input: bool = False) -> list[str]:
    """Every violated constraint, as ``field.path: message``."""
    diags = []
    known = set(DEFAULTS)
    for k in sorted(set(cfg) - known):
        diags.append(f"{k}: unknown key")
    if not isinstance(cfg.get("seed"), int) or isinstance(cfg.get("seed"), bool):
        diags.append("seed: must be an integer")
    n_jobs = cfg.get("n_jobs")
    if n_jobs is not None and (not isinstance(n_jobs, int) or n_jobs < 1):
        diags.append("n_jobs: must be a positive integer or null")

    cal = cfg.get("calendar") or {}
    try:
        dt.date.fromisoformat(str(cal.get("start_date")))
    except ValueError:
        diags.append("calendar.start_date: must be an ISO date")
    if cal.get("n_days") not in (365, 366):
        diags.append("calendar.n_days: must be 365 or 366")

    data = cfg.get("data")
    if data is not None:
        if not isinstance(data, dict):
            diags.append("data: must be a mapping of file paths")
        else:
            for k in sorted(set(data) - set(DATA_KEYS)):
                diags.append(f"data.{k}: unknown key")
            for k in ("loads", "irradiance", "zips"):
                if not data.get(k):
                    diags.append(f"data.{k}: required when data is given")
    synth = cfg.get("synth")
    if synth is not None:
        if not isinstance(synth, dict):
            diags.append("synth: must be a mapping")
        else:
            for k in sorted(set(synth) - SYNTH_KEYS):
                diags.append(f"synth.{k}: unknown key")
            n = synth.get("n_households", 1)
            if not isinstance(n, int) or n < 1:
                diags.append("synth.n_households: must be a positive integer")
    if need_input and data is None and synth is None:
        diags.append("data: no input data and no synth config given")

    policies = cfg.get("policies")
    if not isinstance(policies, list) or not policies:
        diags.append("policies: must be a non-empty list")
    else:
        for i, p in enumerate(policies):
            if p not in {x.value for x in Policy}:
                diags.append(f"policies[{i}]: unknown policy {p!r}")

    sv = cfg.get("savings") or {}
    if not isinstance(sv.get("n_boot"), int) or sv.get("n_boot") < 0:
        diags.append("savings.n_boot: must be a nonnegative integer")
    if not _is_num(sv.get("alpha")) or not 0 < sv.get("alpha") < 1:
        diags.append("savings.alpha: must lie in (0, 1)")

    voi = cfg.get("voi") or {}
    if voi.get("policy") not in {x.value for x in Policy}:
        diags.append("voi.policy: unknown policy")
    _check_grid(diags, "voi.cv_grid", voi.get("cv_grid"), 0, 1000)
    if isinstance(voi.get("cv_grid"), list):
        if 0 not in voi["cv_grid"]:
            diags.append("voi.cv_grid: must contain 0")
        if len(set(voi["cv_grid"])) < 2:
            diags.append("voi.cv_grid: needs at least two distinct levels")
    if not isinstance(voi.get("n_seeds"), int) or voi.get("n_seeds") < 1:
        diags.append("voi.n_seeds: must be a positive integer")

    co = cfg.get("coord") or {}
    if co.get("policy") not in {x.value for x in Policy}:
        diags.append("coord.policy: unknown policy")
    _check_grid(diags, "coord.t_grid", co.get("t_grid"), 0, 100)
    _check_grid(diags, "coord.cv_grid", co.get("cv_grid"), 0, 1000)
    pats = co.get("patterns")
    if not isinstance(pats, list) or not pats:
        diags.append("coord.patterns: must be a non-empty list")
    else:
        for i, p in enumerate(pats):
            if p not in PATTERNS:
                diags.append(f"coord.patterns[{i}]: unknown pattern {p!r}")
    if not isinstance(co.get("n_seeds"), int) or co.get("n_seeds") < 0:
        diags.append("coord.n_seeds: must be a nonnegative integer")
    law = co.get("scaling_law") or {}
    for k in ("a", "b", "cv_min", "cv_max"):
        if not _is_num(law.get(k)) or law.get(k) < 0:
            diags.append(f"coord.scaling_law.{k}: must be a nonnegative number")
    if _is_num(law.get("cv_min")) and _is_num(law.get("cv_max")) and law["cv_min"] > law["cv_max"]:
        diags.append("coord.scaling_law.cv_min: exceeds cv_max")

    an = cfg.get("analytic") or {}
    for k in ("e", "p_a", "q", "r"):
        if not _is_num(an.get(k)):
            diags.append(f"analytic.{k}: must be a number")
    if _is_num(an.get("e")) and an["e"] <= 1:
        diags.append("analytic.e: must exceed 1")
    if _is_num(an.get("p_a")) and not 0 <= an["p_a"] <= 1:
        diags.append("analytic.p_a: must lie in [0, 1]")
    if _is_num(an.get("q")) and _is_num(an.get("r")) and not an["q"] > an["r"] >= 0:
        diags.append("analytic.r: must satisfy q > r >= 0")
    for k in ("n", "steps"):
        if not isinstance(an.get(k), int) or an.get(k) < 1:
            diags.append(f"analytic.{k}: must be a positive integer")

    tb = (cfg.get("solver") or {}).get("tie_break")
    if not _is_num(tb) or tb < 0:
        diags.append("solver.tie_break: must be a nonnegative number")
    return diags


def recorded(cfg: dict) -> dict:
    """The part of a config that determines results."""
    return {k: v for k, v in cfg.items() if k not in RUNTIME_KEYS}


def config_hash(cfg: dict) -> str:
    blob = json.dumps(recorded(cfg), sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def output_dir(cfg: dict) -> Path:
    return Path(cfg["output_dir"])
