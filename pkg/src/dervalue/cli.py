"""Command-line entry point.

Exit codes: 0 ok, 1 configuration error, 2 data error, 3 solver error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .calendar import CalendarError
from .config import ConfigError, output_dir, read_config_file, resolve, validate, DEFAULTS, _merge
from .dispatch import SolverError
from .ingest import DataError

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_SOLVER = 0, 1, 2, 3
NEEDS_INPUT = {"prices", "savings", "voi", "coord"}


def _common(p: argparse.ArgumentParser):
    p.add_argument("-c", "--config", help="YAML/JSON config file or a run manifest")
    p.add_argument("--seed", type=int, help="run seed")
    p.add_argument("-o", "--out", help="output directory (overrides DERVALUE_OUTPUT_DIR)")
    p.add_argument("-j", "--n-jobs", type=int, help="worker threads (default: CPU count)")
    p.add_argument("--n-households", type=int, help="synthetic population size")
    p.add_argument("--policies", nargs="+", metavar="P", help="policies to simulate, e.g. P1 P3")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dervalue", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "synth": "generate a synthetic population and write its input files",
        "prices": "build every rate and write the rate audit",
        "savings": "per-policy bills, savings and rank correlations",
        "voi": "value of forecast information per household",
        "coord": "value of coordinated action and information",
        "analytic": "closed-form two-type VCA curve",
        "all": "synth, prices, savings, voi, coord and analytic in one run",
        "validate": "check a config and list every problem",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        _common(p)
        if name in ("voi", "coord", "all"):
            p.add_argument("--n-seeds", type=int, help="forecast-noise seeds")
        if name in ("savings", "all"):
            p.add_argument("--n-boot", type=int, help="bootstrap resamples")
        if name in ("analytic", "all"):
            p.add_argument("--e", type=float, help="per-adopter generation (> 1)")
            p.add_argument("--pa", type=float, help="fraction of type A households")
            p.add_argument("--q", type=float, help="purchase price")
            p.add_argument("--r", type=float, help="sale price")
            p.add_argument("--n", type=int, help="number of households")
            p.add_argument("--steps", type=int, help="grid intervals on f")
    return parser


def overrides_from(args) -> dict:
    o = {}
    if args.seed is not None:
        o["seed"] = args.seed
    if args.out:
        o["output_dir"] = args.out
    if args.n_jobs is not None:
        o["n_jobs"] = args.n_jobs
    if args.n_households is not None:
        o["synth"] = {"n_households": args.n_households}
    if args.policies:
        o["policies"] = args.policies
    if getattr(args, "n_seeds", None) is not None:
        o["voi"] = {"n_seeds": args.n_seeds}
        o["coord"] = {"n_seeds": args.n_seeds}
    if getattr(args, "n_boot", None) is not None:
        o["savings"] = {"n_boot": args.n_boot}
    an = {}
    for flag, key in (("e", "e"), ("pa", "p_a"), ("q", "q"), ("r", "r"), ("n", "n"), ("steps", "steps")):
        v = getattr(args, flag, None)
        if v is not None:
            an[key] = v
    if an:
        o["analytic"] = an
    return o


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        raw = read_config_file(args.config) if args.config else {}
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # yaml syntax errors
        print(f"error: {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    overrides = overrides_from(args)
    command = args.command

    if command == "validate":
        merged = _merge(_merge(DEFAULTS, raw), overrides)
        diags = validate(merged, need_input=True)
        for d in diags:
            print(d)
        if not diags:
            print("ok")
        return EXIT_CONFIG if diags else EXIT_OK

    if command in ("synth", "all") and not raw.get("data") and not raw.get("synth"):
        overrides.setdefault("synth", {})
    try:
        cfg = resolve(raw, overrides, need_input=command in NEEDS_INPUT)
    except ConfigError as exc:
        for d in exc.diagnostics:
            print(f"config error: {d}", file=sys.stderr)
        return EXIT_CONFIG

    from .pipeline import Run

    run = Run(cfg, output_dir(cfg), command)
    try:
        ok = run.run(command)
    except (DataError, CalendarError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SolverError as exc:
        run.write_failures()
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not ok:
        print(f"solver error: {len(run.failures)} failure(s), see failures.csv", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
