"""Command-line experiment runner.

    adaptprep run --experiment fig2b --seed 42 --out fig2b.csv \
        [--format csv|json] [--config cfg.json] [--set n=4 --set v2=0.5]
    adaptprep list

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .experiments import EXPERIMENTS, ConfigError, ExperimentConfig, run_experiment
from .policy import DeskScaleError, NumericsError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _parse_set(entry: str) -> tuple[str, object]:
    if "=" not in entry:
        raise ConfigError(f"--set expects key=value, got {entry!r}")
    key, raw = entry.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adaptprep",
        description="Adaptive dissipative state-preparation experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment and emit its table")
    run_p.add_argument("--config", help="JSON config file (flags override)")
    run_p.add_argument("--experiment", help="experiment name (see 'list')")
    run_p.add_argument("--seed", type=int, help="mandatory RNG seed")
    run_p.add_argument("--out", help="output path; omit to print a summary only")
    run_p.add_argument("--format", dest="fmt", choices=["csv", "json"])
    run_p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override one parameter")

    sub.add_parser("list", help="list experiments and their defaults")
    return parser


def _config_from_args(args) -> ExperimentConfig:
    payload = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                payload = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
    experiment = args.experiment or payload.get("experiment")
    if experiment is None:
        raise ConfigError("no experiment given (use --experiment or a config file)")
    seed = args.seed if args.seed is not None else payload.get("seed")
    if seed is None:
        raise ConfigError("no seed given; runs must be explicitly seeded")
    params = dict(payload.get("params", {}))
    for entry in args.overrides:
        key, value = _parse_set(entry)
        params[key] = value
    return ExperimentConfig(
        experiment=experiment,
        seed=int(seed),
        params=params,
        out=args.out if args.out is not None else payload.get("out"),
        fmt=args.fmt or payload.get("format", "csv"),
    )


def _cmd_list() -> int:
    width = max(len(name) for name in EXPERIMENTS)
    for name in sorted(EXPERIMENTS):
        spec = EXPERIMENTS[name]
        print(f"{name:<{width}}  {spec.description}")
        print(f"{'':<{width}}  defaults: {json.dumps(spec.defaults, sort_keys=True)}")
    return EXIT_OK


def _cmd_run(args) -> int:
    cfg = _config_from_args(args)
    table = run_experiment(cfg)
    if cfg.out:
        print(f"{cfg.experiment}: {len(table.rows)} rows -> {cfg.out} "
              f"({table.metadata['runtime_s']} s)")
    else:
        print(f"{cfg.experiment}: {len(table.rows)} rows "
              f"({table.metadata['runtime_s']} s)")
        head = ", ".join(table.headers())
        print(head)
        for row in table.rows[:10]:
            print(", ".join(str(x) for x in row))
        if len(table.rows) > 10:
            print(f"... ({len(table.rows) - 10} more rows; use --out to save)")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "list":
            return _cmd_list()
        return _cmd_run(args)
    except (ConfigError, DeskScaleError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericsError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
