"""Command-line front end.

Subcommands: `levels`, `simulate`, `sweep`, `adiabaticity`, `report`.
Exit codes: 0 all declared thresholds met, 1 physics thresholds failed,
2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import runner
from .config import load_config
from .errors import ConfigError, ScrapSimError

EXIT_OK = 0
EXIT_THRESHOLD = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scrapsim",
        description="Adiabatic-passage state engineering in flux-biased "
                    "phase qubits: level solver, pulse protocols, sweeps.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_command(name, help_text):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="YAML config file")
        cmd.add_argument("--out", default=None,
                         help="output directory (default: config, then "
                              "$SCRAPSIM_OUT, then ./scrapsim-out)")
        cmd.add_argument("--plots", action="store_true",
                         help="also write SVG plots")
        cmd.add_argument("--workers", type=int, default=None,
                         help="sweep worker count")
        cmd.add_argument("--dt", type=float, default=None,
                         help="integrator step in ns (overrides config)")
        return cmd

    add_run_command("simulate", "run the protocol selected in the config")
    add_run_command("levels", "solve the bound-state problem only")
    add_run_command("sweep", "run the sweep section of the config")
    add_run_command("adiabaticity", "evaluate the adiabaticity margin only")

    rep = sub.add_parser("report", help="print a stored run report")
    rep.add_argument("--out", required=True, help="output directory to read")
    return parser


_FORCED_PROTOCOL = {"levels": "levels", "adiabaticity": "adiabaticity",
                    "sweep": "sweep"}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "report":
        return _print_report(args.out)

    try:
        config = load_config(args.config)
        if args.command in _FORCED_PROTOCOL:
            forced = _FORCED_PROTOCOL[args.command]
            if config.protocol != forced:
                config.data["protocol"] = forced
                if forced == "sweep" and config.data["sweep"] is None:
                    raise ConfigError("sweep command needs a sweep section")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = runner.resolve_out_dir(args.out, config)
    try:
        report = runner.run(config, out_dir, plots=args.plots,
                            workers=args.workers, dt=args.dt)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        runner.write_error_record(out_dir, exc, EXIT_CONFIG)
        return EXIT_CONFIG
    except ScrapSimError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        runner.write_error_record(out_dir, exc, EXIT_NUMERICAL)
        return EXIT_NUMERICAL

    sys.stdout.write(report.summary())
    return report.status


def _print_report(out_dir: str) -> int:
    path = os.path.join(out_dir, "report.json")
    if not os.path.exists(path):
        error_path = os.path.join(out_dir, "error.json")
        if os.path.exists(error_path):
            with open(error_path, encoding="utf-8") as fh:
                record = json.load(fh)
            print(f"{record['error']}: {record['message']}", file=sys.stderr)
            return int(record.get("status", EXIT_NUMERICAL))
        print(f"no report found in {out_dir}", file=sys.stderr)
        return EXIT_CONFIG
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    print(f"protocol: {payload['protocol']}")
    print("metrics:")
    for key in sorted(payload["metrics"]):
        print(f"  {key}: {payload['metrics'][key]}")
    print("checks:")
    for key in sorted(payload["checks"]):
        print(f"  {key}: {'PASS' if payload['checks'][key] else 'FAIL'}")
    return int(payload["status"])


if __name__ == "__main__":
    sys.exit(main())
