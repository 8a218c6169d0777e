"""Command line entry point: ``relayfl {simulate,oracle-check,schedule,plotdata}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace

from .config import ConfigError, load_config
from .harness import (emit_csv, plotdata, read_csv, run_experiment, run_oracle_check,
                      schedule_at_round)


def _simulate(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = replace(config, master_seed=args.seed)
    if args.out is not None:
        config = replace(config, output_path=args.out)
    out = config.resolved_output()
    emit_csv(run_experiment(config), out)
    print(f"wrote {out}")
    return 0


def _oracle_check(args) -> int:
    report = run_oracle_check(args.instances, args.k_max, args.seed)
    print(f"instances={report.instances} mismatches={report.mismatch_count}")
    if report.mismatches:
        with open(args.dump, "w", encoding="utf-8") as fh:
            json.dump(report.mismatches, fh, indent=2)
        print(f"counterexamples written to {args.dump}")
        return 1
    return 0


def _schedule(args) -> int:
    config = load_config(args.config)
    sched, record = schedule_at_round(config, args.round, args.scheme, args.trial)
    doc = {"trial": args.trial, "round": args.round, "scheme": args.scheme,
           "scheduled_count": sched.scheduled_count, "mse": record.mse, "fn_mag2": record.fn_mag2,
           **sched.to_dict()}
    json.dump(doc, sys.stdout, indent=2)
    print()
    return 0


def _plotdata(args) -> int:
    rows = plotdata(read_csv(args.input), args.figure)
    writer = csv.DictWriter(sys.stdout, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relayfl", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the configured experiment and write CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=_simulate)

    p = sub.add_parser("oracle-check", help="compare the greedy scheduler with exhaustive search")
    p.add_argument("--instances", type=int, default=1000)
    p.add_argument("--k-max", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dump", default="oracle_mismatches.json")
    p.set_defaults(func=_oracle_check)

    p = sub.add_parser("schedule", help="print one round's schedule")
    p.add_argument("--config", required=True)
    p.add_argument("--round", type=int, required=True, help="1-based round")
    p.add_argument("--scheme", default="proposed")
    p.add_argument("--trial", type=int, default=0)
    p.set_defaults(func=_schedule)

    p = sub.add_parser("plotdata", help="pivot a results CSV into per-figure series")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--figure", choices=["devices", "power", "loss"], required=True)
    p.set_defaults(func=_plotdata)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"relayfl: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
