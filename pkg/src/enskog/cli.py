"""Command-line front end.

Subcommands map one-to-one onto the experiment drivers: run, sweep,
residual, povzner, chaos, envelope each take a config file and write a
results directory; report aggregates a directory of results into a
pass/fail summary.  Flag precedence is config file < ENSKOG_* environment
variables < command-line flags.  Given the same config and seeds, output
files are byte-for-byte reproducible.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

from . import experiments
from .config import ConfigError, RunConfig, parse_config

_COMMANDS = ("run", "sweep", "residual", "povzner", "chaos", "envelope")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="enskog",
        description=(
            "Stochastic particle simulator and verification suite for "
            "binary-collision dynamics."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "run": "simulate one configuration and write its run directory",
        "sweep": "simulate every (n, seed) cell of the config grid",
        "residual": "weak-form residuals over seeds and ensemble sizes",
        "povzner": "certify the moment-exchange inequality",
        "chaos": "distances between paired independent runs",
        "envelope": "calibrate and validate moment growth envelopes",
    }
    for name in _COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", required=True, metavar="PATH",
                       help="INI config file")
        p.add_argument("--out", default=None, metavar="DIR",
                       help="output directory (default: config [run] out)")
        p.add_argument("--seed", type=int, default=None, metavar="N",
                       help="replace the config's seed list with this seed")
        p.add_argument("--jobs", type=int, default=None, metavar="K",
                       help="parallel workers for sweep")
    rep = sub.add_parser("report", help="aggregate results into a summary")
    rep.add_argument("dir", metavar="DIR", help="directory tree of results")
    return parser


def load_config(args) -> RunConfig:
    text = Path(args.config).read_text()
    cfg = parse_config(text, env=os.environ)
    overrides = {}
    if args.seed is not None:
        overrides["seeds"] = (args.seed,)
    if args.out is not None:
        overrides["out"] = args.out
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    overrides["kind"] = args.command
    return dataclasses.replace(cfg, **overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "report":
        try:
            return experiments.do_report(args.dir)
        except OSError as exc:
            print(f"cannot report on {args.dir}: {exc}", file=sys.stderr)
            return 2
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "run":
            return experiments.do_run(cfg, cfg.out)
        if args.command == "sweep":
            return experiments.do_sweep(cfg, cfg.out, jobs=cfg.jobs)
        if args.command == "residual":
            return experiments.do_residual(cfg, cfg.out)
        if args.command == "povzner":
            return experiments.do_povzner(cfg, cfg.out)
        if args.command == "chaos":
            return experiments.do_chaos(cfg, cfg.out)
        return experiments.do_envelope(cfg, cfg.out)
    except RuntimeError as exc:
        print(f"hard invariant violated: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
