"""Command-line entry point: ``adaptive-icic <subcommand> [flags]``.

Experiment subcommands write CSV to ``--out`` (stdout by default).  The
``validate`` subcommand runs the oracle suites and exits nonzero if any
check fails.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .experiments import (EXPERIMENTS, ExperimentConfig, config_from_mapping, gnuplot_script,
                          load_config, run_experiment)


def _floats(s: str) -> tuple:
    try:
        return tuple(float(t) for t in s.replace(";", ",").split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="adaptive-icic",
                                description="Adaptive intercell interference cancellation experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value config file")
    common.add_argument("--p0-db", type=_floats, help="edge SNR sweep in dB, e.g. -5,5,10")
    common.add_argument("--nt", type=int, help="BS antennas")
    common.add_argument("--alpha", type=float, help="path-loss exponent")
    common.add_argument("--trials", type=int, help="Monte Carlo trials")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--placements", type=int, help="random 3-cell placements per P0")
    common.add_argument("--workers", type=int, help="worker processes")
    common.add_argument("--out", help="output CSV path ('-' for stdout)")
    helps = {
        "simvcalc": "2-cell closed form vs Monte Carlo along a user-2 sweep",
        "regions": "selected 2-cell profile over a grid of user positions",
        "compare3": "3-cell no-ICIC / static / adaptive throughput",
        "csicost": "3-cell CSI cost of the three systems",
        "feedback": "3-cell limited-feedback modes",
    }
    for name in EXPERIMENTS:
        sp = sub.add_parser(name, parents=[common], help=helps[name])
        sp.add_argument("--sweep", type=_floats, help="sweep / grid positions in units of R")
        sp.add_argument("--bits", type=float, help="simvcalc: feedback bits per link")
        sp.add_argument("--gnuplot", action="store_true",
                        help="also write <out>.gp (requires --out)")
    v = sub.add_parser("validate", help="run the oracle suites")
    v.add_argument("--trials", type=int, default=20_000, help="Monte Carlo trials")
    v.add_argument("--seed", type=int, default=0)
    return p


def make_config(args) -> ExperimentConfig:
    base = ExperimentConfig(experiment=args.command)
    if args.config is not None:
        base = load_config(args.config.read_text(encoding="utf-8"))
        if base.experiment != args.command:
            base = replace(base, experiment=args.command)
    over = {k: getattr(args, k, None) for k in
            ("p0_db", "nt", "alpha", "trials", "seed", "placements", "workers", "out",
             "sweep", "bits")}
    return base.with_overrides(**over)


def _validate(args) -> int:
    from .validation import run_all
    checks = run_all(trials=args.trials, seed=args.seed)
    for c in checks:
        print(c.line())
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return 1 if failed else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return _validate(args)
        cfg = make_config(args)
        if args.gnuplot and cfg.out == "-":
            raise ValueError("--gnuplot needs --out")
        text = run_experiment(cfg)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    if cfg.out == "-":
        sys.stdout.write(text)
    else:
        Path(cfg.out).write_text(text, encoding="utf-8")
        if args.gnuplot:
            Path(cfg.out + ".gp").write_text(gnuplot_script(cfg, cfg.out), encoding="utf-8")
    return 0


if __name__ == "__main__":
    sys.exit(main())
