"""Command-line interface for the edge-statistics laboratory."""

from __future__ import annotations

import argparse
import sys

from .harness import (
    EXPERIMENTS,
    RunConfig,
    UsageError,
    config_from_mapping,
    load_config,
    run,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wigneredge",
        description="Numerical laboratory for largest-eigenvalue statistics "
        "of generalized Wigner matrices.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="INI config file with a [run] section")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--workers", type=int, help="worker thread count")
        p.add_argument("--out", help="output directory")
        p.add_argument("--n", type=int, help="single matrix size override")
        p.add_argument("--trials", type=int, help="trial count override")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {
        "experiment": args.experiment,
        "master_seed": str(args.seed) if args.seed is not None else None,
        "workers": str(args.workers) if args.workers is not None else None,
        "out_dir": args.out,
        "n_list": str(args.n) if args.n is not None else None,
        "trials": str(args.trials) if args.trials is not None else None,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    try:
        if args.config:
            cfg = load_config(args.config, overrides)
        else:
            cfg = config_from_mapping(overrides)
        record = run(cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    for row in record.rows:
        status = ""
        if "pass" in row:
            status = "PASS " if row["pass"] else "FAIL "
        body = " ".join(
            f"{k}={v}" for k, v in row.items() if k not in ("pass", "config_hash")
        )
        print(f"{status}{body}")
    print(f"wall_time={record.wall_time:.2f}s hash={cfg.config_hash}")
    return 0 if record.all_pass else 1


if __name__ == "__main__":
    raise SystemExit(main())
