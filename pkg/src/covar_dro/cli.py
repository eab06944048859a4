"""Command-line entry point: ``covar-dro run`` and ``covar-dro summarize``."""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .exceptions import ConfigurationError
from .experiment import (ExperimentConfig, read_results, rows_to_csv, run_experiment,
                         summarize, summary_table, summary_to_csv, write_sidecar)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="covar-dro", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment grid and write a results CSV")
    run.add_argument("--config", required=True, help="YAML or JSON experiment config")
    run.add_argument("--out", default="results.csv", help="results CSV path")
    run.add_argument("--seed", type=int, help="override the master seed")
    run.add_argument("--workers", type=int, default=1, help="worker processes")
    run.add_argument("--paper-scale", action="store_true",
                     help="use the full-scale MRP settings")
    run.add_argument("--strict", action="store_true", help="abort on the first failed row")

    summ = sub.add_parser("summarize", help="percentile summary of a results CSV")
    summ.add_argument("csv", help="results CSV written by 'run'")
    summ.add_argument("--out", help="also write the summary CSV here")
    return ap


def _run(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.paper_scale:
        overrides["paper_scale"] = True
    if args.strict:
        overrides["strict"] = True
    cfg = dataclasses.replace(cfg, **overrides)
    try:
        rows = run_experiment(cfg, workers=args.workers)
    except Exception as exc:  # noqa: BLE001 - only reachable under --strict
        if not cfg.strict:
            raise
        print(f"covar-dro: failed under --strict: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    rows_to_csv(rows, args.out)
    write_sidecar(cfg, args.out)
    failed = sum(r["status"] != "ok" for r in rows)
    print(f"wrote {len(rows)} rows ({failed} failed) to {args.out}")
    return 0


def _summarize(args) -> int:
    summary = summarize(read_results(args.csv))
    if args.out:
        summary_to_csv(summary, args.out)
    print(summary_table(summary))
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _run(args) if args.command == "run" else _summarize(args)
    except (ConfigurationError, ValueError, OSError) as exc:
        print(f"covar-dro: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
