"""Command-line entry point.

    evaba --n 4 --f 1 --kappa 2 --runs 100 --adversary none
    evaba committee-stats --n 10 --samples 100000

Exit status is 0 iff no safety violation occurred; configuration errors
exit with status 2.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .harness import (
    ADVERSARIES, BASELINES, ExperimentConfig, committee_stats, committee_table, run_experiment,
)
from .sim import SCHEDULERS, ConfigError


def parse_byz(text: str) -> tuple[tuple[int, ...], Optional[int]]:
    """``"3"`` is a count; ``"2,5"`` (or ``"5,"``) is an explicit id list."""
    text = text.strip()
    if "," not in text:
        try:
            return (), int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"--byz expects a count or comma-separated ids, got {text!r}")
    try:
        ids = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad id list {text!r}")
    return ids, len(ids)


def run_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="evaba", description="Run seeded eVABA agreement experiments.")
    p.add_argument("--n", type=int, default=4, help="number of parties (3f+1)")
    p.add_argument("--f", type=int, default=None, help="fault bound (default (n-1)/3)")
    p.add_argument("--kappa", type=int, default=None, help="committee size (default f+1)")
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0, help="first seed; run r uses seed+r")
    p.add_argument("--adversary", choices=ADVERSARIES, default="none")
    p.add_argument("--byz", type=parse_byz, default=None,
                   help="Byzantine count, or comma-separated ids (e.g. 2,5)")
    p.add_argument("--scheduler", choices=SCHEDULERS, default="random")
    p.add_argument("--max-views", type=int, default=20)
    p.add_argument("--baseline", choices=BASELINES, default=None,
                   help="also run every seed with kappa=n for comparison")
    p.add_argument("--out", type=Path, default=None, help="write the JSON report here")
    p.add_argument("--trace", type=Path, default=None,
                   help="directory for per-run gzipped traces")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--quiet", action="store_true", help="suppress the table")
    return p


def stats_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="evaba committee-stats",
                                description="Exact vs sampled all-Byzantine committee probability.")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--f", type=int, default=None)
    p.add_argument("--kappa", type=int, action="append", default=None,
                   help="repeatable; default 1..f+1")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=None)
    return p


def _stats_main(argv: Sequence[str]) -> int:
    args = stats_parser().parse_args(argv)
    try:
        rows = committee_stats(args.n, args.f, args.kappa, args.samples, args.seed)
    except ConfigError as e:
        print(f"evaba: config error: {e}", file=sys.stderr)
        return 2
    sys.stdout.write(committee_table(rows))
    if args.out is not None:
        doc = [
            {"n": r.n, "f": r.f, "kappa": r.kappa, "exact": str(r.exact), "exact_float": float(r.exact),
             "samples": r.samples, "hits": r.hits, "empirical": r.empirical, "z": r.z}
            for r in rows
        ]
        args.out.write_text(json.dumps(doc, indent=2) + "\n")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "committee-stats":
        return _stats_main(argv[1:])
    if argv and argv[0] == "run":
        argv = argv[1:]
    args = run_parser().parse_args(argv)
    ids, count = args.byz if args.byz is not None else ((), None)
    cfg = ExperimentConfig(
        n=args.n, f=args.f, kappa=args.kappa, runs=args.runs, seed=args.seed,
        adversary=args.adversary, byz=ids, byz_count=count, scheduler=args.scheduler,
        max_views=args.max_views, baseline=args.baseline,
        trace_dir=str(args.trace) if args.trace is not None else None, workers=args.workers,
    )
    try:
        report = run_experiment(cfg)
    except ConfigError as e:
        print(f"evaba: config error: {e}", file=sys.stderr)
        return 2
    if not args.quiet:
        sys.stdout.write(report.table())
    if args.out is not None:
        report.write(args.out)
    return 0 if not report.violations else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
