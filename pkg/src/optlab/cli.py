"""Command-line interface: ``optlab run | audit | sweep``.

Exit codes: 0 success, 1 audit or runtime failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from typing import List, Optional

from . import __version__
from .errors import ConfigError

__all__ = ["main", "TRACE_HEADER", "SWEEP_HEADER"]

TRACE_HEADER = ("n", "loss_gap", "dist", "grad_norm", "lr", "beta", "gamma")
SWEEP_HEADER = ("beta", "hlam", "region", "radius")


def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_trace_csv(path: str, trace) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for row in trace.rows:
            w.writerow([str(int(row[0]))] + [_fmt(v) for v in row[1:]])


def cmd_run(args) -> int:
    from .harness.config import load_config, run_experiment

    cfg = load_config(args.config)
    if args.seed is not None or args.iters is not None:
        cfg = cfg.with_overrides(seed=args.seed, iterations=args.iters)
    os.makedirs(args.out, exist_ok=True)
    trace = run_experiment(cfg)
    trace_path = os.path.join(args.out, "trace.csv")
    write_trace_csv(trace_path, trace)
    manifest = {
        "config_hash": cfg.hash,
        "seed": cfg.seed,
        "tool_version": __version__,
        "outputs": {"trace": "trace.csv"},
        "config": cfg.raw,
    }
    with open(os.path.join(args.out, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {len(trace)} rows to {trace_path}")
    return 0


def cmd_audit(args) -> int:
    from .harness.config import config_hash
    from .harness.suites import run_suite

    audits = run_suite(args.suite, args.seed)
    chash = config_hash({"suite": args.suite, "seed": args.seed})
    width = max(len(a.bound_name) for a in audits)
    print(f"{'bound':<{width}}  {'checked':>8}  {'violations':>10}  {'max_rel':>10}")
    failed = 0
    for a in audits:
        status = "ok" if a.passed else "FAIL"
        print(f"{a.bound_name:<{width}}  {a.n_checked:>8d}  {a.violations:>10d}  {a.max_rel_violation:>10.3g}  {status}")
        failed += not a.passed
    print(f"{len(audits) - failed}/{len(audits)} audits passed")
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump([a.report(args.seed, chash) for a in audits], fh, indent=2)
            fh.write("\n")
    return 0 if failed == 0 else 1


def cmd_sweep(args) -> int:
    from .spectral import region_grid

    if args.steps < 1 or args.bmin > args.bmax or args.hmin > args.hmax:
        raise ConfigError("empty grid: need steps >= 1, bmin <= bmax and hmin <= hmax")
    rows = region_grid(args.kind, args.bmin, args.bmax, args.hmin, args.hmax, args.steps)
    parent = os.path.dirname(os.path.abspath(args.out))
    os.makedirs(parent, exist_ok=True)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for b, hl, region, radius in rows:
            w.writerow([_fmt(b), _fmt(hl), region, _fmt(radius)])
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="optlab", description="First-order optimization laboratory.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one experiment from a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--seed", type=int)
    r.add_argument("--iters", type=int)
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("audit", help="run a suite of bound audits")
    a.add_argument("--suite", default="all", choices=("all", "gd", "sgd", "momentum", "spectral", "lower-bounds"))
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--report", help="write a JSON report to this path")
    a.set_defaults(func=cmd_audit)

    s = sub.add_parser("sweep", help="classify a (beta, h*lambda) grid and write CSV")
    s.add_argument("--kind", required=True, choices=("hb-region", "nesterov-region"))
    s.add_argument("--bmin", type=float, default=-1.2)
    s.add_argument("--bmax", type=float, default=1.2)
    s.add_argument("--hmin", type=float, default=0.0)
    s.add_argument("--hmax", type=float, default=5.0)
    s.add_argument("--steps", type=int, default=101)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure of any kind maps to exit 1
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
