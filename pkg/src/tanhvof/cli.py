"""Command-line front end.

    tanhvof run --config cfg.txt [--assert-acceptance]
    tanhvof converge --config cfg.txt
    tanhvof verify

``run`` executes the configured case on every configured grid size and writes
the requested output files. ``converge`` additionally writes an aligned
convergence table over the size sweep. ``verify`` runs the built-in property
suite and exits nonzero on any failure. TANHVOF_THREADS caps the worker count
for independent sizes of a sweep (0 or 1 = fully sequential).
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from .acceptance import quick_checks
from .benchmark import (
    CaseReport,
    check_acceptance,
    make_case,
    observed_orders,
    ConvergenceRow,
    run_case,
)
from .config import ConfigError, RunConfig, parse_config
from .outputs import emit_outputs, write_convergence_table


def _load_config(path: str) -> RunConfig:
    with open(path) as f:
        return parse_config(f.read())


def _worker_count(n_jobs: int) -> int:
    raw = os.environ.get("TANHVOF_THREADS", "")
    try:
        threads = int(raw) if raw else 1
    except ValueError:
        threads = 1
    return max(1, min(threads, n_jobs))


def _run_all_sizes(config: RunConfig) -> list[CaseReport]:
    case = make_case(config.case)

    def one(n: int) -> CaseReport:
        return run_case(
            case, n, beta0=config.beta0, cfl=config.cfl,
            snapshot_times=config.snapshots,
        )

    workers = _worker_count(len(config.sizes))
    if workers <= 1:
        return [one(n) for n in config.sizes]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, config.sizes))


def _cmd_run(args) -> int:
    config = _load_config(args.config)
    reports = _run_all_sizes(config)
    failed = False
    for report in reports:
        emit_outputs(report, config)
        print(
            f"{report.case.name} {report.n}^2: L1={report.l1:.4e} "
            f"steps={report.n_steps} mass_drift={report.mass_drift_raw:.3e} "
            f"wall={report.wall_time:.1f}s"
        )
        if args.assert_acceptance:
            for name, ok, detail in check_acceptance(report):
                print(f"  [{'PASS' if ok else 'FAIL'}] {name}: {detail}")
                failed |= not ok
    return 1 if failed else 0


def _cmd_converge(args) -> int:
    config = _load_config(args.config)
    if len(config.sizes) < 2:
        print("converge needs at least 2 grid sizes", file=sys.stderr)
        return 2
    reports = _run_all_sizes(config)
    for report in reports:
        emit_outputs(report, config)
    errors = [r.l1 for r in reports]
    rows = [
        ConvergenceRow(n, e, o)
        for n, e, o in zip(config.sizes, errors, observed_orders(errors))
    ]
    os.makedirs(config.outdir, exist_ok=True)
    path = os.path.join(config.outdir, f"{config.case}_convergence.txt")
    write_convergence_table(path, config.case, rows)
    with open(path) as f:
        print(f.read(), end="")
    return 0


def _cmd_verify(args) -> int:
    results = quick_checks()
    for result in results:
        print(result.line())
    return 0 if all(r.passed for r in results) else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tanhvof",
        description="2D VOF/level-set interface transport via tanh scaling",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the configured case at each grid size")
    p_run.add_argument("--config", required=True, help="path to a config document")
    p_run.add_argument(
        "--assert-acceptance", action="store_true",
        help="exit nonzero unless all applicable acceptance thresholds pass",
    )
    p_run.set_defaults(func=_cmd_run)

    p_conv = sub.add_parser("converge", help="size sweep with a convergence table")
    p_conv.add_argument("--config", required=True)
    p_conv.set_defaults(func=_cmd_converge)

    p_ver = sub.add_parser("verify", help="run the built-in property suite")
    p_ver.set_defaults(func=_cmd_verify)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
