"""Benchmark command line: run / compare / reconcile.

    rollup-bench run --mode baseline --target http://127.0.0.1:8545 --out out/base
    rollup-bench run --mode rollup   --target http://127.0.0.1:8545 --out out/roll \
        --settlement-log data/settlement.jsonl
    rollup-bench compare --baseline out/base/report-baseline.json \
        --rollup out/roll/report-rollup.json --out out/cmp
    rollup-bench reconcile --accepted out/roll/accepted.jsonl \
        --target http://127.0.0.1:8545 --store data/objects

Exit status: 0 on success, 1 on usage/run errors, 2 on reconciliation failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import (
    BenchError,
    BenchReport,
    WorkloadSpec,
    compare,
    comparison_text,
    reconcile,
    run_workload,
    write_comparison,
)


def _cmd_run(args: argparse.Namespace) -> int:
    defaults = WorkloadSpec.baseline if args.mode == "baseline" else WorkloadSpec.rollup
    kw = {}
    if args.vus is not None:
        kw["virtual_users"] = args.vus
    if args.duration is not None:
        kw["duration_sec"] = args.duration
    spec = defaults(target=args.target, think_time_ms=args.think_ms, seed=args.seed, **kw)
    report = run_workload(spec, out_dir=args.out, settlement_log=args.settlement_log)
    print(
        f"{spec.mode}: {report.requests_ok}/{report.requests_total} ok, "
        f"{report.throughput_rps} req/s, avg {report.latency_stats['avgMs']} ms "
        f"(p95 {report.latency_stats['p95Ms']} ms)"
    )
    if args.out:
        print(f"artifacts written to {args.out}")
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    baseline = BenchReport.from_dict(json.loads(Path(args.baseline).read_text()))
    rollup = BenchReport.from_dict(json.loads(Path(args.rollup).read_text()))
    doc = compare(baseline, rollup)
    sys.stdout.write(comparison_text(doc))
    if args.out:
        paths = write_comparison(doc, args.out)
        print(f"comparison written to {paths['json'].parent}")
    return 0


def _cmd_reconcile(args: argparse.Namespace) -> int:
    accepted = [
        json.loads(line)
        for line in Path(args.accepted).read_text().splitlines()
        if line.strip()
    ]
    result = reconcile(accepted, target=args.target, store_dir=args.store)
    if args.out:
        Path(args.out).write_text(json.dumps(result, indent=1) + "\n")
    print(
        f"accepted {result['acceptedCount']}, matched {result['matchedCount']}, "
        f"pending {len(result['pendingIds'])}, lost {len(result['lostIds'])}, "
        f"duplicated {len(result['duplicates'])}"
    )
    if not result["ok"]:
        for tid in result["lostIds"][:20]:
            print(f"lost: {tid}", file=sys.stderr)
        for dup in result["duplicates"][:20]:
            print(f"duplicate: {dup['ids']} in batches {dup['batches']}", file=sys.stderr)
        return 2
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rollup-bench", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="drive a workload against a running service")
    run_p.add_argument("--mode", choices=("baseline", "rollup"), required=True)
    run_p.add_argument("--vus", type=int, default=None, help="virtual users (default: 20 baseline / 50 rollup)")
    run_p.add_argument("--duration", type=float, default=None, help="seconds (default: 30)")
    run_p.add_argument("--target", required=True, help="service base URL")
    run_p.add_argument("--out", default=None, help="directory for report artifacts")
    run_p.add_argument("--think-ms", type=int, default=0)
    run_p.add_argument("--seed", type=int, default=1)
    run_p.add_argument("--settlement-log", default=None, help="sequencer settlement log to fold in")
    run_p.set_defaults(func=_cmd_run)

    cmp_p = sub.add_parser("compare", help="compare two run reports")
    cmp_p.add_argument("--baseline", required=True, help="baseline report.json")
    cmp_p.add_argument("--rollup", required=True, help="rollup report.json")
    cmp_p.add_argument("--out", default=None, help="directory for comparison artifacts")
    cmp_p.set_defaults(func=_cmd_compare)

    rec_p = sub.add_parser("reconcile", help="audit accepted ids against committed payloads")
    rec_p.add_argument("--accepted", required=True, help="accepted.jsonl from a rollup run")
    rec_p.add_argument("--target", required=True, help="service base URL")
    rec_p.add_argument("--store", required=True, help="object store directory")
    rec_p.add_argument("--out", default=None, help="write the reconciliation result JSON here")
    rec_p.set_defaults(func=_cmd_reconcile)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
