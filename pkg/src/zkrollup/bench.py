"""Workload driver and report generator for baseline-vs-rollup comparisons.

``run_workload`` spawns N closed-loop virtual users against a running
service: each user keeps exactly one request in flight, posting randomized
asset-creation transactions back-to-back for the configured duration.
Baseline mode targets ``/submit-direct`` (response only after on-chain
commit); rollup mode targets ``/submit`` (response on acceptance).  Every
response's latency and status is recorded; throughput is successful
requests divided by the run duration, and the latency statistics are
computed over the full sample.

``compare`` merges two reports into machine-readable (JSON/CSV) and
human-readable tables: throughput ratio, latency statistics side by side,
and the per-batch settlement timing series (proof generation vs payload
upload vs L1 commit).

``reconcile`` audits a rollup run end to end: every accepted tracking id
must appear in exactly one committed batch payload, with payloads fetched
from the content-addressed store via the CIDs recorded on-chain.
Transactions still sitting in the pool count as pending, not lost.
"""

from __future__ import annotations

import json
import random
import threading
import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import httpx
import numpy as np

from .store import BatchPayload, LocalObjectStore
from .transactions import leaf_encode, random_transaction

BASELINE_DEFAULT_USERS = 20
ROLLUP_DEFAULT_USERS = 50
DEFAULT_DURATION_SEC = 30

_MODE_PATHS = {"baseline": "/submit-direct", "rollup": "/submit"}


class BenchError(Exception):
    """Workload could not run (bad spec, unreachable service)."""


@dataclass(frozen=True)
class WorkloadSpec:
    mode: str
    virtual_users: int
    duration_sec: float
    target: str
    think_time_ms: int = 0
    seed: int = 1

    def __post_init__(self) -> None:
        if self.mode not in _MODE_PATHS:
            raise BenchError(f"mode must be one of {sorted(_MODE_PATHS)}, got {self.mode!r}")
        if self.virtual_users < 0 or self.duration_sec < 0 or self.think_time_ms < 0:
            raise BenchError("virtual_users, duration_sec and think_time_ms must be >= 0")

    @property
    def path(self) -> str:
        return _MODE_PATHS[self.mode]

    @classmethod
    def baseline(cls, target: str, **kw) -> "WorkloadSpec":
        kw.setdefault("virtual_users", BASELINE_DEFAULT_USERS)
        kw.setdefault("duration_sec", DEFAULT_DURATION_SEC)
        return cls(mode="baseline", target=target, **kw)

    @classmethod
    def rollup(cls, target: str, **kw) -> "WorkloadSpec":
        kw.setdefault("virtual_users", ROLLUP_DEFAULT_USERS)
        kw.setdefault("duration_sec", DEFAULT_DURATION_SEC)
        return cls(mode="rollup", target=target, **kw)


@dataclass
class BenchReport:
    spec: dict
    started_epoch_ms: int
    duration_sec: float
    requests_total: int
    requests_ok: int
    requests_failed: int
    throughput_rps: float
    success_rate: float
    latency_stats: dict
    status_counts: dict
    settlement: list = dc_field(default_factory=list)
    metadata: dict = dc_field(default_factory=dict)
    # raw per-request rows: (offset_ms from run start, latency_ms, status, ok)
    raw_rows: list = dc_field(default_factory=list)
    accepted: list = dc_field(default_factory=list)

    def to_dict(self, include_raw: bool = False) -> dict:
        out = {
            "spec": self.spec,
            "startedEpochMs": self.started_epoch_ms,
            "durationSec": self.duration_sec,
            "requestsTotal": self.requests_total,
            "requestsOk": self.requests_ok,
            "requestsFailed": self.requests_failed,
            "throughputRps": self.throughput_rps,
            "successRate": self.success_rate,
            "latencyStats": self.latency_stats,
            "statusCounts": self.status_counts,
            "settlement": self.settlement,
            "metadata": self.metadata,
        }
        if include_raw:
            out["rawRows"] = self.raw_rows
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "BenchReport":
        return cls(
            spec=obj["spec"],
            started_epoch_ms=obj["startedEpochMs"],
            duration_sec=obj["durationSec"],
            requests_total=obj["requestsTotal"],
            requests_ok=obj["requestsOk"],
            requests_failed=obj["requestsFailed"],
            throughput_rps=obj["throughputRps"],
            success_rate=obj["successRate"],
            latency_stats=obj["latencyStats"],
            status_counts=obj["statusCounts"],
            settlement=obj.get("settlement", []),
            metadata=obj.get("metadata", {}),
            raw_rows=obj.get("rawRows", []),
        )


def latency_statistics(latencies_ms: list[float]) -> dict:
    """min/avg/p50/p90/p95/max over the full sample (no subsampling)."""
    if not latencies_ms:
        return {"count": 0, "minMs": 0.0, "avgMs": 0.0, "p50Ms": 0.0, "p90Ms": 0.0, "p95Ms": 0.0, "maxMs": 0.0}
    arr = np.asarray(latencies_ms, dtype=np.float64)
    return {
        "count": int(arr.size),
        "minMs": round(float(arr.min()), 3),
        "avgMs": round(float(arr.mean()), 3),
        "p50Ms": round(float(np.percentile(arr, 50)), 3),
        "p90Ms": round(float(np.percentile(arr, 90)), 3),
        "p95Ms": round(float(np.percentile(arr, 95)), 3),
        "maxMs": round(float(arr.max()), 3),
    }


class _VirtualUser(threading.Thread):
    """One closed-loop client: at most one request in flight, ever."""

    def __init__(self, index: int, spec: WorkloadSpec, t_end: float, collect_accepted: bool):
        super().__init__(name=f"vu-{index}", daemon=True)
        self.index = index
        self.spec = spec
        self.t_end = t_end
        self.collect_accepted = collect_accepted
        self.rows: list[tuple[float, float, int, bool]] = []
        self.accepted: list[dict] = []
        self.error: str | None = None

    def run(self) -> None:
        rng = random.Random(self.spec.seed * 1_000_003 + self.index)
        ok_status = 200 if self.spec.mode == "baseline" else 202
        think_s = self.spec.think_time_ms / 1000.0
        try:
            with httpx.Client(base_url=self.spec.target, timeout=60.0) as client:
                while True:
                    now = time.perf_counter()
                    if now >= self.t_end:
                        break
                    tx = random_transaction(
                        rng, now_ms=int(time.time() * 1000), tag=f"vu{self.index}"
                    )
                    body = tx.to_wire()
                    t0 = time.perf_counter()
                    try:
                        resp = client.post(self.spec.path, json=body)
                        status = resp.status_code
                    except httpx.HTTPError:
                        status = 0
                    t1 = time.perf_counter()
                    success = status == ok_status
                    self.rows.append((t0, (t1 - t0) * 1000.0, status, success))
                    if success and self.collect_accepted:
                        data = resp.json()
                        self.accepted.append(
                            {"id": data["id"], "leaf": leaf_encode(tx), "tx": body}
                        )
                    if think_s:
                        time.sleep(think_s)
        except Exception as exc:  # never let a VU die silently
            self.error = f"{type(exc).__name__}: {exc}"


def run_workload(
    spec: WorkloadSpec,
    out_dir: str | Path | None = None,
    settlement_log: str | Path | None = None,
) -> BenchReport:
    """Drive the workload and assemble a report.

    With ``out_dir`` set, writes report.json, latencies.csv and (rollup)
    accepted.jsonl.  ``settlement_log`` points at the sequencer's structured
    settlement log to fold the per-batch timing series into the report.
    """
    started_epoch_ms = int(time.time() * 1000)
    if spec.virtual_users == 0 or spec.duration_sec == 0:
        report = _empty_report(spec, started_epoch_ms)
    else:
        _preflight(spec.target)
        t_start = time.perf_counter()
        t_end = t_start + spec.duration_sec
        users = [
            _VirtualUser(i, spec, t_end, collect_accepted=spec.mode == "rollup")
            for i in range(spec.virtual_users)
        ]
        for u in users:
            u.start()
        for u in users:
            u.join()
        crashed = [u.error for u in users if u.error]
        if crashed:
            raise BenchError(f"{len(crashed)} virtual users crashed; first: {crashed[0]}")
        report = _assemble(spec, started_epoch_ms, users, t_start)

    if settlement_log is not None:
        report.settlement = parse_settlement_log(settlement_log)
    if out_dir is not None:
        write_report(report, out_dir)
    return report


def _preflight(target: str) -> None:
    try:
        resp = httpx.get(f"{target.rstrip('/')}/health", timeout=5.0)
        resp.raise_for_status()
    except Exception as exc:
        raise BenchError(f"target service unreachable at {target}: {exc}") from exc


def _empty_report(spec: WorkloadSpec, started_epoch_ms: int) -> BenchReport:
    return BenchReport(
        spec=_spec_dict(spec),
        started_epoch_ms=started_epoch_ms,
        duration_sec=spec.duration_sec,
        requests_total=0,
        requests_ok=0,
        requests_failed=0,
        throughput_rps=0.0,
        success_rate=0.0,
        latency_stats=latency_statistics([]),
        status_counts={},
        metadata=_metadata(),
    )


def _spec_dict(spec: WorkloadSpec) -> dict:
    return {
        "mode": spec.mode,
        "virtualUsers": spec.virtual_users,
        "durationSec": spec.duration_sec,
        "target": spec.target,
        "endpoint": spec.path,
        "thinkTimeMs": spec.think_time_ms,
        "seed": spec.seed,
    }


def _metadata() -> dict:
    return {
        "clientModel": "closed-loop, one request in flight per virtual user",
        "topology": "single sequencer service exposing both endpoints "
        "(per-organization client APIs collapsed)",
        "generator": "randomized assetId/participant suffixes with synthetic asset CIDs",
    }


def _assemble(
    spec: WorkloadSpec, started_epoch_ms: int, users: list[_VirtualUser], t_start: float
) -> BenchReport:
    rows = [r for u in users for r in u.rows]
    rows.sort(key=lambda r: r[0])
    raw_rows = [
        [round((t0 - t_start) * 1000.0, 3), round(lat, 3), status, ok]
        for (t0, lat, status, ok) in rows
    ]
    ok_count = sum(1 for r in rows if r[3])
    status_counts: dict[str, int] = {}
    for _, _, status, _ in rows:
        key = str(status) if status else "transport-error"
        status_counts[key] = status_counts.get(key, 0) + 1
    accepted = [a for u in users for a in u.accepted]
    return BenchReport(
        spec=_spec_dict(spec),
        started_epoch_ms=started_epoch_ms,
        duration_sec=spec.duration_sec,
        requests_total=len(rows),
        requests_ok=ok_count,
        requests_failed=len(rows) - ok_count,
        throughput_rps=round(ok_count / spec.duration_sec, 3) if spec.duration_sec else 0.0,
        success_rate=round(ok_count / len(rows), 6) if rows else 0.0,
        latency_stats=latency_statistics([r[1] for r in raw_rows if r[3]]),
        status_counts=status_counts,
        metadata=_metadata(),
        raw_rows=raw_rows,
        accepted=accepted,
    )


def parse_settlement_log(path: str | Path) -> list[dict]:
    """Per-batch series from the sequencer's structured settlement log."""
    out = []
    path = Path(path)
    if not path.exists():
        return out
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        out.append(
            {
                "batch": rec["batch"],
                "realCount": rec["realCount"],
                "proofGenMs": rec["proofGenMs"],
                "uploadMs": rec["uploadMs"],
                "l1CommitMs": rec["l1CommitMs"],
                "status": rec["status"],
            }
        )
    return out


def write_report(report: BenchReport, out_dir: str | Path) -> dict[str, Path]:
    """report.json + latencies.csv (+ accepted.jsonl for rollup runs)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    report_path = out_dir / f"report-{report.spec['mode']}.json"
    report_path.write_text(json.dumps(report.to_dict(), indent=1) + "\n")
    paths["report"] = report_path

    csv_path = out_dir / f"latencies-{report.spec['mode']}.csv"
    with csv_path.open("w") as f:
        f.write("offset_ms,latency_ms,status,ok\n")
        for offset, latency, status, ok in report.raw_rows:
            f.write(f"{offset},{latency},{status},{int(ok)}\n")
    paths["latencies"] = csv_path

    if report.accepted:
        acc_path = out_dir / "accepted.jsonl"
        with acc_path.open("w") as f:
            for row in report.accepted:
                f.write(json.dumps(row, separators=(",", ":")) + "\n")
        paths["accepted"] = acc_path
    return paths


# -- comparison -------------------------------------------------------------------


def compare(baseline: BenchReport, rollup: BenchReport) -> dict:
    """Side-by-side comparison document (throughput, latency, settlement)."""
    warnings = []
    if baseline.duration_sec != rollup.duration_sec:
        warnings.append(
            f"duration mismatch: baseline {baseline.duration_sec}s vs rollup {rollup.duration_sec}s"
        )
    base_tp = baseline.throughput_rps
    roll_tp = rollup.throughput_rps
    stats = ("minMs", "avgMs", "p50Ms", "p90Ms", "p95Ms", "maxMs")
    latency_table = []
    for stat in stats:
        b = baseline.latency_stats.get(stat, 0.0)
        r = rollup.latency_stats.get(stat, 0.0)
        latency_table.append(
            {
                "stat": stat,
                "baselineMs": b,
                "rollupMs": r,
                "reductionFactor": round(b / r, 3) if r else None,
            }
        )
    settlement = [s for s in rollup.settlement if s["status"] == "committed"]
    return {
        "throughput": {
            "baselineRps": base_tp,
            "rollupRps": roll_tp,
            "ratio": round(roll_tp / base_tp, 3) if base_tp else None,
        },
        "latency": latency_table,
        "settlementSeries": settlement,
        "warnings": warnings,
    }


def comparison_text(doc: dict) -> str:
    """Human-readable rendering of a comparison document."""
    lines = []
    tp = doc["throughput"]
    lines.append("throughput (successful requests/s)")
    lines.append(f"  baseline: {tp['baselineRps']:>10.2f}")
    lines.append(f"  rollup:   {tp['rollupRps']:>10.2f}")
    ratio = tp["ratio"]
    lines.append(f"  ratio:    {ratio:>10.2f}x" if ratio is not None else "  ratio:        n/a")
    lines.append("")
    lines.append(f"{'latency':<10}{'baseline ms':>14}{'rollup ms':>14}{'reduction':>12}")
    for row in doc["latency"]:
        red = f"{row['reductionFactor']:.2f}x" if row["reductionFactor"] else "n/a"
        lines.append(
            f"{row['stat']:<10}{row['baselineMs']:>14.2f}{row['rollupMs']:>14.2f}{red:>12}"
        )
    series = doc["settlementSeries"]
    lines.append("")
    lines.append(f"settlement series: {len(series)} committed batches")
    if series:
        lines.append(f"{'batch':>6}{'real':>6}{'proofGenMs':>12}{'uploadMs':>10}{'l1CommitMs':>12}")
        for s in series:
            lines.append(
                f"{s['batch']:>6}{s['realCount']:>6}{s['proofGenMs']:>12.2f}"
                f"{s['uploadMs']:>10.2f}{s['l1CommitMs']:>12.2f}"
            )
    for w in doc["warnings"]:
        lines.append(f"warning: {w}")
    return "\n".join(lines) + "\n"


def write_comparison(doc: dict, out_dir: str | Path) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    json_path = out_dir / "comparison.json"
    json_path.write_text(json.dumps(doc, indent=1) + "\n")
    paths["json"] = json_path

    csv_path = out_dir / "latency-comparison.csv"
    with csv_path.open("w") as f:
        f.write("stat,baseline_ms,rollup_ms,reduction_factor\n")
        for row in doc["latency"]:
            f.write(
                f"{row['stat']},{row['baselineMs']},{row['rollupMs']},{row['reductionFactor']}\n"
            )
    paths["latency_csv"] = csv_path

    series_path = out_dir / "settlement-series.csv"
    with series_path.open("w") as f:
        f.write("batch,real_count,proof_gen_ms,upload_ms,l1_commit_ms\n")
        for s in doc["settlementSeries"]:
            f.write(
                f"{s['batch']},{s['realCount']},{s['proofGenMs']},{s['uploadMs']},{s['l1CommitMs']}\n"
            )
    paths["settlement_csv"] = series_path

    text_path = out_dir / "comparison.txt"
    text_path.write_text(comparison_text(doc))
    paths["text"] = text_path
    return paths


# -- reconciliation -----------------------------------------------------------------


def reconcile(
    accepted: list[dict],
    target: str,
    store_dir: str | Path,
    pool_size: int | None = None,
) -> dict:
    """Match accepted tracking ids against committed batch payloads.

    ``accepted`` rows are the driver's records: {"id", "leaf", "tx"}.
    Batch CIDs are read from the service (``/batch/{n}``), payload bytes from
    the content-addressed store, and each payload transaction is re-encoded
    to its leaf.  Result is ``ok`` only with zero lost and zero duplicated
    ids; ids still in the pool are pending, not lost.
    """
    store = LocalObjectStore(store_dir)
    with httpx.Client(base_url=target, timeout=30.0) as client:
        metrics = client.get("/metrics").json()
        if pool_size is None:
            pool_size = metrics["poolSize"] + metrics["poolInFlight"]
        batches_committed = metrics["batchesCommitted"]

        # committed batch numbers are gapless by the ledger's successor rule
        committed_leaves: dict[int, list[int]] = {}
        for n in range(1, batches_committed + 1):
            resp = client.get(f"/batch/{n}")
            if resp.status_code != 200:
                raise BenchError(f"batch {n} should be committed but /batch returned {resp.status_code}")
            info = resp.json()
            if info["status"] != "committed":
                raise BenchError(f"batch {n} has status {info['status']!r} during reconcile")
            payload = BatchPayload.from_bytes(store.get_bytes(info["cid"]))
            if payload.real_count != info["realCount"]:
                raise BenchError(
                    f"batch {n}: payload realCount {payload.real_count} "
                    f"!= on-chain txCount {info['realCount']}"
                )
            committed_leaves[n] = [leaf_encode(tx) for tx in payload.transactions]

    # multiset reconciliation: each accepted instance must be settled exactly
    # once, so per leaf the committed count must equal the accepted count
    leaf_to_batches: dict[int, list[int]] = {}
    for batch_number, leaves in committed_leaves.items():
        for leaf in leaves:
            leaf_to_batches.setdefault(leaf, []).append(batch_number)

    by_leaf: dict[int, list[str]] = {}
    for row in accepted:
        by_leaf.setdefault(row["leaf"], []).append(row["id"])

    matched, duplicates, missing = [], [], []
    for leaf, ids in by_leaf.items():
        committed_count = len(leaf_to_batches.get(leaf, []))
        if committed_count > len(ids):
            # settled more times than accepted: a real duplication
            duplicates.append(
                {"ids": ids, "batches": leaf_to_batches[leaf], "acceptedCount": len(ids)}
            )
        elif committed_count == len(ids):
            matched.extend(ids)
        else:
            matched.extend(ids[:committed_count])
            missing.extend(ids[committed_count:])

    if len(missing) <= pool_size:
        pending, lost = missing, []
    else:
        pending, lost = [], missing

    ok = not lost and not duplicates
    return {
        "ok": ok,
        "acceptedCount": len(accepted),
        "matchedCount": len(matched),
        "pendingIds": pending,
        "lostIds": lost,
        "duplicates": duplicates,
        "committedBatches": len(committed_leaves),
        "poolSizeAtReconcile": pool_size,
    }
