"""The Layer-2 sequencer: immediate ingestion, background settlement.

Ingestion (``submit``) validates a transaction, assigns a tracking id, and
enqueues it -- the caller gets its receipt without waiting for anything
on-chain.  ``submit_direct`` is the baseline path that bypasses the rollup
and runs the ledger's full synchronous pipeline.

Settlement (``settle_once``, normally driven by the worker thread) drains up
to 32 transactions, pads them to a full leaf vector, builds the Merkle tree,
proves the root, publishes the payload to the content-addressed store, and
commits the metadata on the simulated ledger.  Each stage is timed and every
attempt is appended to the structured settlement log (one JSON line per
batch attempt).  On a stage failure the real transactions go back to the
head of the pool in their original order; after ``max_batch_retries``
consecutive failures the worker pauses rather than hot-looping, leaving the
transactions safely queued.

One settlement runs at a time; ingestion never blocks on it.
"""

from __future__ import annotations

import json
import statistics
import threading
import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path

from . import field, merkle, proofs
from .clocks import SimulatedClock, WallClock
from .ledger import (
    BATCH_KEY_PREFIX,
    BatchCommitment,
    CommitReceipt,
    KeyNotFoundError,
    LedgerError,
    SimulatedLedger,
)
from .pool import PoolBackpressureError, TransactionPool
from .store import BatchPayload, BatchStore
from .transactions import (
    BATCH_SIZE,
    Transaction,
    TransactionError,
    leaf_encode,
    pad_batch,
    validate_transaction,
)

_STATUS_ORDER = ("sealed", "proved", "stored", "committed")


class SettlementPausedError(Exception):
    """Auto-settlement is paused after repeated failures."""


@dataclass(frozen=True)
class AcceptanceReceipt:
    tracking_id: str
    leaf_hex: str
    pool_size: int


@dataclass
class SettlementRecord:
    """Stage-by-stage outcome of one settlement attempt."""

    batch_number: int
    real_count: int = 0
    merkle_root_hex: str = ""
    cid: str = ""
    seal_ms: float = 0.0
    proof_gen_ms: float = 0.0
    upload_ms: float = 0.0
    l1_commit_ms: float = 0.0
    total_ms: float = 0.0
    status: str = "sealed"
    failed_stage: str = ""
    error: str = ""
    attempt: int = 1
    block_number: int = 0
    tracking_ids: tuple[str, ...] = dc_field(default_factory=tuple)

    def advance(self, status: str) -> None:
        if status == "failed":
            self.status = "failed"
            return
        if self.status == "failed":
            raise ValueError("a failed record cannot advance")
        if _STATUS_ORDER.index(status) < _STATUS_ORDER.index(self.status):
            raise ValueError(f"status may only move forward, not {self.status} -> {status}")
        self.status = status

    def to_log_line(self, ts_ms: int) -> dict:
        line = {
            "ts": ts_ms,
            "batch": self.batch_number,
            "realCount": self.real_count,
            "merkleRoot": self.merkle_root_hex,
            "cid": self.cid,
            "sealMs": round(self.seal_ms, 3),
            "proofGenMs": round(self.proof_gen_ms, 3),
            "uploadMs": round(self.upload_ms, 3),
            "l1CommitMs": round(self.l1_commit_ms, 3),
            "totalMs": round(self.total_ms, 3),
            "status": self.status,
            "attempt": self.attempt,
        }
        if self.status == "failed":
            line["stage"] = self.failed_stage
            line["error"] = self.error
        return line


class Sequencer:
    def __init__(
        self,
        pool: TransactionPool,
        ledger: SimulatedLedger,
        store: BatchStore,
        proof_backend,
        material: proofs.ProvingKeyMaterial,
        clock: WallClock | SimulatedClock | None = None,
        settle_interval_ms: int = 2000,
        batch_size: int = BATCH_SIZE,
        max_batch_retries: int = 3,
        settlement_log_path: str | Path | None = None,
    ):
        if batch_size != BATCH_SIZE:
            raise ValueError(f"batch size is fixed at {BATCH_SIZE}")
        self.pool = pool
        self.ledger = ledger
        self.store = store
        self.backend = proof_backend
        self.material = material
        self.clock = clock if clock is not None else WallClock()
        self.settle_interval_ms = settle_interval_ms
        self.max_batch_retries = max_batch_retries

        self._id_lock = threading.Lock()
        self._next_tracking = 1

        self._settle_lock = threading.Lock()
        self._records: list[SettlementRecord] = []
        self._latest_by_number: dict[int, SettlementRecord] = {}
        self._committed: dict[int, SettlementRecord] = {}
        self._consecutive_failures = 0
        self._paused_reason: str | None = None

        self.accepted_total = 0
        self.rejected_validation = 0
        self.rejected_backpressure = 0
        self.direct_committed = 0
        self.direct_rejected = 0

        self._log_path = Path(settlement_log_path) if settlement_log_path else None
        if self._log_path:
            self._log_path.parent.mkdir(parents=True, exist_ok=True)
            self._log_path.write_text("")

        self._worker: threading.Thread | None = None
        self._stop = threading.Event()

    # -- ingestion -------------------------------------------------------------

    def submit(self, tx: Transaction) -> AcceptanceReceipt:
        """Validate and enqueue; returns immediately with a tracking id."""
        try:
            validate_transaction(tx)
        except TransactionError:
            self.rejected_validation += 1
            raise
        leaf = leaf_encode(tx)
        try:
            size = self.pool.enqueue(tx)
        except PoolBackpressureError:
            self.rejected_backpressure += 1
            raise
        with self._id_lock:
            tracking_id = f"t-{self._next_tracking:08d}"
            self._next_tracking += 1
            self.accepted_total += 1
        return AcceptanceReceipt(tracking_id=tracking_id, leaf_hex=field.to_hex(leaf), pool_size=size)

    def submit_direct(self, tx: Transaction) -> CommitReceipt:
        """Baseline path: synchronous asset creation through the ledger."""
        validate_transaction(tx)
        try:
            receipt = self.ledger.create_asset(tx.asset_id, tx.participant, tx.asset_cid)
        except LedgerError:
            self.direct_rejected += 1
            raise
        self.direct_committed += 1
        return receipt

    # -- settlement ---------------------------------------------------------------

    def settle_once(self) -> SettlementRecord | None:
        """Run one settlement cycle; returns None when the pool is empty."""
        with self._settle_lock:
            batch_number = self.ledger.next_batch_number()
            txs = self.pool.dequeue_up_to(BATCH_SIZE)
            if not txs:
                return None
            record = SettlementRecord(batch_number=batch_number, real_count=len(txs))
            record.attempt = self._consecutive_failures + 1
            t_start = time.perf_counter()
            stage = "seal"
            try:
                draft = pad_batch(txs)
                tree = merkle.build_tree(draft.leaves)
                record.merkle_root_hex = field.to_hex(tree.root)
                record.seal_ms = (time.perf_counter() - t_start) * 1000.0
                record.advance("sealed")

                stage = "prove"
                statement = proofs.RollupStatement(public_root=tree.root, leaves=draft.leaves)
                proof = self.backend.prove(self.material, statement)
                record.proof_gen_ms = float(proof.prover_time_ms)
                record.advance("proved")

                stage = "store"
                payload = BatchPayload(
                    batch_number=batch_number,
                    transactions=tuple(txs),
                    real_count=len(txs),
                    created_at=self.clock.epoch_ms(),
                )
                cid, upload_ms = self.store.put_payload(payload)
                record.cid = cid.text
                record.upload_ms = upload_ms
                record.advance("stored")

                stage = "commit"
                commitment = BatchCommitment(
                    batch_number=batch_number,
                    merkle_root=tree.root,
                    ipfs_cid=cid.text,
                    tx_count=len(txs),
                    proof_bytes=proof.proof_bytes,
                )
                t_commit = time.perf_counter()
                l1_receipt = self.ledger.commit_batch(commitment)
                record.l1_commit_ms = (time.perf_counter() - t_commit) * 1000.0
                if isinstance(self.clock, SimulatedClock):
                    record.l1_commit_ms = float(l1_receipt.latency_ms)
                record.block_number = l1_receipt.block_number
                record.advance("committed")

                self.pool.ack_in_flight()
                self._consecutive_failures = 0
            except Exception as exc:
                self.pool.requeue_in_flight()
                record.failed_stage = stage
                record.error = f"{type(exc).__name__}: {exc}"
                record.advance("failed")
                self._consecutive_failures += 1
                if self._consecutive_failures >= self.max_batch_retries:
                    self._paused_reason = (
                        f"settlement paused after {self._consecutive_failures} consecutive "
                        f"failures at stage {stage!r}: {record.error}"
                    )
            record.total_ms = (time.perf_counter() - t_start) * 1000.0
            self._records.append(record)
            self._latest_by_number[record.batch_number] = record
            if record.status == "committed":
                self._committed[record.batch_number] = record
            self._write_log(record)
            return record

    def _write_log(self, record: SettlementRecord) -> None:
        if self._log_path:
            line = record.to_log_line(ts_ms=self.clock.epoch_ms())
            with self._log_path.open("a") as f:
                f.write(json.dumps(line, sort_keys=True, separators=(",", ":")) + "\n")

    # -- background worker ---------------------------------------------------------

    def start_worker(self) -> None:
        if self._worker is not None:
            return
        self._stop.clear()
        self._worker = threading.Thread(target=self._worker_loop, name="settlement", daemon=True)
        self._worker.start()

    def stop_worker(self, timeout_s: float = 30.0) -> None:
        if self._worker is None:
            return
        self._stop.set()
        self._worker.join(timeout=timeout_s)
        self._worker = None

    def resume(self) -> None:
        """Clear a failure pause (after fixing the underlying backend)."""
        self._consecutive_failures = 0
        self._paused_reason = None

    def _worker_loop(self) -> None:
        last_settle = time.perf_counter()
        while not self._stop.is_set():
            if self._paused_reason is not None:
                self._stop.wait(0.2)
                continue
            interval_s = self.settle_interval_ms / 1000.0
            full = self.pool.wait_for(BATCH_SIZE, timeout_s=0.05)
            elapsed = time.perf_counter() - last_settle
            if full or (self.pool.size() > 0 and elapsed >= interval_s):
                self.settle_once()
                last_settle = time.perf_counter()

    # -- queries ----------------------------------------------------------------------

    def paused_reason(self) -> str | None:
        return self._paused_reason

    def settlement_records(self) -> list[SettlementRecord]:
        return list(self._records)

    def get_batch(self, batch_number: int) -> dict | None:
        """Sequencer record joined with the on-chain commitment, or None.

        A batch whose attempts all failed is reported with its failed record
        and ``onChain: None``.
        """
        record = self._latest_by_number.get(batch_number)
        if record is None:
            return None
        try:
            onchain = self.ledger.query_json(f"{BATCH_KEY_PREFIX}{batch_number}")
        except KeyNotFoundError:
            onchain = None
        if record.status != "committed" and onchain is not None:
            record = self._committed.get(batch_number, record)
        return {
            "batch": record.batch_number,
            "realCount": record.real_count,
            "merkleRoot": record.merkle_root_hex,
            "cid": record.cid,
            "status": record.status,
            "timings": {
                "sealMs": record.seal_ms,
                "proofGenMs": record.proof_gen_ms,
                "uploadMs": record.upload_ms,
                "l1CommitMs": record.l1_commit_ms,
                "totalMs": record.total_ms,
            },
            "onChain": onchain,
        }

    def metrics(self) -> dict:
        committed = [r for r in self._records if r.status == "committed"]
        failed = [r for r in self._records if r.status == "failed"]

        def summary(values: list[float]) -> dict:
            if not values:
                return {"count": 0}
            return {
                "count": len(values),
                "meanMs": round(statistics.fmean(values), 3),
                "minMs": round(min(values), 3),
                "maxMs": round(max(values), 3),
                "p50Ms": round(statistics.median(values), 3),
            }

        return {
            "accepted": self.accepted_total,
            "rejectedValidation": self.rejected_validation,
            "rejectedBackpressure": self.rejected_backpressure,
            "directCommitted": self.direct_committed,
            "directRejected": self.direct_rejected,
            "poolSize": self.pool.size(),
            "poolInFlight": self.pool.in_flight_count(),
            "poolEnqueuedTotal": self.pool.enqueued_total,
            "poolDequeuedTotal": self.pool.dequeued_total,
            "batchesCommitted": len(committed),
            "batchesFailed": len(failed),
            "settlementPaused": self._paused_reason,
            "stageTimings": {
                "sealMs": summary([r.seal_ms for r in committed]),
                "proofGenMs": summary([r.proof_gen_ms for r in committed]),
                "uploadMs": summary([r.upload_ms for r in committed]),
                "l1CommitMs": summary([r.l1_commit_ms for r in committed]),
            },
        }

    def drain(self, timeout_s: float = 300.0) -> bool:
        """Settle until the pool is empty; True if fully drained."""
        deadline = time.perf_counter() + timeout_s
        while time.perf_counter() < deadline:
            if self._paused_reason is not None:
                return False
            if self.pool.size() == 0 and self.pool.in_flight_count() == 0:
                return True
            if self._worker is None:
                if self.settle_once() is None and self.pool.size() == 0:
                    return True
            else:
                time.sleep(0.05)
        return self.pool.size() == 0 and self.pool.in_flight_count() == 0
