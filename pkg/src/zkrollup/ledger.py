"""Simulated permissioned ledger: endorse -> order -> validate/commit.

Stands in for a Fabric-style network: a key-value world state behind two
chaincode-like entry points (``create_asset``, ``commit_batch``), with the
three-phase commit pipeline modeled as configured delays and an ordering
service that cuts blocks on a fixed interval with bounded block size.

The pipeline is pure arithmetic over submission times, shared by both clock
modes: a transaction submitted at ``s`` finishes endorsement at
``s + endorse_ms``, becomes orderable at ``+ order_ms``, joins the first
block cut at or after that instant with spare capacity (cuts land on
multiples of ``block_interval_ms`` from genesis), and commits
``commit_ms`` after its cut.  Under the wall clock the submitter actually
sleeps until that moment; under the simulated clock time jumps.  Either way
the block log records the computed schedule, so test-mode runs are
bit-identical across processes.

Sustained direct-commit throughput is therefore bounded near
``max_tx_per_block / block_interval_ms`` -- the consensus ceiling the
rollup path exists to bypass.

State changes only ever happen by applying a cut block at its commit time;
rejected submissions (duplicate asset, bad proof, out-of-order batch
number) never reach the ordering service and leave state untouched.  The
block log replays to an identical world state.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from . import field
from .cid import is_cid_text
from .clocks import SimulatedClock, WallClock

BATCH_KEY_PREFIX = "BATCH_"


class LedgerError(Exception):
    """Base class for simulated-chaincode failures."""


class EndorsementError(LedgerError):
    """Submission rejected during endorsement; no state change."""


class ProofRejectedError(EndorsementError):
    """Batch commitment carried a proof that failed verification."""


class BatchSequenceError(EndorsementError):
    """Batch number is a replay or skips ahead."""


class KeyNotFoundError(LedgerError):
    """World-state key has no value."""


@dataclass(frozen=True)
class LatencyModel:
    """Configured stand-in for the endorse/order/validate pipeline."""

    endorse_ms: int = 150
    order_ms: int = 100
    commit_ms: int = 250
    block_interval_ms: int = 1000
    max_tx_per_block: int = 6

    def __post_init__(self) -> None:
        for name in ("endorse_ms", "order_ms", "commit_ms", "block_interval_ms"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.max_tx_per_block < 1:
            raise ValueError("max_tx_per_block must be >= 1")

    @classmethod
    def from_dict(cls, obj: dict) -> "LatencyModel":
        return cls(
            endorse_ms=obj.get("endorseMs", cls.endorse_ms),
            order_ms=obj.get("orderMs", cls.order_ms),
            commit_ms=obj.get("commitMs", cls.commit_ms),
            block_interval_ms=obj.get("blockIntervalMs", cls.block_interval_ms),
            max_tx_per_block=obj.get("maxTxPerBlock", cls.max_tx_per_block),
        )

    def to_dict(self) -> dict:
        return {
            "endorseMs": self.endorse_ms,
            "orderMs": self.order_ms,
            "commitMs": self.commit_ms,
            "blockIntervalMs": self.block_interval_ms,
            "maxTxPerBlock": self.max_tx_per_block,
        }


@dataclass(frozen=True)
class BatchCommitment:
    """The on-chain metadata record for one sealed batch."""

    batch_number: int
    merkle_root: int
    ipfs_cid: str
    tx_count: int
    proof_bytes: bytes

    def __post_init__(self) -> None:
        if not 1 <= self.tx_count <= 32:
            raise ValueError("txCount must be in [1, 32]")
        field.check_element(self.merkle_root)
        if not is_cid_text(self.ipfs_cid):
            raise ValueError(f"ipfsCid is not valid CID text: {self.ipfs_cid!r}")

    def record(self, committed_at: int) -> dict:
        return {
            "batchNumber": self.batch_number,
            "committedAt": committed_at,
            "ipfsCid": self.ipfs_cid,
            "merkleRoot": field.to_hex(self.merkle_root),
            "proofBytes": self.proof_bytes.hex(),
            "txCount": self.tx_count,
        }


@dataclass(frozen=True)
class CommitReceipt:
    key: str
    block_number: int
    submitted_ms: float
    committed_ms: float

    @property
    def latency_ms(self) -> float:
        return self.committed_ms - self.submitted_ms


@dataclass
class _PendingBlock:
    number: int
    cut_ms: float
    commit_ms: float
    entries: list  # (key, value_text)


class SimulatedLedger:
    """One logical peer + orderer with deterministic scheduling."""

    def __init__(
        self,
        model: LatencyModel,
        clock: WallClock | SimulatedClock | None = None,
        verify_proof: Callable[[bytes, int], bool] | None = None,
        block_log_path: str | Path | None = None,
    ):
        self.model = model
        self.clock = clock if clock is not None else WallClock()
        self._verify_proof = verify_proof
        self._lock = threading.Lock()
        self._genesis_ms = self.clock.now_ms()
        self._state: dict[str, str] = {}
        self._reserved: set[str] = set()
        self._pending: list[_PendingBlock] = []
        self._blocks_by_number: dict[int, _PendingBlock] = {}
        self._degenerate_block_seq = 0
        self._next_batch_number = 1
        self._committed_blocks: list[dict] = []
        self._committed_tx_count = 0
        self._log_path = Path(block_log_path) if block_log_path else None
        if self._log_path:
            self._log_path.parent.mkdir(parents=True, exist_ok=True)
            self._log_path.write_text("")

    # -- scheduling core -----------------------------------------------------

    def _schedule(
        self, key: str, value_factory: Callable[[int], str], now: float
    ) -> tuple[int, float]:
        """Place one entry into the ordering schedule.

        ``value_factory(commit_ms)`` produces the committed value text once
        the commit time is known.  Returns (block number, commit time).
        Caller holds the lock.
        """
        ready = now + self.model.endorse_ms + self.model.order_ms
        interval = self.model.block_interval_ms
        if interval == 0:
            # degenerate ordering: every tx cuts its own immediate block
            self._degenerate_block_seq += 1
            commit_ms = ready + self.model.commit_ms
            block = _PendingBlock(
                number=self._degenerate_block_seq,
                cut_ms=ready,
                commit_ms=commit_ms,
                entries=[(key, value_factory(round(commit_ms)))],
            )
            self._pending.append(block)
            return block.number, commit_ms

        k = max(1, math.ceil((ready - self._genesis_ms) / interval))
        while True:
            cut = self._genesis_ms + k * interval
            if cut < ready:
                k += 1
                continue
            block = self._blocks_by_number.get(k)
            if block is None:
                block = _PendingBlock(
                    number=k, cut_ms=cut, commit_ms=cut + self.model.commit_ms, entries=[]
                )
                self._blocks_by_number[k] = block
                self._pending.append(block)
            if len(block.entries) < self.model.max_tx_per_block:
                block.entries.append((key, value_factory(round(block.commit_ms))))
                return block.number, block.commit_ms
            k += 1

    def _apply_due(self, now: float) -> None:
        """Commit every pending block whose commit time has passed."""
        due = [b for b in self._pending if b.commit_ms <= now]
        if not due:
            return
        due.sort(key=lambda b: (b.commit_ms, b.number))
        applied = set()
        for block in due:
            for key, value_text in block.entries:
                self._state[key] = value_text
            self._committed_tx_count += len(block.entries)
            record = {
                "block": block.number,
                "cutMs": round(block.cut_ms),
                "commitMs": round(block.commit_ms),
                "entries": [{"key": k, "value": v} for k, v in block.entries],
            }
            self._committed_blocks.append(record)
            if self._log_path:
                with self._log_path.open("a") as f:
                    f.write(json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n")
            applied.add(id(block))
            self._blocks_by_number.pop(block.number, None)
        self._pending = [b for b in self._pending if id(b) not in applied]

    # -- chaincode-style entry points ------------------------------------------

    def submit_create_asset(self, asset_id: str, participant: str, asset_cid: str) -> CommitReceipt:
        """Endorse + schedule an asset creation; returns without waiting."""
        if not asset_id or not participant:
            raise EndorsementError("assetId and participant must be non-empty")
        if asset_id.startswith(BATCH_KEY_PREFIX):
            raise EndorsementError(f"assetId prefix {BATCH_KEY_PREFIX!r} is reserved")
        if not is_cid_text(asset_cid):
            raise EndorsementError(f"assetCid is not valid CID text: {asset_cid!r}")

        def make_record(committed_at: int) -> str:
            record = {
                "assetCid": asset_cid,
                "assetId": asset_id,
                "createdAt": committed_at,
                "participant": participant,
            }
            return json.dumps(record, sort_keys=True, separators=(",", ":"))

        with self._lock:
            now = self.clock.now_ms()
            self._apply_due(now)
            if asset_id in self._state or asset_id in self._reserved:
                raise EndorsementError(f"asset {asset_id!r} already exists")
            block_number, commit_ms = self._schedule(asset_id, make_record, now)
            self._reserved.add(asset_id)
            return CommitReceipt(
                key=asset_id, block_number=block_number, submitted_ms=now, committed_ms=commit_ms
            )

    def create_asset(self, asset_id: str, participant: str, asset_cid: str) -> CommitReceipt:
        """Full synchronous path: endorse, order, wait for commit."""
        receipt = self.submit_create_asset(asset_id, participant, asset_cid)
        self.clock.sleep_until(receipt.committed_ms)
        with self._lock:
            self._apply_due(self.clock.now_ms())
        return receipt

    def submit_commit_batch(self, commitment: BatchCommitment) -> CommitReceipt:
        """Endorse + schedule a batch commitment; proof gate runs here."""
        if self._verify_proof is None:
            raise LedgerError("ledger was built without a proof verifier")
        if not self._verify_proof(commitment.proof_bytes, commitment.merkle_root):
            raise ProofRejectedError(
                f"proof for batch {commitment.batch_number} failed verification; nothing written"
            )
        key = f"{BATCH_KEY_PREFIX}{commitment.batch_number}"

        def make_record(committed_at: int) -> str:
            return json.dumps(
                commitment.record(committed_at), sort_keys=True, separators=(",", ":")
            )

        with self._lock:
            now = self.clock.now_ms()
            self._apply_due(now)
            if commitment.batch_number != self._next_batch_number:
                raise BatchSequenceError(
                    f"expected batch number {self._next_batch_number}, got {commitment.batch_number}"
                )
            block_number, commit_ms = self._schedule(key, make_record, now)
            self._next_batch_number += 1
            return CommitReceipt(
                key=key, block_number=block_number, submitted_ms=now, committed_ms=commit_ms
            )

    def commit_batch(self, commitment: BatchCommitment) -> CommitReceipt:
        """Synchronous batch commitment (the settlement loop's L1 call)."""
        receipt = self.submit_commit_batch(commitment)
        self.clock.sleep_until(receipt.committed_ms)
        with self._lock:
            self._apply_due(self.clock.now_ms())
        return receipt

    def query(self, key: str) -> bytes:
        """Current world-state value; only fully committed blocks are visible."""
        with self._lock:
            self._apply_due(self.clock.now_ms())
            try:
                return self._state[key].encode("utf-8")
            except KeyError:
                raise KeyNotFoundError(f"no value for key {key!r}") from None

    def query_json(self, key: str) -> dict:
        return json.loads(self.query(key))

    # -- inspection -------------------------------------------------------------

    def next_batch_number(self) -> int:
        return self._next_batch_number

    def settle_pending(self) -> None:
        """Advance past every scheduled commit (used when draining)."""
        with self._lock:
            deadline = max((b.commit_ms for b in self._pending), default=None)
        if deadline is not None:
            self.clock.sleep_until(deadline)
        with self._lock:
            self._apply_due(self.clock.now_ms())

    def block_log(self) -> list[dict]:
        with self._lock:
            self._apply_due(self.clock.now_ms())
            return json.loads(json.dumps(self._committed_blocks))

    def export_block_log(self) -> str:
        """Block log as JSON lines (the audit export format)."""
        return "".join(
            json.dumps(b, sort_keys=True, separators=(",", ":")) + "\n" for b in self.block_log()
        )

    def state_snapshot(self) -> dict[str, str]:
        with self._lock:
            self._apply_due(self.clock.now_ms())
            return dict(self._state)

    def committed_tx_count(self) -> int:
        with self._lock:
            self._apply_due(self.clock.now_ms())
            return self._committed_tx_count


def replay_block_log(lines: str | list[dict]) -> dict[str, str]:
    """Rebuild the world state by replaying an exported block log."""
    if isinstance(lines, str):
        records = [json.loads(line) for line in lines.splitlines() if line.strip()]
    else:
        records = lines
    state: dict[str, str] = {}
    last_commit = -1.0
    for record in records:
        if record["commitMs"] < last_commit:
            raise LedgerError("block log is out of commit order")
        last_commit = record["commitMs"]
        for entry in record["entries"]:
            state[entry["key"]] = entry["value"]
    return state
