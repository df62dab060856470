"""FIFO transaction pool between ingestion and settlement.

In-process queue with a bounded depth (submissions beyond it are
back-pressured), safe for many concurrent producers with a single
settlement consumer.  An optional append-only journal makes handoff to
settlement at-least-once across a crash: dequeues are journaled before the
batch leaves the pool and acknowledged only after the batch commits, so
recovery re-queues an in-flight batch at the head.

Journal records, one JSON object per line:

    {"op": "enq", "tx": {...}}    transaction entered the pool
    {"op": "deq", "n": k}         k oldest transactions handed to settlement
    {"op": "ack", "n": k}         that handoff settled; forget it
    {"op": "req", "n": k}         that handoff failed; back at the head

A Redis-protocol pool backend can be selected in config for parity with
deployments that run an external queue; this build does not bundle a Redis
client, so selecting it raises a configuration error.
"""

from __future__ import annotations

import json
import threading
from collections import deque
from pathlib import Path

from .transactions import Transaction


class PoolBackpressureError(Exception):
    """Pool at capacity; submission rejected."""


class PoolConfigError(Exception):
    """Requested pool backend cannot be constructed."""


class TransactionPool:
    def __init__(self, capacity: int = 2048, journal_path: str | Path | None = None):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._queue: deque[Transaction] = deque()
        self._in_flight: list[Transaction] = []
        self._lock = threading.Lock()
        self._not_empty = threading.Condition(self._lock)
        self.enqueued_total = 0
        self.dequeued_total = 0
        self.rejected_total = 0
        self._journal_path = Path(journal_path) if journal_path else None
        self._journal = None
        if self._journal_path:
            self._journal_path.parent.mkdir(parents=True, exist_ok=True)
            if self._journal_path.exists():
                self._recover()
            self._journal = self._journal_path.open("a")

    # -- journal ----------------------------------------------------------------

    def _log(self, record: dict) -> None:
        if self._journal is not None:
            self._journal.write(json.dumps(record, separators=(",", ":")) + "\n")
            self._journal.flush()

    def _recover(self) -> None:
        queue: deque[Transaction] = deque()
        pending: list[Transaction] = []
        with self._journal_path.open() as f:
            for line in f:
                if not line.strip():
                    continue
                record = json.loads(line)
                op = record["op"]
                if op == "enq":
                    queue.append(Transaction.from_wire(record["tx"]))
                elif op == "deq":
                    n = record["n"]
                    pending = [queue.popleft() for _ in range(min(n, len(queue)))]
                elif op == "ack":
                    pending = []
                elif op == "req":
                    queue.extendleft(reversed(pending))
                    pending = []
        # trailing unacknowledged handoff: treat as failed, requeue at head
        queue.extendleft(reversed(pending))
        self._queue = queue

    # -- producer side ------------------------------------------------------------

    def enqueue(self, tx: Transaction) -> int:
        """Append; returns the new pool size.  Raises when at capacity."""
        with self._lock:
            if len(self._queue) >= self.capacity:
                self.rejected_total += 1
                raise PoolBackpressureError(f"pool at capacity ({self.capacity})")
            self._queue.append(tx)
            self.enqueued_total += 1
            self._log({"op": "enq", "tx": tx.to_wire()})
            self._not_empty.notify_all()
            return len(self._queue)

    # -- consumer side (single settlement worker) -----------------------------------

    def dequeue_up_to(self, n: int) -> list[Transaction]:
        """Hand the n oldest transactions to settlement, in arrival order."""
        with self._lock:
            count = min(n, len(self._queue))
            batch = [self._queue.popleft() for _ in range(count)]
            if batch:
                self.dequeued_total += len(batch)
                self._in_flight = list(batch)
                self._log({"op": "deq", "n": len(batch)})
            return batch

    def ack_in_flight(self) -> None:
        """The handed-off batch settled; release it."""
        with self._lock:
            if self._in_flight:
                self._log({"op": "ack", "n": len(self._in_flight)})
                self._in_flight = []

    def requeue_in_flight(self) -> None:
        """The handed-off batch failed; restore it at the head, same order."""
        with self._lock:
            if self._in_flight:
                self._queue.extendleft(reversed(self._in_flight))
                self._log({"op": "req", "n": len(self._in_flight)})
                self._in_flight = []

    # -- inspection ------------------------------------------------------------------

    def size(self) -> int:
        with self._lock:
            return len(self._queue)

    def in_flight_count(self) -> int:
        with self._lock:
            return len(self._in_flight)

    def snapshot(self) -> list[Transaction]:
        with self._lock:
            return list(self._queue)

    def wait_for(self, min_size: int, timeout_s: float) -> bool:
        """Block until the pool holds >= min_size entries, or timeout."""
        with self._not_empty:
            if len(self._queue) >= min_size:
                return True
            self._not_empty.wait(timeout_s)
            return len(self._queue) >= min_size

    def close(self) -> None:
        if self._journal is not None:
            self._journal.close()
            self._journal = None


def build_pool(
    backend: str = "journal",
    capacity: int = 2048,
    journal_path: str | Path | None = None,
) -> TransactionPool:
    """Construct the configured pool backend."""
    if backend == "journal":
        return TransactionPool(capacity=capacity, journal_path=journal_path)
    if backend == "memory":
        return TransactionPool(capacity=capacity, journal_path=None)
    if backend == "redis":
        raise PoolConfigError(
            "the 'redis' pool backend requires a Redis client package and a reachable "
            "server; neither is bundled -- use backend 'journal' or 'memory'"
        )
    raise PoolConfigError(f"unknown pool backend {backend!r}")
