"""Deterministic single-threaded rollup sessions on virtual time.

Drives the whole pipeline -- submission, batching, proving, storage, ledger
commitment -- under a simulated clock and a seeded generator, with no
threads and no wall-clock reads in any committed artifact.  Two sessions
with the same arguments produce byte-identical block logs and identical
per-batch Merkle roots and CIDs; this is the reproducibility harness for
test mode.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from . import proofs
from .clocks import SimulatedClock
from .ledger import LatencyModel, SimulatedLedger
from .pool import TransactionPool
from .sequencer import Sequencer
from .store import BatchStore, InMemoryObjectStore
from .transactions import BATCH_SIZE, random_transaction


@dataclass
class SessionResult:
    block_log_jsonl: str
    roots_hex: list[str]
    cids: list[str]
    state: dict[str, str]
    batches_committed: int
    accepted: int


def run_deterministic_session(
    seed: int = 0,
    tx_count: int = 100,
    inter_arrival_ms: int = 7,
    model: LatencyModel | None = None,
    settle_interval_ms: int = 2000,
) -> SessionResult:
    """One full ingest-and-settle run on the simulated clock."""
    model = model if model is not None else LatencyModel()
    clock = SimulatedClock(0)
    backend = proofs.get_backend("reference")
    material = backend.setup()
    store = BatchStore(InMemoryObjectStore())
    ledger = SimulatedLedger(
        model=model,
        clock=clock,
        verify_proof=lambda proof_bytes, root: proofs.verify_bytes(material, proof_bytes, root),
    )
    pool = TransactionPool(capacity=max(tx_count, 1))
    sequencer = Sequencer(
        pool=pool,
        ledger=ledger,
        store=store,
        proof_backend=backend,
        material=material,
        clock=clock,
        settle_interval_ms=settle_interval_ms,
    )

    rng = random.Random(seed)
    accepted = 0
    for _ in range(tx_count):
        tx = random_transaction(rng, now_ms=clock.now_ms(), tag="sim")
        sequencer.submit(tx)
        accepted += 1
        clock.advance(inter_arrival_ms)
        if pool.size() >= BATCH_SIZE:
            sequencer.settle_once()
    while pool.size() > 0:
        sequencer.settle_once()
    ledger.settle_pending()

    committed = [r for r in sequencer.settlement_records() if r.status == "committed"]
    return SessionResult(
        block_log_jsonl=ledger.export_block_log(),
        roots_hex=[r.merkle_root_hex for r in committed],
        cids=[r.cid for r in committed],
        state=ledger.state_snapshot(),
        batches_committed=len(committed),
        accepted=accepted,
    )
