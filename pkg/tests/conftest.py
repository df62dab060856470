from __future__ import annotations

import random
import socket
import threading
import time

import pytest

from zkrollup import proofs
from zkrollup.clocks import SimulatedClock
from zkrollup.ledger import LatencyModel, SimulatedLedger
from zkrollup.pool import TransactionPool
from zkrollup.sequencer import Sequencer
from zkrollup.store import BatchStore, InMemoryObjectStore
from zkrollup.transactions import random_transaction


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def make_stack(
    model: LatencyModel | None = None,
    clock=None,
    capacity: int = 4096,
    backend=None,
    settle_interval_ms: int = 2000,
    max_batch_retries: int = 3,
    settlement_log_path=None,
):
    """In-process stack on an in-memory store; defaults to simulated time."""
    clock = clock if clock is not None else SimulatedClock(0)
    model = model if model is not None else LatencyModel()
    if backend is None:
        backend = proofs.get_backend("reference")
    material = backend.setup()
    store = BatchStore(InMemoryObjectStore())
    ledger = SimulatedLedger(
        model=model,
        clock=clock,
        verify_proof=lambda pb, r: proofs.verify_bytes(material, pb, r),
    )
    pool = TransactionPool(capacity=capacity)
    sequencer = Sequencer(
        pool=pool,
        ledger=ledger,
        store=store,
        proof_backend=backend,
        material=material,
        clock=clock,
        settle_interval_ms=settle_interval_ms,
        max_batch_retries=max_batch_retries,
        settlement_log_path=settlement_log_path,
    )
    return clock, pool, store, ledger, sequencer


class AsgiServer:
    """Any ASGI app on a real localhost port, for HTTP-level tests."""

    def __init__(self, app):
        import uvicorn

        self.port = free_port()
        self._server = uvicorn.Server(
            uvicorn.Config(app, host="127.0.0.1", port=self.port, log_level="error")
        )
        self._thread = threading.Thread(target=self._server.run, daemon=True)

    @property
    def base_url(self) -> str:
        return f"http://127.0.0.1:{self.port}"

    def __enter__(self) -> "AsgiServer":
        self._thread.start()
        deadline = time.perf_counter() + 15
        while not self._server.started:
            if time.perf_counter() > deadline or not self._thread.is_alive():
                raise RuntimeError("ASGI test server failed to start")
            time.sleep(0.02)
        return self

    def __exit__(self, *exc) -> None:
        self._server.should_exit = True
        self._thread.join(timeout=10)


@pytest.fixture
def rng() -> random.Random:
    return random.Random(0xC0FFEE)


def make_txs(rng: random.Random, n: int, now_ms: int = 0, tag: str = "t"):
    return [random_transaction(rng, now_ms=now_ms, tag=tag) for _ in range(n)]
