"""HTTP surface of the sequencer.

Endpoints:

* ``POST /submit``        -> 202 Accepted once the transaction is queued
                             (rollup ingestion; does not wait for settlement)
* ``POST /submit-direct`` -> 200 OK only after the full simulated
                             endorse/order/commit pipeline (baseline path)
* ``GET  /batch/{n}``     -> settlement record joined with on-chain metadata
* ``GET  /health``        -> liveness + worker state
* ``GET  /metrics``       -> counters and stage-timing summaries (JSON)

Error mapping: validation failures 400, duplicate assets 409, pool
back-pressure 503.  Request bodies use the canonical transaction field
names (assetId, participant, assetCid, clientTimestamp).

Run standalone with ``python -m zkrollup.service --config configs/default.json``.
"""

from __future__ import annotations

import argparse
import threading
import time
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .config import RollupStack, build_stack, load_config
from .ledger import EndorsementError, LedgerError
from .pool import PoolBackpressureError
from .sequencer import Sequencer
from .transactions import Transaction, TransactionError


def create_app(sequencer: Sequencer, manage_worker: bool = True) -> FastAPI:
    @asynccontextmanager
    async def lifespan(app: FastAPI):
        # /submit-direct parks one worker thread per in-flight request for
        # seconds; the default AnyIO pool of 40 is too tight for 50 users.
        import anyio.to_thread

        anyio.to_thread.current_default_thread_limiter().total_tokens = 80
        if manage_worker:
            sequencer.start_worker()
        yield
        if manage_worker:
            sequencer.stop_worker()

    app = FastAPI(title="rollup-sequencer", docs_url=None, redoc_url=None, lifespan=lifespan)

    @app.post("/submit", status_code=202)
    async def submit(request: Request):
        try:
            body = await request.json()
        except Exception:
            return JSONResponse({"error": "body must be JSON"}, status_code=400)
        try:
            tx = Transaction.from_wire(body)
            receipt = sequencer.submit(tx)
        except TransactionError as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        except PoolBackpressureError as exc:
            return JSONResponse({"error": str(exc)}, status_code=503)
        return {
            "id": receipt.tracking_id,
            "leaf": receipt.leaf_hex,
            "poolSize": receipt.pool_size,
        }

    @app.post("/submit-direct")
    def submit_direct(body: dict):
        # sync handler on purpose: it blocks for the whole simulated pipeline
        try:
            tx = Transaction.from_wire(body)
            receipt = sequencer.submit_direct(tx)
        except TransactionError as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        except EndorsementError as exc:
            return JSONResponse({"error": str(exc)}, status_code=409)
        except LedgerError as exc:
            return JSONResponse({"error": str(exc)}, status_code=500)
        return {
            "assetId": receipt.key,
            "block": receipt.block_number,
            "latencyMs": round(receipt.latency_ms, 3),
        }

    @app.get("/batch/{n}")
    async def get_batch(n: int):
        found = sequencer.get_batch(n)
        if found is None:
            return JSONResponse({"error": f"no batch {n}"}, status_code=404)
        return found

    @app.get("/health")
    async def health():
        return {
            "status": "ok",
            "workerRunning": sequencer._worker is not None,
            "settlementPaused": sequencer.paused_reason(),
        }

    @app.get("/metrics")
    async def metrics():
        return sequencer.metrics()

    return app


class ServiceHandle:
    """A uvicorn server running in a background thread (tests, demos)."""

    def __init__(self, stack: RollupStack, host: str | None = None, port: int | None = None):
        import uvicorn

        self.stack = stack
        self.host = host or stack.config.service.host
        self.port = port or stack.config.service.port
        app = create_app(stack.sequencer)
        self._server = uvicorn.Server(
            uvicorn.Config(app, host=self.host, port=self.port, log_level="warning")
        )
        self._thread: threading.Thread | None = None

    @property
    def base_url(self) -> str:
        return f"http://{self.host}:{self.port}"

    def start(self, timeout_s: float = 15.0) -> None:
        self._thread = threading.Thread(target=self._server.run, name="uvicorn", daemon=True)
        self._thread.start()
        deadline = time.perf_counter() + timeout_s
        while not self._server.started:
            if time.perf_counter() > deadline:
                raise RuntimeError(f"service did not start on {self.base_url}")
            if not self._thread.is_alive():
                raise RuntimeError("service thread died during startup")
            time.sleep(0.02)

    def stop(self, timeout_s: float = 15.0) -> None:
        self._server.should_exit = True
        if self._thread is not None:
            self._thread.join(timeout=timeout_s)
            self._thread = None
        self.stack.close()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="python -m zkrollup.service", description="Run the rollup sequencer service."
    )
    parser.add_argument("--config", required=True, help="path to the JSON config file")
    parser.add_argument("--host", default=None, help="bind host (overrides config)")
    parser.add_argument("--port", type=int, default=None, help="bind port (overrides config)")
    args = parser.parse_args(argv)

    import uvicorn

    cfg = load_config(args.config)
    stack = build_stack(cfg)
    app = create_app(stack.sequencer)
    host = args.host or cfg.service.host
    port = args.port if args.port is not None else cfg.service.port
    try:
        uvicorn.run(app, host=host, port=port, log_level="info")
    finally:
        stack.close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
