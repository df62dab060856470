"""Configuration file format and stack assembly.

One JSON file configures the whole service; see ``configs/default.json``
for the paper-calibrated profile.  Relative paths are resolved against the
config file's directory (or an explicit base directory).

    {
      "sequencer": {
        "poolBackend":      "journal" | "memory" | "redis",
        "poolCapacity":     2048,
        "poolJournalPath":  "data/pool-journal.jsonl",
        "settleIntervalMs": 2000,
        "batchSize":        32,            # fixed; loader rejects any other value
        "proofBackend":     "reference",   # "snark" requires an external plugin
        "maxBatchRetries":  3,
        "settlementLogPath":"data/settlement.jsonl"
      },
      "store":   { "backend": "local" | "ipfs", "path": "data/objects",
                   "ipfsApiUrl": "http://127.0.0.1:5001" },
      "ledger":  { "latency": { "endorseMs": 150, "orderMs": 100, "commitMs": 250,
                                "blockIntervalMs": 1000, "maxTxPerBlock": 6 },
                   "blockLogPath": "data/blocks.jsonl" },
      "service": { "host": "127.0.0.1", "port": 8545 }
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from pathlib import Path

from . import proofs
from .clocks import SimulatedClock, WallClock
from .ledger import LatencyModel, SimulatedLedger
from .pool import build_pool
from .sequencer import Sequencer
from .store import BatchStore, IpfsHttpStore, LocalObjectStore
from .transactions import BATCH_SIZE


class ConfigError(Exception):
    """Config file missing, malformed, or inconsistent."""


@dataclass(frozen=True)
class SequencerConfig:
    pool_backend: str = "journal"
    pool_capacity: int = 2048
    pool_journal_path: str | None = "data/pool-journal.jsonl"
    settle_interval_ms: int = 2000
    batch_size: int = BATCH_SIZE
    proof_backend: str = "reference"
    max_batch_retries: int = 3
    settlement_log_path: str | None = "data/settlement.jsonl"


@dataclass(frozen=True)
class StoreConfig:
    backend: str = "local"
    path: str = "data/objects"
    ipfs_api_url: str = ""


@dataclass(frozen=True)
class LedgerConfig:
    latency: LatencyModel = dc_field(default_factory=LatencyModel)
    block_log_path: str | None = "data/blocks.jsonl"


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8545


@dataclass(frozen=True)
class Config:
    sequencer: SequencerConfig = dc_field(default_factory=SequencerConfig)
    store: StoreConfig = dc_field(default_factory=StoreConfig)
    ledger: LedgerConfig = dc_field(default_factory=LedgerConfig)
    service: ServiceConfig = dc_field(default_factory=ServiceConfig)
    base_dir: Path = dc_field(default_factory=Path.cwd)

    def resolve(self, path: str | None) -> Path | None:
        if path is None or path == "":
            return None
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p


def load_config(path: str | Path) -> Config:
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    return config_from_dict(obj, base_dir=path.resolve().parent)


def config_from_dict(obj: dict, base_dir: str | Path | None = None) -> Config:
    seq = obj.get("sequencer", {})
    sto = obj.get("store", {})
    led = obj.get("ledger", {})
    svc = obj.get("service", {})
    cfg = Config(
        sequencer=SequencerConfig(
            pool_backend=seq.get("poolBackend", "journal"),
            pool_capacity=seq.get("poolCapacity", 2048),
            pool_journal_path=seq.get("poolJournalPath", "data/pool-journal.jsonl"),
            settle_interval_ms=seq.get("settleIntervalMs", 2000),
            batch_size=seq.get("batchSize", BATCH_SIZE),
            proof_backend=seq.get("proofBackend", "reference"),
            max_batch_retries=seq.get("maxBatchRetries", 3),
            settlement_log_path=seq.get("settlementLogPath", "data/settlement.jsonl"),
        ),
        store=StoreConfig(
            backend=sto.get("backend", "local"),
            path=sto.get("path", "data/objects"),
            ipfs_api_url=sto.get("ipfsApiUrl", ""),
        ),
        ledger=LedgerConfig(
            latency=LatencyModel.from_dict(led.get("latency", {})),
            block_log_path=led.get("blockLogPath", "data/blocks.jsonl"),
        ),
        service=ServiceConfig(
            host=svc.get("host", "127.0.0.1"),
            port=svc.get("port", 8545),
        ),
        base_dir=Path(base_dir) if base_dir else Path.cwd(),
    )
    if cfg.sequencer.batch_size != BATCH_SIZE:
        raise ConfigError(f"batchSize is fixed at {BATCH_SIZE} (circuit shape is constant)")
    if cfg.store.backend not in ("local", "ipfs"):
        raise ConfigError(f"unknown store backend {cfg.store.backend!r}")
    if cfg.store.backend == "ipfs" and not cfg.store.ipfs_api_url:
        raise ConfigError("store backend 'ipfs' requires ipfsApiUrl")
    return cfg


@dataclass
class RollupStack:
    """All wired components of one sequencer process."""

    config: Config
    pool: object
    store: BatchStore
    ledger: SimulatedLedger
    sequencer: Sequencer

    def close(self) -> None:
        self.sequencer.stop_worker()
        close = getattr(self.pool, "close", None)
        if close:
            close()


def build_stack(cfg: Config, clock: WallClock | SimulatedClock | None = None) -> RollupStack:
    """Construct pool, store, ledger, and sequencer from a config."""
    clock = clock if clock is not None else WallClock()

    pool = build_pool(
        backend=cfg.sequencer.pool_backend,
        capacity=cfg.sequencer.pool_capacity,
        journal_path=cfg.resolve(cfg.sequencer.pool_journal_path),
    )

    if cfg.store.backend == "ipfs":
        backend = IpfsHttpStore(cfg.store.ipfs_api_url)
    else:
        backend = LocalObjectStore(cfg.resolve(cfg.store.path))
    store = BatchStore(backend)

    proof_backend = proofs.get_backend(cfg.sequencer.proof_backend)
    material = proof_backend.setup()

    ledger = SimulatedLedger(
        model=cfg.ledger.latency,
        clock=clock,
        verify_proof=lambda proof_bytes, root: proofs.verify_bytes(material, proof_bytes, root),
        block_log_path=cfg.resolve(cfg.ledger.block_log_path),
    )

    sequencer = Sequencer(
        pool=pool,
        ledger=ledger,
        store=store,
        proof_backend=proof_backend,
        material=material,
        clock=clock,
        settle_interval_ms=cfg.sequencer.settle_interval_ms,
        batch_size=cfg.sequencer.batch_size,
        max_batch_retries=cfg.sequencer.max_batch_retries,
        settlement_log_path=cfg.resolve(cfg.sequencer.settlement_log_path),
    )
    return RollupStack(config=cfg, pool=pool, store=store, ledger=ledger, sequencer=sequencer)
