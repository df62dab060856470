"""Content-addressed storage for sealed batch payloads.

The default backend is a local directory holding one file per object,
filename = CID text, so a run is fully hermetic and auditable with ``ls``.
``get`` re-hashes what it reads and refuses to return bytes that no longer
match their name.  An optional backend speaks the HTTP API of an external
IPFS daemon (``/api/v0/add`` and ``/api/v0/cat``) behind the same put/get
contract.

A payload is the JSON the sequencer publishes per batch: the batch number,
the real (non-dummy) transactions in leaf order, the real count, and the
seal timestamp.  Payload JSON is canonical (sorted keys, compact), so equal
batches yield equal bytes and therefore equal CIDs.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass
from pathlib import Path

from .cid import Cid, cid_of, matches, parse_cid
from .transactions import Transaction

PAYLOAD_SCHEMA = "rollup-batch-payload/1"


class StoreError(Exception):
    """Base class for storage failures."""


class NotFoundError(StoreError):
    """No object stored under the requested CID."""


class IntegrityError(StoreError):
    """Stored bytes no longer hash to their CID."""


class PayloadError(ValueError):
    """Batch payload violates its invariants."""


@dataclass(frozen=True)
class BatchPayload:
    batch_number: int
    transactions: tuple[Transaction, ...]
    real_count: int
    created_at: int

    def __post_init__(self) -> None:
        if self.batch_number < 1:
            raise PayloadError("batchNumber must be >= 1")
        if self.real_count != len(self.transactions):
            raise PayloadError("realCount must equal the number of transactions")
        if not 1 <= self.real_count <= 32:
            raise PayloadError("payload must carry 1..32 real transactions")

    def to_bytes(self) -> bytes:
        obj = {
            "batchNumber": self.batch_number,
            "createdAt": self.created_at,
            "realCount": self.real_count,
            "schema": PAYLOAD_SCHEMA,
            "transactions": [tx.to_wire() for tx in self.transactions],
        }
        return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")

    @classmethod
    def from_bytes(cls, data: bytes) -> "BatchPayload":
        try:
            obj = json.loads(data)
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise PayloadError(f"payload is not valid JSON: {exc}") from exc
        if obj.get("schema") != PAYLOAD_SCHEMA:
            raise PayloadError(f"unknown payload schema: {obj.get('schema')!r}")
        txs = tuple(Transaction.from_wire(t) for t in obj["transactions"])
        return cls(
            batch_number=obj["batchNumber"],
            transactions=txs,
            real_count=obj["realCount"],
            created_at=obj["createdAt"],
        )


class LocalObjectStore:
    """Append-only directory of content-addressed objects."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        try:
            self.root.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StoreError(f"cannot create object store at {self.root}: {exc}") from exc

    def _path(self, cid: Cid) -> Path:
        return self.root / cid.text

    def put_bytes(self, data: bytes) -> Cid:
        """Persist ``data`` under its CID; idempotent for equal bytes."""
        cid = cid_of(data)
        path = self._path(cid)
        if path.exists():
            return cid
        tmp = path.with_name(path.name + ".tmp")
        try:
            tmp.write_bytes(data)
            os.replace(tmp, path)
        except OSError as exc:
            raise StoreError(f"write failed for {cid.text}: {exc}") from exc
        return cid

    def get_bytes(self, cid: Cid | str) -> bytes:
        """Exact stored bytes; verifies they still hash to ``cid``."""
        cid = parse_cid(cid) if isinstance(cid, str) else cid
        path = self._path(cid)
        try:
            data = path.read_bytes()
        except FileNotFoundError:
            raise NotFoundError(f"no object stored under {cid.text}") from None
        except OSError as exc:
            raise StoreError(f"read failed for {cid.text}: {exc}") from exc
        if not matches(cid, data):
            raise IntegrityError(f"stored object {cid.text} fails its content hash")
        return data

    def has(self, cid: Cid | str) -> bool:
        cid = parse_cid(cid) if isinstance(cid, str) else cid
        return self._path(cid).exists()

    def object_count(self) -> int:
        return sum(1 for p in self.root.iterdir() if not p.name.endswith(".tmp"))


class InMemoryObjectStore:
    """Dict-backed store for simulations and tests; same contract."""

    def __init__(self) -> None:
        self._objects: dict[str, bytes] = {}

    def put_bytes(self, data: bytes) -> Cid:
        cid = cid_of(data)
        self._objects.setdefault(cid.text, data)
        return cid

    def get_bytes(self, cid: Cid | str) -> bytes:
        cid = parse_cid(cid) if isinstance(cid, str) else cid
        try:
            data = self._objects[cid.text]
        except KeyError:
            raise NotFoundError(f"no object stored under {cid.text}") from None
        if not matches(cid, data):
            raise IntegrityError(f"stored object {cid.text} fails its content hash")
        return data

    def has(self, cid: Cid | str) -> bool:
        cid = parse_cid(cid) if isinstance(cid, str) else cid
        return cid.text in self._objects

    def object_count(self) -> int:
        return len(self._objects)


class IpfsHttpStore:
    """Same contract against a running IPFS daemon's HTTP API.

    Uses ``add?raw-leaves=true&cid-version=1&hash=sha2-256`` so the daemon
    assigns the same CIDs the local scheme computes (payloads are far below
    the chunking threshold); a disagreeing daemon is rejected loudly.
    """

    def __init__(self, api_url: str, timeout: float = 30.0, transport=None):
        import httpx

        self.api_url = api_url.rstrip("/")
        self._client = httpx.Client(base_url=self.api_url, timeout=timeout, transport=transport)

    def put_bytes(self, data: bytes) -> Cid:
        expected = cid_of(data)
        try:
            resp = self._client.post(
                "/api/v0/add",
                params={"raw-leaves": "true", "cid-version": "1", "hash": "sha2-256", "pin": "true"},
                files={"file": ("blob", data)},
            )
            resp.raise_for_status()
            reported = resp.json()["Hash"]
        except Exception as exc:
            raise StoreError(f"IPFS add failed: {exc}") from exc
        if reported != expected.text:
            raise IntegrityError(f"daemon returned CID {reported}, expected {expected.text}")
        return expected

    def get_bytes(self, cid: Cid | str) -> bytes:
        cid = parse_cid(cid) if isinstance(cid, str) else cid
        try:
            resp = self._client.post("/api/v0/cat", params={"arg": cid.text})
        except Exception as exc:
            raise StoreError(f"IPFS cat failed: {exc}") from exc
        if resp.status_code == 500:
            raise NotFoundError(f"daemon has no object {cid.text}")
        if resp.status_code != 200:
            raise StoreError(f"IPFS cat returned HTTP {resp.status_code}")
        data = resp.content
        if not matches(cid, data):
            raise IntegrityError(f"daemon bytes for {cid.text} fail the content hash")
        return data


class BatchStore:
    """Payload-level wrapper: serialize, time the upload, fetch back."""

    def __init__(self, backend: LocalObjectStore | InMemoryObjectStore | IpfsHttpStore):
        self.backend = backend

    def put_payload(self, payload: BatchPayload) -> tuple[Cid, float]:
        """Store a payload; returns (cid, upload duration in ms)."""
        data = payload.to_bytes()
        t0 = time.perf_counter()
        cid = self.backend.put_bytes(data)
        return cid, (time.perf_counter() - t0) * 1000.0

    def get_payload(self, cid: Cid | str) -> BatchPayload:
        return BatchPayload.from_bytes(self.backend.get_bytes(cid))
