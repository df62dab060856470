"""Transaction model: canonical serialization, leaf encoding, batch padding.

A transaction is an asset-creation request: an asset id, the submitting
participant, a content identifier pointing at the off-chain asset data, and
the client's submission timestamp.

Canonical JSON is the auditable wire form.  Keys are serialized in
alphabetical order with compact separators and UTF-8 -- for this flat
object that is exactly RFC 8785 (JCS), so any JCS library reproduces the
bytes:

    {"assetCid":"...","assetId":"...","clientTimestamp":123,"participant":"..."}

A transaction's Merkle leaf is sha256 of those bytes reduced into the field:

    leaf = int.from_bytes(sha256(canonical_bytes(tx)), 'big') mod P

Batches are always 32 leaves; short batches are padded with the public dummy
leaf, the leaf encoding of the reserved sentinel transaction
(assetId "DUMMY", participant "DUMMY", assetCid cid_of(b"DUMMY"),
clientTimestamp 0).  Anyone holding the real transactions and this constant
can rebuild the padded leaf vector and recompute the batch root.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass

from . import field
from .cid import cid_of, is_cid_text

BATCH_SIZE = 32

MAX_ID_LENGTH = 256

# Reserved sentinel: real transactions must not use this asset id.
DUMMY_ASSET_ID = "DUMMY"


class TransactionError(ValueError):
    """Transaction fails validation; serialization is refused."""


class BatchSizeError(ValueError):
    """A batch draft would be empty or exceed 32 transactions."""


@dataclass(frozen=True)
class Transaction:
    asset_id: str
    participant: str
    asset_cid: str
    client_timestamp: int

    def to_wire(self) -> dict:
        """The JSON-facing field names, in canonical (alphabetical) order."""
        return {
            "assetCid": self.asset_cid,
            "assetId": self.asset_id,
            "clientTimestamp": self.client_timestamp,
            "participant": self.participant,
        }

    @classmethod
    def from_wire(cls, obj: dict) -> "Transaction":
        if not isinstance(obj, dict):
            raise TransactionError("transaction body must be a JSON object")
        extra = set(obj) - {"assetCid", "assetId", "clientTimestamp", "participant"}
        if extra:
            raise TransactionError(f"unknown transaction fields: {sorted(extra)}")
        try:
            tx = cls(
                asset_id=obj["assetId"],
                participant=obj["participant"],
                asset_cid=obj["assetCid"],
                client_timestamp=obj["clientTimestamp"],
            )
        except KeyError as exc:
            raise TransactionError(f"missing transaction field: {exc.args[0]}") from exc
        validate_transaction(tx)
        return tx


@dataclass(frozen=True)
class BatchDraft:
    """An ordered run of real transactions padded out to 32 leaves."""

    transactions: tuple[Transaction, ...]
    leaves: tuple[int, ...]
    real_count: int


def validate_transaction(tx: Transaction, allow_dummy: bool = False) -> None:
    """Raise TransactionError unless ``tx`` is well-formed."""
    for name, value in (("assetId", tx.asset_id), ("participant", tx.participant)):
        if not isinstance(value, str) or not value:
            raise TransactionError(f"{name} must be a non-empty string")
        if len(value) > MAX_ID_LENGTH:
            raise TransactionError(f"{name} longer than {MAX_ID_LENGTH} chars")
        if any(ord(c) < 0x20 for c in value):
            raise TransactionError(f"{name} contains control characters")
    if not is_cid_text(tx.asset_cid):
        raise TransactionError(f"assetCid is not a valid CID: {tx.asset_cid!r}")
    if not isinstance(tx.client_timestamp, int) or isinstance(tx.client_timestamp, bool):
        raise TransactionError("clientTimestamp must be an integer (ms since epoch)")
    if tx.client_timestamp < 0:
        raise TransactionError("clientTimestamp must be non-negative")
    if not allow_dummy and tx.asset_id == DUMMY_ASSET_ID:
        raise TransactionError(f"assetId {DUMMY_ASSET_ID!r} is reserved for padding")


def canonical_bytes(tx: Transaction) -> bytes:
    """Canonical JSON encoding (injective over valid transactions)."""
    allow = tx.asset_id == DUMMY_ASSET_ID and tx == _dummy_transaction()
    validate_transaction(tx, allow_dummy=allow)
    return json.dumps(tx.to_wire(), sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode(
        "utf-8"
    )


def leaf_encode(tx: Transaction) -> int:
    """Merkle leaf of a transaction: sha256 of canonical bytes, mod P."""
    digest = hashlib.sha256(canonical_bytes(tx)).digest()
    return int.from_bytes(digest, "big") % field.P


def _dummy_transaction() -> Transaction:
    return Transaction(
        asset_id=DUMMY_ASSET_ID,
        participant=DUMMY_ASSET_ID,
        asset_cid=cid_of(b"DUMMY").text,
        client_timestamp=0,
    )


_DUMMY_LEAF: int | None = None


def dummy_leaf() -> int:
    """The public padding constant, identical across all batches."""
    global _DUMMY_LEAF
    if _DUMMY_LEAF is None:
        _DUMMY_LEAF = leaf_encode(_dummy_transaction())
    return _DUMMY_LEAF


def pad_batch(txs: list[Transaction] | tuple[Transaction, ...]) -> BatchDraft:
    """Encode 1..32 transactions as a full 32-leaf vector, order preserved."""
    if not 1 <= len(txs) <= BATCH_SIZE:
        raise BatchSizeError(f"batch must hold 1..{BATCH_SIZE} transactions, got {len(txs)}")
    real = tuple(txs)
    leaves = [leaf_encode(tx) for tx in real]
    leaves.extend([dummy_leaf()] * (BATCH_SIZE - len(real)))
    return BatchDraft(transactions=real, leaves=tuple(leaves), real_count=len(real))


def random_transaction(rng: random.Random, now_ms: int, tag: str = "gen") -> Transaction:
    """A randomized but well-formed asset-creation request.

    Used by the workload driver: random alphanumeric suffixes on the asset
    and participant ids plus a synthetic asset CID.  Uniqueness comes from
    the 64-bit suffix plus the caller-supplied tag.
    """
    suffix = f"{rng.getrandbits(64):016x}"
    org = rng.choice(("org1", "org2"))
    return Transaction(
        asset_id=f"asset-{tag}-{suffix}",
        participant=f"{org}-user-{rng.getrandbits(32):08x}",
        asset_cid=cid_of(rng.getrandbits(256).to_bytes(32, "big")).text,
        client_timestamp=now_ms,
    )
