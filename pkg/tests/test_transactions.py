from __future__ import annotations

import hashlib
import random

import pytest

from zkrollup import field, merkle, transactions
from zkrollup.cid import cid_of
from zkrollup.transactions import (
    BatchSizeError,
    Transaction,
    TransactionError,
    canonical_bytes,
    dummy_leaf,
    leaf_encode,
    pad_batch,
    random_transaction,
    validate_transaction,
)

from conftest import make_txs

# Pinned with an independent one-off script (manual string construction +
# hashlib + plain modular arithmetic, no package imports).
SAMPLE_TX = Transaction(
    asset_id="asset-0001",
    participant="org1-user-a",
    asset_cid="bafkreiesqu7tldeffgwrtc2gigiptgwpspa7gwtlemfgmqitzid4zliohi",
    client_timestamp=1700000000123,
)
SAMPLE_CANONICAL = (
    b'{"assetCid":"bafkreiesqu7tldeffgwrtc2gigiptgwpspa7gwtlemfgmqitzid4zliohi",'
    b'"assetId":"asset-0001","clientTimestamp":1700000000123,"participant":"org1-user-a"}'
)
SAMPLE_LEAF = 17492645096232116215522175772394879042226310492809837849562267896304761434846
DUMMY_LEAF = 18431204009342241939102445300796515342788896512680482011797038703891395466168


def test_pinned_canonical_bytes():
    assert SAMPLE_TX.asset_cid == cid_of(b"sample-asset").text
    assert canonical_bytes(SAMPLE_TX) == SAMPLE_CANONICAL


def test_pinned_leaf_values():
    assert leaf_encode(SAMPLE_TX) == SAMPLE_LEAF
    assert dummy_leaf() == DUMMY_LEAF
    assert field.to_hex(dummy_leaf()) == (
        "28bfb118c2a0fe14522ed333c0b61688c3490ba83630d7277db40ebe074153b8"
    )


def test_canonical_bytes_deterministic():
    assert canonical_bytes(SAMPLE_TX) == canonical_bytes(SAMPLE_TX)


def test_leaf_definition_matches_documented_map():
    # leaf = sha256(canonical bytes) reduced mod P, recomputed inline
    digest = hashlib.sha256(canonical_bytes(SAMPLE_TX)).digest()
    assert leaf_encode(SAMPLE_TX) == int.from_bytes(digest, "big") % field.P


def test_injective_on_asset_id():
    other = Transaction(
        asset_id="asset-0002",
        participant=SAMPLE_TX.participant,
        asset_cid=SAMPLE_TX.asset_cid,
        client_timestamp=SAMPLE_TX.client_timestamp,
    )
    assert canonical_bytes(other) != canonical_bytes(SAMPLE_TX)


def test_injective_over_random_pairs(rng):
    txs = make_txs(rng, 500, now_ms=5)
    blobs = {canonical_bytes(tx) for tx in txs}
    assert len(blobs) == len(set(txs))


def test_no_leaf_collisions_10k(rng):
    txs = make_txs(rng, 10_000, now_ms=9)
    leaves = [leaf_encode(tx) for tx in txs]
    assert len(set(leaves)) == len(set(txs))


def test_dummy_disjoint_from_real_leaves_10k(rng):
    d = dummy_leaf()
    for tx in make_txs(rng, 10_000, now_ms=11):
        assert leaf_encode(tx) != d


def test_dummy_leaf_stable():
    assert dummy_leaf() == dummy_leaf()


def test_dummy_sentinel_id_is_reserved():
    with pytest.raises(TransactionError, match="reserved"):
        validate_transaction(
            Transaction("DUMMY", "someone", cid_of(b"x").text, 5)
        )


@pytest.mark.parametrize(
    "mutant",
    [
        dict(asset_id=""),
        dict(participant=""),
        dict(asset_id="x" * 300),
        dict(asset_id="bad\x00id"),
        dict(asset_cid="not-a-cid"),
        dict(asset_cid="Qm" + "a" * 44),
        dict(client_timestamp=-1),
        dict(client_timestamp=1.5),
        dict(client_timestamp=True),
    ],
)
def test_validation_rejects(mutant):
    bad = Transaction(
        asset_id=mutant.get("asset_id", "asset-1"),
        participant=mutant.get("participant", "org1-user"),
        asset_cid=mutant.get("asset_cid", cid_of(b"ok").text),
        client_timestamp=mutant.get("client_timestamp", 1),
    )
    with pytest.raises(TransactionError):
        canonical_bytes(bad)


def test_from_wire_round_trip():
    assert Transaction.from_wire(SAMPLE_TX.to_wire()) == SAMPLE_TX


def test_from_wire_rejects_missing_and_unknown_fields():
    wire = SAMPLE_TX.to_wire()
    incomplete = {k: v for k, v in wire.items() if k != "assetId"}
    with pytest.raises(TransactionError, match="missing"):
        Transaction.from_wire(incomplete)
    with pytest.raises(TransactionError, match="unknown"):
        Transaction.from_wire({**wire, "extra": 1})
    with pytest.raises(TransactionError):
        Transaction.from_wire(["not", "a", "dict"])


def test_pad_batch_full():
    rng = random.Random(3)
    txs = make_txs(rng, 32, now_ms=77)
    draft = pad_batch(txs)
    assert draft.real_count == 32
    assert draft.transactions == tuple(txs)
    assert dummy_leaf() not in draft.leaves


def test_pad_batch_single():
    rng = random.Random(4)
    txs = make_txs(rng, 1, now_ms=78)
    draft = pad_batch(txs)
    assert draft.real_count == 1
    assert draft.leaves[0] == leaf_encode(txs[0])
    assert all(v == dummy_leaf() for v in draft.leaves[1:])


def test_pad_batch_preserves_order(rng):
    txs = make_txs(rng, 17, now_ms=79)
    draft = pad_batch(txs)
    assert [leaf_encode(tx) for tx in txs] == list(draft.leaves[:17])
    assert list(draft.transactions) == txs


def test_pad_batch_rejects_empty_and_oversize(rng):
    with pytest.raises(BatchSizeError):
        pad_batch([])
    with pytest.raises(BatchSizeError):
        pad_batch(make_txs(rng, 33, now_ms=80))


def test_equal_inputs_equal_leaves_equal_roots(rng):
    txs = make_txs(rng, 9, now_ms=81)
    a = pad_batch(list(txs))
    b = pad_batch(list(txs))
    assert a.leaves == b.leaves
    assert merkle.build_tree(a.leaves).root == merkle.build_tree(b.leaves).root


def test_auditor_can_rebuild_root_from_real_txs(rng):
    # end-to-end: k real transactions + the public constant reproduce the root
    for k in (2, 13, 32):
        txs = make_txs(rng, k, now_ms=82)
        sealed_root = merkle.build_tree(pad_batch(txs).leaves).root
        rebuilt = [leaf_encode(tx) for tx in txs] + [dummy_leaf()] * (32 - k)
        assert merkle.build_tree(rebuilt).root == sealed_root


def test_random_transaction_generator_validates(rng):
    for _ in range(100):
        tx = random_transaction(rng, now_ms=123, tag="vu7")
        validate_transaction(tx)
        assert tx.client_timestamp == 123
        assert tx.asset_id.startswith("asset-vu7-")


def test_batch_size_constant():
    assert transactions.BATCH_SIZE == 32
