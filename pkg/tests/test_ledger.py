from __future__ import annotations

import random

import pytest

from zkrollup import merkle, proofs
from zkrollup.cid import cid_of
from zkrollup.clocks import SimulatedClock, WallClock
from zkrollup.ledger import (
    BatchCommitment,
    BatchSequenceError,
    EndorsementError,
    KeyNotFoundError,
    LatencyModel,
    ProofRejectedError,
    SimulatedLedger,
    replay_block_log,
)

ACID = cid_of(b"asset-data").text


def make_ledger(model=None, clock=None, verify=None):
    clock = clock if clock is not None else SimulatedClock(0)
    if verify is None:
        material = proofs.setup("reference")
        verify = lambda pb, r: proofs.verify_bytes(material, pb, r)
    return SimulatedLedger(model or LatencyModel(), clock=clock, verify_proof=verify), clock


def honest_commitment(batch_number=1, tx_count=3, seed=0):
    rng = random.Random(seed)
    leaves = tuple(rng.randrange(2**64) for _ in range(32))
    root = merkle.build_tree(leaves).root
    material = proofs.setup("reference")
    proof = proofs.prove(material, proofs.RollupStatement(public_root=root, leaves=leaves))
    return BatchCommitment(
        batch_number=batch_number,
        merkle_root=root,
        ipfs_cid=cid_of(f"payload-{seed}".encode()).text,
        tx_count=tx_count,
        proof_bytes=proof.proof_bytes,
    )


def test_degenerate_model_commits_immediately():
    model = LatencyModel(endorse_ms=0, order_ms=0, commit_ms=0, block_interval_ms=0)
    ledger, clock = make_ledger(model)
    receipt = ledger.create_asset("a1", "org1", ACID)
    assert receipt.latency_ms == 0
    assert ledger.query_json("a1")["assetId"] == "a1"
    assert clock.now_ms() == 0


def test_duplicate_asset_rejected_no_state_change():
    ledger, _ = make_ledger(LatencyModel(0, 0, 0, 0))
    ledger.create_asset("a1", "org1", ACID)
    before = ledger.state_snapshot()
    log_before = ledger.export_block_log()
    with pytest.raises(EndorsementError, match="already exists"):
        ledger.create_asset("a1", "org2", ACID)
    assert ledger.state_snapshot() == before
    assert ledger.export_block_log() == log_before


def test_in_flight_duplicate_rejected():
    ledger, _ = make_ledger(LatencyModel(10, 10, 10, 1000))
    ledger.submit_create_asset("a1", "org1", ACID)
    with pytest.raises(EndorsementError):
        ledger.submit_create_asset("a1", "org1", ACID)


def test_closed_form_single_tx_latency():
    # endorse 300 + order 500 + commit 200 = 1000 fixed; cut wait in [0, B]
    model = LatencyModel(endorse_ms=300, order_ms=500, commit_ms=200, block_interval_ms=700)
    ledger, clock = make_ledger(model)
    clock.advance(123)  # arbitrary submit instant
    receipt = ledger.create_asset("a1", "org1", ACID)
    assert 1000 <= receipt.latency_ms <= 1000 + model.block_interval_ms
    record = ledger.query_json("a1")
    assert record["createdAt"] == receipt.committed_ms


def test_bad_asset_inputs_rejected():
    ledger, _ = make_ledger()
    with pytest.raises(EndorsementError):
        ledger.create_asset("", "org1", ACID)
    with pytest.raises(EndorsementError):
        ledger.create_asset("a", "org1", "junk-cid")
    with pytest.raises(EndorsementError, match="reserved"):
        ledger.create_asset("BATCH_7", "org1", ACID)


def test_commit_batch_happy_path():
    ledger, _ = make_ledger(LatencyModel(0, 0, 0, 0))
    c = honest_commitment(batch_number=1)
    receipt = ledger.commit_batch(c)
    stored = ledger.query_json("BATCH_1")
    assert stored["batchNumber"] == 1
    assert stored["merkleRoot"] == f"{c.merkle_root:064x}"
    assert stored["ipfsCid"] == c.ipfs_cid
    assert stored["txCount"] == c.tx_count
    assert stored["proofBytes"] == c.proof_bytes.hex()
    assert stored["committedAt"] == receipt.committed_ms
    assert ledger.next_batch_number() == 2


def test_commit_batch_proof_gate():
    ledger, _ = make_ledger(LatencyModel(0, 0, 0, 0))
    good = honest_commitment(batch_number=1)
    bad = BatchCommitment(
        batch_number=1,
        merkle_root=(good.merkle_root + 1) % (2**250),
        ipfs_cid=good.ipfs_cid,
        tx_count=good.tx_count,
        proof_bytes=good.proof_bytes,
    )
    before = ledger.state_snapshot()
    with pytest.raises(ProofRejectedError):
        ledger.commit_batch(bad)
    assert ledger.state_snapshot() == before
    assert ledger.next_batch_number() == 1
    with pytest.raises(KeyNotFoundError):
        ledger.query("BATCH_1")


def test_commit_batch_replay_and_gap_rejected():
    ledger, _ = make_ledger(LatencyModel(0, 0, 0, 0))
    ledger.commit_batch(honest_commitment(batch_number=1))
    with pytest.raises(BatchSequenceError):
        ledger.commit_batch(honest_commitment(batch_number=1, seed=1))
    with pytest.raises(BatchSequenceError):
        ledger.commit_batch(honest_commitment(batch_number=3, seed=2))
    ledger.commit_batch(honest_commitment(batch_number=2, seed=3))
    assert ledger.query_json("BATCH_2")["batchNumber"] == 2


def test_query_unknown_key():
    ledger, _ = make_ledger()
    with pytest.raises(KeyNotFoundError):
        ledger.query("nope")


def test_reads_see_only_committed_blocks():
    ledger, clock = make_ledger(LatencyModel(10, 10, 100, 50))
    receipt = ledger.submit_create_asset("a1", "org1", ACID)
    with pytest.raises(KeyNotFoundError):
        ledger.query("a1")  # scheduled but not yet committed
    clock.advance(int(receipt.committed_ms))
    assert ledger.query_json("a1")["assetId"] == "a1"


def test_block_log_deterministic_across_runs():
    def run() -> str:
        ledger, clock = make_ledger(LatencyModel(150, 100, 250, 1000, 6))
        rng = random.Random(42)
        for i in range(40):
            ledger.submit_create_asset(f"asset-{i}", f"org{rng.randrange(2) + 1}", ACID)
            clock.advance(rng.randrange(50))
        ledger.settle_pending()
        return ledger.export_block_log()

    assert run() == run()


def test_block_log_replays_to_state():
    ledger, clock = make_ledger(LatencyModel(10, 20, 30, 100, 4))
    for i in range(25):
        ledger.submit_create_asset(f"asset-{i}", "org1", ACID)
        clock.advance(17)
    ledger.settle_pending()
    assert replay_block_log(ledger.export_block_log()) == ledger.state_snapshot()


def test_block_log_written_to_file(tmp_path):
    path = tmp_path / "blocks.jsonl"
    clock = SimulatedClock(0)
    material = proofs.setup("reference")
    ledger = SimulatedLedger(
        LatencyModel(0, 0, 0, 0),
        clock=clock,
        verify_proof=lambda pb, r: proofs.verify_bytes(material, pb, r),
        block_log_path=path,
    )
    ledger.create_asset("a1", "org1", ACID)
    ledger.commit_batch(honest_commitment(1))
    assert path.read_text() == ledger.export_block_log()


def test_throughput_ceiling_bound_by_block_capacity():
    # 120 submissions at t=0: commit rate approaches maxTxPerBlock/interval
    model = LatencyModel(endorse_ms=10, order_ms=10, commit_ms=50, block_interval_ms=200, max_tx_per_block=5)
    ledger, clock = make_ledger(model)
    receipts = [ledger.submit_create_asset(f"a{i}", "org1", ACID) for i in range(120)]
    times = sorted(r.committed_ms for r in receipts)
    # one block interval per batch of commits, including the first
    span_s = (times[-1] - times[0] + model.block_interval_ms) / 1000.0
    rate = len(times) / span_s
    ceiling = model.max_tx_per_block / (model.block_interval_ms / 1000.0)
    assert rate <= ceiling * 1.01
    assert rate >= ceiling * 0.9
    # block capacity respected
    ledger.settle_pending()
    for block in ledger.block_log():
        assert len(block["entries"]) <= model.max_tx_per_block


def test_wall_clock_mode_sleeps_for_real():
    clock = WallClock()
    model = LatencyModel(endorse_ms=20, order_ms=10, commit_ms=20, block_interval_ms=40)
    material = proofs.setup("reference")
    ledger = SimulatedLedger(model, clock=clock, verify_proof=lambda pb, r: True)
    t0 = clock.now_ms()
    receipt = ledger.create_asset("a1", "org1", ACID)
    elapsed = clock.now_ms() - t0
    assert receipt.latency_ms >= 50  # endorse + order + commit
    assert elapsed >= receipt.latency_ms - 5
    assert ledger.query_json("a1")["assetId"] == "a1"


def test_latency_model_validation():
    with pytest.raises(ValueError):
        LatencyModel(endorse_ms=-1)
    with pytest.raises(ValueError):
        LatencyModel(max_tx_per_block=0)
    m = LatencyModel.from_dict({"endorseMs": 1, "orderMs": 2, "commitMs": 3, "blockIntervalMs": 4, "maxTxPerBlock": 5})
    assert m.to_dict() == {"endorseMs": 1, "orderMs": 2, "commitMs": 3, "blockIntervalMs": 4, "maxTxPerBlock": 5}


def test_commitment_validation():
    good = honest_commitment()
    with pytest.raises(ValueError):
        BatchCommitment(1, good.merkle_root, good.ipfs_cid, 0, b"")
    with pytest.raises(ValueError):
        BatchCommitment(1, good.merkle_root, "bad-cid", 1, b"")
