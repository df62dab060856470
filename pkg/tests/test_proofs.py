from __future__ import annotations

import random

import pytest

from zkrollup import field, merkle, proofs


def rand_statement(rng: random.Random) -> proofs.RollupStatement:
    leaves = tuple(rng.randrange(field.P) for _ in range(32))
    return proofs.RollupStatement(
        public_root=merkle.build_tree(leaves).root, leaves=leaves
    )


def test_circuit_shape_constant():
    shape = proofs.circuit_shape()
    assert shape.leaf_count == 32
    assert shape.depth == 5
    assert shape.compression_gates == 31


def test_reference_setup_trivial_and_deterministic():
    a = proofs.setup("reference", seed=1)
    b = proofs.setup("reference", seed=1)
    assert a == b
    assert a.blob == b""
    assert a.shape == proofs.circuit_shape()
    # transparent backend: seed is irrelevant by construction
    assert proofs.setup("reference", seed=2) == a


def test_completeness(rng):
    material = proofs.setup("reference")
    for _ in range(20):
        statement = rand_statement(rng)
        proof = proofs.prove(material, statement)
        assert proofs.verify(material, proof)
        assert proof.public_root == statement.public_root


def test_prover_refuses_false_statements(rng):
    material = proofs.setup("reference")
    statement = rand_statement(rng)
    bad = proofs.RollupStatement(
        public_root=(statement.public_root + 1) % field.P, leaves=statement.leaves
    )
    with pytest.raises(proofs.ProverError):
        proofs.prove(material, bad)
    with pytest.raises(proofs.ProverError):
        proofs.prove(material, proofs.RollupStatement(public_root=1, leaves=(1, 2, 3)))


def test_prover_time_recorded(rng):
    material = proofs.setup("reference")
    proof = proofs.prove(material, rand_statement(rng))
    assert proof.prover_time_ms > 0
    assert isinstance(proof.prover_time_ms, int)


def test_proof_bytes_tag_prefix(rng):
    material = proofs.setup("reference")
    proof = proofs.prove(material, rand_statement(rng))
    assert proof.proof_bytes[0] == proofs.REFERENCE_TAG
    assert len(proof.proof_bytes) == 1 + 32 * field.ELEMENT_BYTES
    assert proof.proof_hex() == proof.proof_bytes.hex()


def test_cross_batch_root_swap_fails(rng):
    material = proofs.setup("reference")
    proofs_list = [proofs.prove(material, rand_statement(rng)) for _ in range(6)]
    for i, a in enumerate(proofs_list):
        for j, b in enumerate(proofs_list):
            expected = i == j
            assert proofs.verify_bytes(material, a.proof_bytes, b.public_root) is expected


def test_single_bit_mutations_always_fail(rng):
    material = proofs.setup("reference")
    proof = proofs.prove(material, rand_statement(rng))
    n_bits = len(proof.proof_bytes) * 8
    for _ in range(200):
        bit = rng.randrange(n_bits)
        mutated = bytearray(proof.proof_bytes)
        mutated[bit // 8] ^= 1 << (bit % 8)
        assert not proofs.verify_bytes(material, bytes(mutated), proof.public_root)


def test_malformed_proof_bytes_are_invalid_not_crash():
    material = proofs.setup("reference")
    root = merkle.build_tree([0] * 32).root
    assert not proofs.verify_bytes(material, b"", root)
    assert not proofs.verify_bytes(material, b"\x01" + b"\x00" * 100, root)
    assert not proofs.verify_bytes(material, b"\x02" + b"\x00" * 1024, root)
    assert not proofs.verify_bytes(material, bytes([proofs.REFERENCE_TAG]) + field.P.to_bytes(32, "big") * 32, root)
    assert not proofs.verify_bytes(material, b"\x01" + b"\x00" * 1024, field.P)


def test_verify_deterministic(rng):
    material = proofs.setup("reference")
    proof = proofs.prove(material, rand_statement(rng))
    results = {proofs.verify(material, proof) for _ in range(5)}
    assert results == {True}


def test_snark_backend_unavailable_is_config_error():
    with pytest.raises(proofs.BackendUnavailableError, match="snark"):
        proofs.get_backend("snark")
    with pytest.raises(proofs.BackendUnavailableError):
        proofs.setup("snark")
    with pytest.raises(proofs.BackendUnavailableError):
        proofs.get_backend("groth16")


def test_verify_bytes_with_unavailable_backend_is_false(rng):
    material = proofs.ProvingKeyMaterial(backend="snark", shape=proofs.circuit_shape())
    assert not proofs.verify_bytes(material, b"\x02" + b"\x00" * 1024, 1)
