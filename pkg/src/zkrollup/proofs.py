"""Succinct-proof interface for batch Merkle roots, with pluggable backends.

A proof attests: "the claimed public root is the 32-leaf tree root of some
leaf vector the prover knows".  Two backend slots exist:

* ``reference`` (always available): a transparent backend that carries the
  leaf witness inside the proof bytes and re-runs the fixed tree computation
  at verification.  It is sound and deterministic but NOT zero-knowledge --
  the leaves are revealed.  It exists so the full pipeline, benchmarks
  included, runs and is testable without a SNARK proving stack.
* ``snark``: reserved for a PLONK-style prover over the same fixed circuit
  (31 compressions, depth 5).  Not bundled; selecting it raises a
  configuration error.

Proof bytes always start with a one-byte backend tag so stored proofs are
self-describing; they render as hex in APIs and logs.

The prover refuses statements whose witness does not reproduce the claimed
root: a sequencer bug fails fast instead of emitting unverifiable proofs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from . import field, merkle

REFERENCE_TAG = 0x01
SNARK_TAG = 0x02

_TAG_BY_NAME = {"reference": REFERENCE_TAG, "snark": SNARK_TAG}


class BackendUnavailableError(Exception):
    """The selected proof backend is not present in this build."""


class ProverError(Exception):
    """The witness does not support the claimed public root."""


@dataclass(frozen=True)
class CircuitShape:
    """The constant circuit descriptor: identical for every batch."""

    leaf_count: int
    depth: int
    compression_gates: int


def circuit_shape() -> CircuitShape:
    """Walk the fixed tree topology and count its compression gates."""
    gates = 0
    width = merkle.LEAF_COUNT
    depth = 0
    while width > 1:
        gates += width // 2
        width //= 2
        depth += 1
    return CircuitShape(leaf_count=merkle.LEAF_COUNT, depth=depth, compression_gates=gates)


@dataclass(frozen=True)
class RollupStatement:
    """Public root plus the private leaf witness."""

    public_root: int
    leaves: tuple[int, ...]


@dataclass(frozen=True)
class RollupProof:
    backend: str
    proof_bytes: bytes
    public_root: int
    prover_time_ms: int

    def proof_hex(self) -> str:
        return self.proof_bytes.hex()


@dataclass(frozen=True)
class ProvingKeyMaterial:
    backend: str
    shape: CircuitShape
    blob: bytes = b""


class ReferenceBackend:
    """Transparent backend: witness-carrying proof, recomputed at verify."""

    name = "reference"
    tag = REFERENCE_TAG

    def setup(self, seed: int | None = None) -> ProvingKeyMaterial:
        # Transparent: no setup artifacts, so any seed yields the same material.
        return ProvingKeyMaterial(backend=self.name, shape=circuit_shape(), blob=b"")

    def prove(self, material: ProvingKeyMaterial, statement: RollupStatement) -> RollupProof:
        if len(statement.leaves) != merkle.LEAF_COUNT:
            raise ProverError(f"witness must hold {merkle.LEAF_COUNT} leaves")
        t0 = time.perf_counter()
        tree = merkle.build_tree(statement.leaves)
        if tree.root != statement.public_root:
            raise ProverError(
                "claimed root does not match the witness "
                f"(claimed {field.to_hex(statement.public_root)}, computed {field.to_hex(tree.root)})"
            )
        body = bytes([self.tag]) + b"".join(field.to_bytes(v) for v in statement.leaves)
        elapsed_ms = max(1, round((time.perf_counter() - t0) * 1000))
        return RollupProof(
            backend=self.name,
            proof_bytes=body,
            public_root=statement.public_root,
            prover_time_ms=elapsed_ms,
        )

    def verify(self, material: ProvingKeyMaterial, proof_bytes: bytes, public_root: int) -> bool:
        if len(proof_bytes) != 1 + merkle.LEAF_COUNT * field.ELEMENT_BYTES:
            return False
        if proof_bytes[0] != self.tag:
            return False
        if not field.is_element(public_root):
            return False
        leaves = []
        body = proof_bytes[1:]
        for i in range(merkle.LEAF_COUNT):
            chunk = body[i * field.ELEMENT_BYTES : (i + 1) * field.ELEMENT_BYTES]
            try:
                leaves.append(field.from_bytes(chunk))
            except field.FieldError:
                return False
        return merkle.build_tree(leaves).root == public_root


def get_backend(name: str) -> ReferenceBackend:
    """Look up a proof backend by configured name."""
    if name == "reference":
        return ReferenceBackend()
    if name == "snark":
        raise BackendUnavailableError(
            "the 'snark' backend is not bundled with this build; "
            "configure proofBackend='reference' or install a PLONK backend plugin"
        )
    raise BackendUnavailableError(f"unknown proof backend {name!r}")


def setup(backend: str = "reference", seed: int | None = None) -> ProvingKeyMaterial:
    """Produce (reusable) proving material for the fixed 32-leaf circuit."""
    return get_backend(backend).setup(seed)


def prove(material: ProvingKeyMaterial, statement: RollupStatement) -> RollupProof:
    return get_backend(material.backend).prove(material, statement)


def verify(material: ProvingKeyMaterial, proof: RollupProof) -> bool:
    """Deterministic check of a structured proof object."""
    return verify_bytes(material, proof.proof_bytes, proof.public_root)


def verify_bytes(material: ProvingKeyMaterial, proof_bytes: bytes, public_root: int) -> bool:
    """Check raw proof bytes against a claimed root; malformed bytes are
    simply invalid, never an exception."""
    try:
        backend = get_backend(material.backend)
    except BackendUnavailableError:
        return False
    try:
        return backend.verify(material, proof_bytes, public_root)
    except Exception:
        return False
