"""Prime-field arithmetic for the rollup's hashing and proof layer.

All commitments (Poseidon digests, Merkle roots, transaction leaves) are
scalars in the BN254 (alt_bn128) scalar field -- the field PLONK-style
proving stacks and the published Poseidon parameter sets are defined over.
Elements are plain Python ints kept in canonical reduced form ``0 <= v < P``.

Canonical byte serialization is fixed-length 32-byte big-endian; it is the
basis for content identifiers and for hex rendering in APIs and logs, so it
must never change.
"""

from __future__ import annotations

# BN254 / alt_bn128 scalar field modulus (group order r).
P = 21888242871839275222246405745257275088548364400416034343698204186575808495617

# ceil(log2(P) / 8): fixed serialization width in bytes.
ELEMENT_BYTES = 32


class FieldError(ValueError):
    """A value is not a canonical element of the field."""


def is_element(value: int) -> bool:
    """True if ``value`` is a canonical reduced representative."""
    return isinstance(value, int) and 0 <= value < P


def check_element(value: int) -> int:
    """Return ``value`` unchanged, raising FieldError if non-canonical."""
    if not is_element(value):
        raise FieldError(f"not a canonical field element: {value!r}")
    return value


def reduce(value: int) -> int:
    """Map an arbitrary integer onto its canonical representative."""
    return value % P


def add(a: int, b: int) -> int:
    """(a + b) mod P."""
    return (a + b) % P


def sub(a: int, b: int) -> int:
    """(a - b) mod P."""
    return (a - b) % P


def mul(a: int, b: int) -> int:
    """(a * b) mod P."""
    return (a * b) % P


def exp(a: int, e: int) -> int:
    """a**e mod P (e >= 0)."""
    return pow(a, e, P)


def inv(a: int) -> int:
    """Multiplicative inverse; raises FieldError for zero."""
    if a % P == 0:
        raise FieldError("zero has no multiplicative inverse")
    return pow(a, P - 2, P)


def to_bytes(value: int) -> bytes:
    """Canonical fixed-length big-endian encoding (32 bytes)."""
    return check_element(value).to_bytes(ELEMENT_BYTES, "big")


def from_bytes(data: bytes) -> int:
    """Inverse of :func:`to_bytes`; rejects wrong length or v >= P."""
    if len(data) != ELEMENT_BYTES:
        raise FieldError(f"expected {ELEMENT_BYTES} bytes, got {len(data)}")
    return check_element(int.from_bytes(data, "big"))


def to_hex(value: int) -> str:
    """Lowercase hex of the canonical bytes (64 chars, no 0x prefix)."""
    return to_bytes(value).hex()


def from_hex(text: str) -> int:
    """Inverse of :func:`to_hex`."""
    try:
        data = bytes.fromhex(text)
    except ValueError as exc:
        raise FieldError(f"invalid hex: {text!r}") from exc
    return from_bytes(data)
