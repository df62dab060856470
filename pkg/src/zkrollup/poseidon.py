"""Poseidon 2-to-1 compression over the BN254 scalar field.

This is the hash the batch Merkle trees are built from, so the parameter set
is not negotiable: we ship the published circomlib width-3 instance
(8 full rounds, 57 partial rounds, x^5 S-box) as a checked-in data file and
refuse to run with anything that fails its checksum or its embedded
known-answer vectors.  Digests computed here are bit-identical to
circomlib/circomlibjs ``poseidon([x, y])``, which is what lets external
tooling recompute batch roots.

The permutation follows the reference round schedule: for each round, add
round constants, apply the S-box (to the whole state in the outer full
rounds, to the first element only in the partial rounds), then multiply by
the MDS matrix.  The compression absorbs ``(x, y)`` as ``state = [0, x, y]``
and squeezes ``state[0]``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field as dc_field
from importlib import resources

from . import field

DEFAULT_PARAMS_RESOURCE = "poseidon_bn254_t3.json"

# Global compression-call counter; lets tests assert constant-work claims
# (e.g. exactly 31 calls per 32-leaf tree).  Single-threaded accuracy only.
_CALL_COUNT = 0


class ParameterError(ValueError):
    """Parameter file is corrupted, malformed, or fails its self-test."""


@dataclass(frozen=True)
class PoseidonParams:
    """A width-3 Poseidon instance, validated at load time."""

    name: str
    prime: int
    width: int
    full_rounds: int
    partial_rounds: int
    sbox_exponent: int
    round_constants: tuple[int, ...]
    mds: tuple[tuple[int, ...], ...]
    test_vectors: tuple[tuple[int, int, int], ...] = dc_field(default=())

    def validate(self) -> None:
        if self.width != 3:
            raise ParameterError(f"unsupported width {self.width}, this build is fixed at 3")
        if self.prime != field.P:
            raise ParameterError("parameter file prime differs from the build's field")
        if self.full_rounds % 2 != 0 or self.full_rounds <= 0 or self.partial_rounds <= 0:
            raise ParameterError("round counts must be positive with an even full-round count")
        if self.sbox_exponent != 5:
            raise ParameterError(f"unsupported S-box exponent {self.sbox_exponent}")
        total = self.full_rounds + self.partial_rounds
        if len(self.round_constants) != self.width * total:
            raise ParameterError(
                f"round constant count {len(self.round_constants)} != width*rounds = {self.width * total}"
            )
        if len(self.mds) != self.width or any(len(row) != self.width for row in self.mds):
            raise ParameterError("MDS matrix must be width x width")
        for v in self.round_constants:
            field.check_element(v)
        for row in self.mds:
            for v in row:
                field.check_element(v)
        if _det3(self.mds) == 0:
            raise ParameterError("MDS matrix is singular over the field")

    def self_test(self) -> None:
        """Run the embedded known-answer vectors; raise on any mismatch."""
        if not self.test_vectors:
            raise ParameterError("parameter file carries no known-answer vectors")
        for x, y, digest in self.test_vectors:
            got = poseidon2(x, y, self)
            if got != digest:
                raise ParameterError(
                    f"known-answer vector failed: poseidon2({x}, {y}) = {got}, expected {digest}"
                )


def _det3(m: tuple[tuple[int, ...], ...]) -> int:
    (a, b, c), (d, e, f), (g, h, i) = m
    return (a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)) % field.P


def _checksum(payload: dict) -> str:
    body = {k: v for k, v in payload.items() if k != "checksum"}
    canonical = json.dumps(body, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(canonical).hexdigest()


def params_from_dict(payload: dict) -> PoseidonParams:
    """Parse, checksum-verify, validate, and self-test a parameter payload."""
    declared = payload.get("checksum")
    if declared is None:
        raise ParameterError("parameter file has no checksum")
    actual = _checksum(payload)
    if actual != declared:
        raise ParameterError(f"parameter checksum mismatch: file says {declared}, content hashes to {actual}")
    try:
        params = PoseidonParams(
            name=payload["name"],
            prime=int(payload["field_prime"]),
            width=int(payload["width"]),
            full_rounds=int(payload["full_rounds"]),
            partial_rounds=int(payload["partial_rounds"]),
            sbox_exponent=int(payload["sbox_exponent"]),
            round_constants=tuple(int(c) for c in payload["round_constants"]),
            mds=tuple(tuple(int(v) for v in row) for row in payload["mds"]),
            test_vectors=tuple(
                (int(v["inputs"][0]), int(v["inputs"][1]), int(v["digest"]))
                for v in payload.get("test_vectors", [])
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParameterError(f"malformed parameter file: {exc}") from exc
    params.validate()
    params.self_test()
    return params


def load_params(path: str | None = None) -> PoseidonParams:
    """Load parameters from ``path``, or the packaged default set."""
    if path is None:
        text = resources.files("zkrollup.data").joinpath(DEFAULT_PARAMS_RESOURCE).read_text()
    else:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    return params_from_dict(json.loads(text))


_DEFAULT: PoseidonParams | None = None


def default_params() -> PoseidonParams:
    """The packaged circomlib BN254 t=3 instance (loaded once)."""
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_params()
    return _DEFAULT


def poseidon2(x: int, y: int, params: PoseidonParams | None = None) -> int:
    """Compress two field elements into one.

    Absorbs ``(x, y)`` into state ``[0, x, y]``, runs the full permutation,
    and returns the first state element.  Pure: same inputs, same digest.
    """
    global _CALL_COUNT
    if params is None:
        params = default_params()
    if not (0 <= x < field.P and 0 <= y < field.P):
        raise field.FieldError("poseidon2 inputs must be canonical field elements")
    _CALL_COUNT += 1

    p = params.prime
    rc = params.round_constants
    (m00, m01, m02), (m10, m11, m12), (m20, m21, m22) = params.mds
    half = params.full_rounds // 2
    partial_end = half + params.partial_rounds
    total = params.full_rounds + params.partial_rounds

    s0, s1, s2 = 0, x, y
    r = 0
    for rnd in range(total):
        s0 = (s0 + rc[r]) % p
        s1 = (s1 + rc[r + 1]) % p
        s2 = (s2 + rc[r + 2]) % p
        r += 3
        if rnd < half or rnd >= partial_end:
            t = s0 * s0 % p
            s0 = t * t % p * s0 % p
            t = s1 * s1 % p
            s1 = t * t % p * s1 % p
            t = s2 * s2 % p
            s2 = t * t % p * s2 % p
        else:
            t = s0 * s0 % p
            s0 = t * t % p * s0 % p
        n0 = (m00 * s0 + m01 * s1 + m02 * s2) % p
        n1 = (m10 * s0 + m11 * s1 + m12 * s2) % p
        n2 = (m20 * s0 + m21 * s1 + m22 * s2) % p
        s0, s1, s2 = n0, n1, n2
    return s0


def compression_calls() -> int:
    """Total poseidon2 invocations in this process (instrumentation)."""
    return _CALL_COUNT
