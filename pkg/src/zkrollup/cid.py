"""Content identifiers for stored batch payloads.

The scheme is CIDv1 with the raw-block codec and a sha2-256 multihash,
rendered as lowercase base32 with the multibase 'b' prefix:

    text = 'b' + base32lower( 0x01 0x55 0x12 0x20 || sha256(payload) )

These are byte-identical to the identifiers a real IPFS node produces for
raw blocks (``add --raw-leaves --cid-version 1``) as long as the payload
fits in one chunk, so the local store and an external daemon agree on names.
"""

from __future__ import annotations

import base64
import hashlib
import re
from dataclasses import dataclass

CID_VERSION = 0x01
RAW_CODEC = 0x55
SHA2_256_CODE = 0x12
DIGEST_LEN = 0x20

# 'b' + base32( 4 prefix bytes + 32 digest bytes ) = 1 + 58 chars
_CID_TEXT_RE = re.compile(r"^b[a-z2-7]{58}$")


class CidError(ValueError):
    """Malformed CID text."""


@dataclass(frozen=True)
class Cid:
    """A parsed content identifier: text form plus the raw sha256 digest."""

    text: str
    digest: bytes

    def __str__(self) -> str:
        return self.text


def cid_of(data: bytes) -> Cid:
    """Deterministic content identifier of ``data``."""
    digest = hashlib.sha256(data).digest()
    raw = bytes((CID_VERSION, RAW_CODEC, SHA2_256_CODE, DIGEST_LEN)) + digest
    text = "b" + base64.b32encode(raw).decode("ascii").lower().rstrip("=")
    return Cid(text=text, digest=digest)


def is_cid_text(text: str) -> bool:
    """True if ``text`` matches this store's CID grammar."""
    return isinstance(text, str) and _CID_TEXT_RE.match(text) is not None


def parse_cid(text: str) -> Cid:
    """Parse CID text back into its digest; rejects anything off-grammar."""
    if not is_cid_text(text):
        raise CidError(f"not a valid CID: {text!r}")
    # restore base32 padding: 35 bytes encode to 56 chars + 'w'-padding to 64
    b32 = text[1:].upper()
    raw = base64.b32decode(b32 + "=" * (-len(b32) % 8))
    if len(raw) != 4 + DIGEST_LEN or raw[:4] != bytes(
        (CID_VERSION, RAW_CODEC, SHA2_256_CODE, DIGEST_LEN)
    ):
        raise CidError(f"unsupported CID prefix in {text!r}")
    return Cid(text=text, digest=raw[4:])


def matches(cid: Cid, data: bytes) -> bool:
    """True iff ``data`` hashes to ``cid``."""
    return hashlib.sha256(data).digest() == cid.digest
