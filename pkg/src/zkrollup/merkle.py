"""Fixed-shape Merkle commitment: 32 leaves, depth 5, Poseidon compression.

Batches always contain exactly 32 leaves (real transactions plus dummy
padding), so the tree shape never varies: 16 + 8 + 4 + 2 + 1 = 31
compressions per build, and the same ordered leaves always produce the same
root.  Construction materializes every level so membership paths can be read
off without rehashing.

Membership paths let an auditor check a single leaf against an on-chain root
without the other 31 leaves.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import field
from .poseidon import PoseidonParams, poseidon2

LEAF_COUNT = 32
DEPTH = 5


class TreeError(ValueError):
    """Wrong leaf count or out-of-range index."""


@dataclass(frozen=True)
class MerkleTree32:
    """A built tree; levels ordered leaves -> root, all immutable."""

    leaves: tuple[int, ...]
    level1: tuple[int, ...]
    level2: tuple[int, ...]
    level3: tuple[int, ...]
    level4: tuple[int, ...]
    root: int

    def levels(self) -> tuple[tuple[int, ...], ...]:
        return (self.leaves, self.level1, self.level2, self.level3, self.level4, (self.root,))


@dataclass(frozen=True)
class MerklePath:
    """Audit path for one leaf: per level, the sibling digest and which side
    the climbing node sits on ("left" or "right")."""

    leaf_index: int
    siblings: tuple[int, ...]
    directions: tuple[str, ...]


def build_tree(leaves: list[int] | tuple[int, ...], params: PoseidonParams | None = None) -> MerkleTree32:
    """Build the depth-5 tree over exactly 32 leaves.

    Raises TreeError for any other leaf count and FieldError for
    non-canonical leaf values.
    """
    if len(leaves) != LEAF_COUNT:
        raise TreeError(f"expected exactly {LEAF_COUNT} leaves, got {len(leaves)}")
    base = tuple(field.check_element(v) for v in leaves)

    level1 = tuple(poseidon2(base[2 * i], base[2 * i + 1], params) for i in range(16))
    level2 = tuple(poseidon2(level1[2 * i], level1[2 * i + 1], params) for i in range(8))
    level3 = tuple(poseidon2(level2[2 * i], level2[2 * i + 1], params) for i in range(4))
    level4 = tuple(poseidon2(level3[2 * i], level3[2 * i + 1], params) for i in range(2))
    root = poseidon2(level4[0], level4[1], params)
    return MerkleTree32(base, level1, level2, level3, level4, root)


def root(tree: MerkleTree32) -> int:
    """The stored root; no recomputation."""
    return tree.root


def prove_membership(tree: MerkleTree32, index: int) -> MerklePath:
    """Audit path for ``leaves[index]``; index must be in [0, 32)."""
    if not isinstance(index, int) or not 0 <= index < LEAF_COUNT:
        raise TreeError(f"leaf index out of range: {index!r}")
    siblings = []
    directions = []
    levels = tree.levels()
    pos = index
    for depth in range(DEPTH):
        level = levels[depth]
        if pos % 2 == 0:
            siblings.append(level[pos + 1])
            directions.append("left")
        else:
            siblings.append(level[pos - 1])
            directions.append("right")
        pos //= 2
    return MerklePath(index, tuple(siblings), tuple(directions))


def verify_membership(
    root_value: int,
    leaf: int,
    path: MerklePath,
    params: PoseidonParams | None = None,
) -> bool:
    """True iff folding ``leaf`` up through ``path`` reproduces ``root_value``."""
    if len(path.siblings) != DEPTH or len(path.directions) != DEPTH:
        return False
    if not field.is_element(leaf) or not field.is_element(root_value):
        return False
    if not all(field.is_element(s) for s in path.siblings):
        return False
    node = leaf
    for sibling, direction in zip(path.siblings, path.directions):
        if direction == "left":
            node = poseidon2(node, sibling, params)
        elif direction == "right":
            node = poseidon2(sibling, node, params)
        else:
            return False
    return node == root_value
