from __future__ import annotations

import random

import pytest

from zkrollup import field, merkle, poseidon


def oracle_root(leaves: list[int]) -> int:
    """Independent straight-line construction: four explicit halving loops
    over poseidon2, then the final compression."""
    assert len(leaves) == 32
    level1 = [0] * 16
    for i in range(16):
        level1[i] = poseidon.poseidon2(leaves[2 * i], leaves[2 * i + 1])
    level2 = [0] * 8
    for i in range(8):
        level2[i] = poseidon.poseidon2(level1[2 * i], level1[2 * i + 1])
    level3 = [0] * 4
    for i in range(4):
        level3[i] = poseidon.poseidon2(level2[2 * i], level2[2 * i + 1])
    level4 = [0] * 2
    for i in range(2):
        level4[i] = poseidon.poseidon2(level3[2 * i], level3[2 * i + 1])
    return poseidon.poseidon2(level4[0], level4[1])


def rand_leaves(rng: random.Random) -> list[int]:
    return [rng.randrange(field.P) for _ in range(32)]


def test_matches_oracle_on_random_vectors(rng):
    for _ in range(50):
        leaves = rand_leaves(rng)
        assert merkle.build_tree(leaves).root == oracle_root(leaves)


def test_fixed_vector_matches_oracle():
    leaves = list(range(32))
    tree = merkle.build_tree(leaves)
    assert tree.root == oracle_root(leaves)
    assert merkle.root(tree) == tree.root


def test_same_leaves_same_root(rng):
    leaves = rand_leaves(rng)
    assert merkle.build_tree(leaves).root == merkle.build_tree(leaves).root


def test_level_invariants(rng):
    leaves = rand_leaves(rng)
    tree = merkle.build_tree(leaves)
    assert len(tree.level1) == 16 and len(tree.level2) == 8
    assert len(tree.level3) == 4 and len(tree.level4) == 2
    for i in range(16):
        assert tree.level1[i] == poseidon.poseidon2(leaves[2 * i], leaves[2 * i + 1])
    assert tree.root == poseidon.poseidon2(tree.level4[0], tree.level4[1])


def test_swapping_distinct_leaves_changes_root(rng):
    for _ in range(100):
        leaves = rand_leaves(rng)
        i, j = rng.sample(range(32), 2)
        if leaves[i] == leaves[j]:
            continue
        swapped = list(leaves)
        swapped[i], swapped[j] = swapped[j], swapped[i]
        assert merkle.build_tree(leaves).root != merkle.build_tree(swapped).root


def test_sensitivity_every_position(rng):
    leaves = rand_leaves(rng)
    base = merkle.build_tree(leaves).root
    for pos in range(32):
        for _ in range(2):
            mutated = list(leaves)
            new = rng.randrange(field.P)
            if new == leaves[pos]:
                new = (new + 1) % field.P
            mutated[pos] = new
            assert merkle.build_tree(mutated).root != base


def test_wrong_leaf_count_rejected():
    for n in (0, 1, 31, 33, 64):
        with pytest.raises(merkle.TreeError):
            merkle.build_tree([1] * n)


def test_non_canonical_leaf_rejected():
    leaves = [0] * 32
    leaves[5] = field.P
    with pytest.raises(field.FieldError):
        merkle.build_tree(leaves)


def test_construction_does_exactly_31_compressions(rng):
    for _ in range(10):
        leaves = rand_leaves(rng)
        before = poseidon.compression_calls()
        merkle.build_tree(leaves)
        assert poseidon.compression_calls() - before == 31


def test_root_accessor_does_no_recomputation(rng):
    tree = merkle.build_tree(rand_leaves(rng))
    before = poseidon.compression_calls()
    for _ in range(5):
        assert merkle.root(tree) == tree.root
    assert poseidon.compression_calls() == before


def test_membership_exhaustive_indices(rng):
    # all 32 indices across 100 random trees
    for _ in range(100):
        leaves = rand_leaves(rng)
        tree = merkle.build_tree(leaves)
        for index in range(32):
            path = merkle.prove_membership(tree, index)
            assert merkle.verify_membership(tree.root, leaves[index], path)


def test_path_structure():
    tree = merkle.build_tree(list(range(32)))
    path = merkle.prove_membership(tree, 0)
    assert len(path.siblings) == 5
    assert len(path.directions) == 5
    assert path.directions[0] == "left"
    assert path.siblings[0] == tree.leaves[1]


def test_membership_index_out_of_range():
    tree = merkle.build_tree(list(range(32)))
    for bad in (-1, 32, 100):
        with pytest.raises(merkle.TreeError):
            merkle.prove_membership(tree, bad)


def test_perturbed_sibling_fails(rng):
    leaves = rand_leaves(rng)
    tree = merkle.build_tree(leaves)
    for _ in range(20):
        index = rng.randrange(32)
        path = merkle.prove_membership(tree, index)
        level = rng.randrange(5)
        siblings = list(path.siblings)
        siblings[level] = (siblings[level] + 1) % field.P
        bad = merkle.MerklePath(index, tuple(siblings), path.directions)
        assert not merkle.verify_membership(tree.root, leaves[index], bad)


def test_perturbed_leaf_and_root_fail(rng):
    leaves = rand_leaves(rng)
    tree = merkle.build_tree(leaves)
    path = merkle.prove_membership(tree, 7)
    assert not merkle.verify_membership(tree.root, (leaves[7] + 1) % field.P, path)
    assert not merkle.verify_membership((tree.root + 1) % field.P, leaves[7], path)


def test_verify_rejects_malformed_paths():
    tree = merkle.build_tree(list(range(32)))
    short = merkle.MerklePath(0, tree.levels()[0][:4], ("left",) * 4)
    assert not merkle.verify_membership(tree.root, 0, short)
    bad_dir = merkle.MerklePath(0, merkle.prove_membership(tree, 0).siblings, ("up",) * 5)
    assert not merkle.verify_membership(tree.root, 0, bad_dir)
