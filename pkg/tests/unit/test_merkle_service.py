# tests/unit/test_merkle_service.py
import pytest

from services.errors import EmptyLeaves, InvalidCount, ParseError, StoreCorrupt
from services.hashing_service import Digest, HashMode, hash_leaf
from services.merkle_service import (
    NodeKind,
    Side,
    TreeVariant,
    build_traditional,
    build_tree,
    build_trim,
    expected_node_count,
    level_widths,
    root,
    tree_from_dump,
    tree_shape,
    tree_to_dump,
)
from tests.context import random_digests, reference_root

TRIM_FIVE_PLAIN = "752821240785a10ff69866c51c9a6127818248942981c5e8c703e26467119712"
TRADITIONAL_FIVE_PLAIN = "33d6017410a573a22936000d1a87c7407127e036dcd7762ea42078b856bac483"
TRIM_THREE_PLAIN = "b5c1ea12d93ef670b587f6d9ad906c6f7b002b04c0f9dd6b238a5630d70d74c6"
TRIM_FIVE_DOMSEP = "95bd755f22ddfd8b6e37952a251a57932f99e42a42aab21717cdf9d134dcacfa"


def is_power_of_two(n):
    return n & (n - 1) == 0


class TestTraditionalBuild:
    def test_perfect_tree_of_four(self, make_leaves):
        # Act
        tree = build_traditional(make_leaves(4))

        # Assert
        assert level_widths(tree) == [4, 2, 1]
        assert tree.stats.internal_hashes == 3
        assert tree.stats.duplicated_pairings == 0

    def test_five_leaves_duplicate_twice(self, make_leaves):
        # Act
        tree = build_traditional(make_leaves(5))

        # Assert
        assert level_widths(tree) == [5, 3, 2, 1]
        assert tree.stats.internal_hashes == 6
        assert tree.stats.duplicated_pairings == 2
        assert tree.stats.total_nodes == 11

    def test_three_leaves_duplicate_once(self, make_leaves):
        tree = build_traditional(make_leaves(3))
        assert tree.stats.internal_hashes == 3
        assert tree.stats.duplicated_pairings == 1

    def test_duplicated_pairing_references_the_same_node(self, make_leaves):
        # Act
        tree = build_traditional(make_leaves(3))

        # Assert
        duplicated = [node for node in tree.nodes if node.is_duplicated_pairing]
        assert len(duplicated) == 1
        assert duplicated[0].left == duplicated[0].right == 2

    def test_golden_root_five_plain(self, make_leaves):
        tree = build_traditional(make_leaves(5), HashMode.PLAIN)
        assert root(tree).hex() == TRADITIONAL_FIVE_PLAIN

    def test_empty_leaves_rejected(self):
        with pytest.raises(EmptyLeaves) as exc:
            build_traditional([])
        assert "EmptyLeaves" in str(exc.value)


class TestTrimBuild:
    def test_five_leaves_sets_first_aside(self, make_leaves):
        # Arrange
        leaves = make_leaves(5)

        # Act
        tree = build_trim(leaves, HashMode.PLAIN)

        # Assert
        root_node = tree.nodes[tree.root_index]
        assert root_node.left == 0
        assert tree.stats.total_nodes == 9
        assert tree.stats.internal_hashes == 4
        assert tree.stats.duplicated_pairings == 0
        assert level_widths(tree) == [5, 2, 1, 1]
        assert root(tree).hex() == TRIM_FIVE_PLAIN

    def test_five_leaves_pairing_structure(self, make_leaves):
        # Act
        tree = build_trim(make_leaves(5))

        # Assert
        nodes = tree.nodes
        a, b = tree.levels[1]
        (c,) = tree.levels[2]
        assert (nodes[a].left, nodes[a].right) == (1, 2)
        assert (nodes[b].left, nodes[b].right) == (3, 4)
        assert (nodes[c].left, nodes[c].right) == (a, b)
        assert (nodes[tree.root_index].left, nodes[tree.root_index].right) == (0, c)

    def test_three_leaves(self, make_leaves):
        # Act
        tree = build_trim(make_leaves(3), HashMode.PLAIN)

        # Assert
        assert tree.stats.total_nodes == 5
        assert level_widths(tree) == [3, 1, 1]
        assert root(tree).hex() == TRIM_THREE_PLAIN

    def test_golden_root_five_domain_separated(self, make_leaves):
        tree = build_trim(make_leaves(5, HashMode.DOMAIN_SEPARATED), HashMode.DOMAIN_SEPARATED)
        assert root(tree).hex() == TRIM_FIVE_DOMSEP

    def test_eleven_leaves_carry_trace(self, rng):
        # Act
        tree = build_trim(random_digests(rng, 11))

        # Assert
        assert level_widths(tree) == [11, 5, 3, 1, 1]
        assert tree.stats.internal_hashes == 10
        assert tree.stats.total_nodes == 21

    def test_four_leaves_is_perfect(self, make_leaves):
        assert level_widths(build_trim(make_leaves(4))) == [4, 2, 1]

    def test_single_leaf_is_root(self):
        # Arrange
        leaf = hash_leaf(b"only")

        # Act
        tree = build_trim([leaf])

        # Assert
        assert root(tree) == leaf
        assert tree.stats.internal_hashes == 0
        assert tree.stats.total_nodes == 1

    def test_empty_leaves_rejected(self):
        with pytest.raises(EmptyLeaves):
            build_trim([])

    def test_differs_from_traditional_at_five(self, make_leaves):
        leaves = make_leaves(5)
        assert root(build_trim(leaves)) != root(build_traditional(leaves))

    @pytest.mark.parametrize("n", range(1, 130))
    def test_node_and_hash_counts(self, rng, n):
        tree = build_trim(random_digests(rng, n))
        assert tree.stats.total_nodes == 2 * n - 1
        assert tree.stats.internal_hashes == n - 1
        assert tree.stats.duplicated_pairings == 0

    @pytest.mark.parametrize("n", [2, 3, 5, 6, 7, 10, 12, 33, 100])
    def test_no_internal_node_has_identical_children(self, rng, n):
        tree = build_trim(random_digests(rng, n))
        for node in tree.nodes:
            if node.kind is NodeKind.INTERNAL:
                assert node.left != node.right

    @pytest.mark.parametrize("variant", list(TreeVariant))
    @pytest.mark.parametrize("n", [1, 2, 5, 6, 17])
    def test_every_leaf_reaches_the_root(self, rng, variant, n):
        # Act
        tree = build_tree(random_digests(rng, n), variant)

        # Assert
        for index in range(n):
            current = index
            while tree.nodes[current].parent is not None:
                current = tree.nodes[current].parent
            assert current == tree.root_index
        root_node = tree.nodes[tree.root_index]
        assert root_node.parent is None and root_node.side is None

    def test_sides_match_child_positions(self, rng):
        tree = build_trim(random_digests(rng, 13))
        for index, node in enumerate(tree.nodes):
            if node.parent is None:
                continue
            parent = tree.nodes[node.parent]
            expected = Side.LEFT if parent.left == index else Side.RIGHT
            assert node.side is expected


class TestVariantEquivalence:
    @pytest.mark.parametrize("n", [1, 2, 4, 8, 16, 32, 64, 128, 256])
    def test_power_of_two_roots_match(self, rng, mode, n):
        leaves = random_digests(rng, n)
        assert root(build_trim(leaves, mode)) == root(build_traditional(leaves, mode))

    @pytest.mark.parametrize("n", range(1, 65))
    def test_reference_fold_agrees(self, rng, mode, n):
        # Arrange
        leaves = random_digests(rng, n)
        domsep = mode is HashMode.DOMAIN_SEPARATED

        # Act
        trim = build_trim(leaves, mode)
        traditional = build_traditional(leaves, mode)

        # Assert
        assert bytes(root(trim)) == reference_root(leaves, "trim", domsep)
        assert bytes(root(traditional)) == reference_root(leaves, "traditional", domsep)

    @pytest.mark.parametrize("n", range(1, 200))
    def test_traditional_hashes_at_least_trim(self, rng, n):
        # Act
        stats = build_traditional(random_digests(rng, n)).stats

        # Assert
        if is_power_of_two(n):
            assert stats.internal_hashes == n - 1
        else:
            assert stats.internal_hashes > n - 1

    def test_builds_are_deterministic(self, rng):
        leaves = random_digests(rng, 37)
        for variant in TreeVariant:
            assert root(build_tree(leaves, variant)) == root(build_tree(list(leaves), variant))

    def test_leaf_order_sensitivity(self, rng):
        for _ in range(1000):
            # Arrange
            n = rng.randint(2, 16)
            leaves = random_digests(rng, n)
            permutation = list(range(n))
            while permutation == list(range(n)):
                rng.shuffle(permutation)
            shuffled = [leaves[i] for i in permutation]

            # Act & Assert
            for variant in TreeVariant:
                assert root(build_tree(leaves, variant)) != root(build_tree(shuffled, variant))


class TestTreeShape:
    def test_expected_node_count_trim(self):
        assert expected_node_count(3, TreeVariant.TRIM) == 5
        assert expected_node_count(5, TreeVariant.TRIM) == 9
        assert expected_node_count(1, TreeVariant.TRIM) == 1

    def test_expected_node_count_traditional(self):
        assert expected_node_count(5, TreeVariant.TRADITIONAL) == 11
        assert expected_node_count(4, TreeVariant.TRADITIONAL) == 7

    def test_expected_node_count_rejects_zero(self):
        with pytest.raises(InvalidCount):
            expected_node_count(0, TreeVariant.TRIM)

    @pytest.mark.parametrize("variant", list(TreeVariant))
    @pytest.mark.parametrize("n", list(range(1, 70)) + [255, 256, 257, 1000])
    def test_shape_matches_build(self, rng, variant, n):
        # Act
        shape = tree_shape(n, variant)
        tree = build_tree(random_digests(rng, n), variant)

        # Assert
        assert list(shape.widths) == level_widths(tree)
        assert shape.internal_hashes == tree.stats.internal_hashes
        assert shape.duplicated_pairings == tree.stats.duplicated_pairings
        assert shape.total_nodes == tree.stats.total_nodes == expected_node_count(n, variant)


class TestTreeDump:
    def test_dump_fields(self, make_leaves):
        # Arrange
        tree = build_trim(make_leaves(5))

        # Act
        dump = tree_to_dump(tree)

        # Assert
        assert dump["variant"] == "trim"
        assert dump["mode"] == "plain" or dump["mode"] == "domsep"
        assert dump["n"] == 5
        assert [len(level) for level in dump["levels"]] == [5, 2, 1, 1]
        assert dump["root"] == root(tree).hex()
        assert dump["stats"]["total_nodes"] == 9
        assert "build_nanos" not in dump["stats"]

    def test_load_rebuilds_same_tree(self, make_leaves):
        # Arrange
        tree = build_traditional(make_leaves(6), HashMode.PLAIN)

        # Act
        loaded = tree_from_dump(tree_to_dump(tree))

        # Assert
        assert loaded.variant is TreeVariant.TRADITIONAL
        assert loaded.mode is HashMode.PLAIN
        assert root(loaded) == root(tree)

    def test_load_detects_root_mismatch(self, make_leaves):
        # Arrange
        dump = tree_to_dump(build_trim(make_leaves(5)))
        dump["root"] = "00" * 32

        # Act & Assert
        with pytest.raises(StoreCorrupt):
            tree_from_dump(dump)

    def test_load_rejects_missing_fields(self):
        with pytest.raises(ParseError):
            tree_from_dump({"variant": "trim"})

    def test_load_rejects_unknown_variant(self, make_leaves):
        dump = tree_to_dump(build_trim(make_leaves(2)))
        dump["variant"] = "sparse"
        with pytest.raises(ParseError):
            tree_from_dump(dump)

    def test_load_rejects_non_integer_count(self, make_leaves):
        dump = tree_to_dump(build_trim(make_leaves(5)))
        dump["n"] = "five"
        with pytest.raises(ParseError) as exc:
            tree_from_dump(dump, source="t.json")
        assert "t.json" in str(exc.value)

    def test_leaf_digests_preserve_order(self, make_leaves):
        leaves = make_leaves(4)
        assert build_trim(leaves).leaf_digests() == [Digest(leaf) for leaf in leaves]
