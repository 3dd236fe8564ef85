# services/merkle_service.py
"""
Traditional (duplicate-last) and Trim Merkle tree construction.

Both builders store nodes in a flat arena: leaves occupy ordinals ``0..n-1`` in
input order, internal nodes follow in creation order, and every node records
its parent ordinal, its side under that parent and (for internal nodes) its two
child ordinals.

Traditional
    At every level of odd width greater than one, the last node is paired with
    itself. The duplicate is a second reference to the same node, so it costs a
    hash but no storage.

Trim
    At a level of odd width with no carry pending, the FIRST node is set aside
    as the carry and the rest are paired left to right. At a level of odd width
    with a carry pending, the carry joins the front of the level as a LEFT
    child, which restores even width. When the reduction reaches one node and a
    carry is still pending, root = hash(carry || node). At most one carry is
    ever pending, which gives exactly ``2n - 1`` nodes and ``n - 1`` internal
    hashes for every ``n``.
"""

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import structlog

from services.errors import EmptyLeaves, InvalidCount, ParseError, StoreCorrupt
from services.hashing_service import Digest, HashMode, hash_internal

logger = structlog.get_logger(__name__)


class TreeVariant(Enum):
    TRADITIONAL = "traditional"
    TRIM = "trim"

    @classmethod
    def parse(cls, value: str) -> "TreeVariant":
        try:
            return cls(value)
        except ValueError:
            raise ParseError(f"unknown tree variant {value!r} (expected trim|traditional)")


class NodeKind(Enum):
    LEAF = "leaf"
    INTERNAL = "internal"


class Side(Enum):
    LEFT = "L"
    RIGHT = "R"


@dataclass
class MerkleNode:
    digest: Digest
    kind: NodeKind
    level: int
    parent: Optional[int] = None
    side: Optional[Side] = None
    left: Optional[int] = None
    right: Optional[int] = None

    @property
    def is_duplicated_pairing(self) -> bool:
        return self.kind is NodeKind.INTERNAL and self.left == self.right


@dataclass(frozen=True)
class TreeStats:
    n: int
    total_nodes: int
    internal_hashes: int
    duplicated_pairings: int
    levels: int
    build_nanos: int = 0

    def as_dict(self, include_timing: bool = True) -> Dict[str, int]:
        stats = {
            "n": self.n,
            "total_nodes": self.total_nodes,
            "internal_hashes": self.internal_hashes,
            "duplicated_pairings": self.duplicated_pairings,
            "levels": self.levels,
        }
        if include_timing:
            stats["build_nanos"] = self.build_nanos
        return stats


@dataclass(frozen=True)
class MerkleTree:
    """A built tree. Treat as immutable; safe to share between readers."""

    variant: TreeVariant
    mode: HashMode
    n: int
    nodes: Tuple[MerkleNode, ...]
    root_index: int
    levels: Tuple[Tuple[int, ...], ...]
    stats: TreeStats

    def leaf_digests(self) -> List[Digest]:
        return [self.nodes[i].digest for i in range(self.n)]


@dataclass(frozen=True)
class TreeShape:
    """Level widths and hash counts of a construction, without any hashing."""

    widths: Tuple[int, ...]
    internal_hashes: int
    duplicated_pairings: int

    @property
    def total_nodes(self) -> int:
        return sum(self.widths)


class _ArenaBuilder:
    def __init__(self, leaves: Sequence[bytes], mode: HashMode):
        if not leaves:
            raise EmptyLeaves()
        self.mode = mode
        self.nodes: List[MerkleNode] = [
            MerkleNode(Digest(leaf), NodeKind.LEAF, 0) for leaf in leaves
        ]
        self.levels: List[List[int]] = [list(range(len(self.nodes)))]
        self.internal_hashes = 0
        self.duplicated_pairings = 0

    def join(self, left: int, right: int, level: int) -> int:
        left_node = self.nodes[left]
        right_node = self.nodes[right]
        index = len(self.nodes)
        digest = hash_internal(left_node.digest, right_node.digest, self.mode)
        self.nodes.append(MerkleNode(digest, NodeKind.INTERNAL, level, left=left, right=right))
        left_node.parent = index
        left_node.side = Side.LEFT
        if left == right:
            self.duplicated_pairings += 1
        else:
            right_node.parent = index
            right_node.side = Side.RIGHT
        self.internal_hashes += 1
        return index

    def pair_up(self, level_nodes: List[int], level: int) -> List[int]:
        return [
            self.join(level_nodes[i], level_nodes[i + 1], level)
            for i in range(0, len(level_nodes), 2)
        ]

    def finish(self, variant: TreeVariant, started: int) -> MerkleTree:
        n = len(self.levels[0])
        stats = TreeStats(
            n=n,
            total_nodes=len(self.nodes),
            internal_hashes=self.internal_hashes,
            duplicated_pairings=self.duplicated_pairings,
            levels=len(self.levels),
            build_nanos=time.perf_counter_ns() - started,
        )
        tree = MerkleTree(
            variant=variant,
            mode=self.mode,
            n=n,
            nodes=tuple(self.nodes),
            root_index=self.levels[-1][0],
            levels=tuple(tuple(level) for level in self.levels),
            stats=stats,
        )
        logger.debug(
            "Tree built",
            variant=variant.value,
            mode=self.mode.value,
            n=n,
            total_nodes=stats.total_nodes,
            internal_hashes=stats.internal_hashes,
            duplicated_pairings=stats.duplicated_pairings,
        )
        return tree


def build_traditional(leaves: Sequence[bytes], mode: HashMode = HashMode.DOMAIN_SEPARATED) -> MerkleTree:
    """Bitcoin-style tree: the last node of an odd level is paired with itself."""
    started = time.perf_counter_ns()
    builder = _ArenaBuilder(leaves, mode)
    level_nodes = builder.levels[0]
    depth = 0
    while len(level_nodes) > 1:
        depth += 1
        if len(level_nodes) % 2:
            level_nodes = level_nodes + [level_nodes[-1]]
        level_nodes = builder.pair_up(level_nodes, depth)
        builder.levels.append(level_nodes)
    return builder.finish(TreeVariant.TRADITIONAL, started)


def build_trim(leaves: Sequence[bytes], mode: HashMode = HashMode.DOMAIN_SEPARATED) -> MerkleTree:
    """Trim tree: odd levels set their first node aside instead of duplicating."""
    started = time.perf_counter_ns()
    builder = _ArenaBuilder(leaves, mode)
    level_nodes = builder.levels[0]
    carry: Optional[int] = None
    depth = 0
    while len(level_nodes) > 1:
        depth += 1
        if len(level_nodes) % 2:
            if carry is None:
                carry, level_nodes = level_nodes[0], level_nodes[1:]
            else:
                level_nodes = [carry] + level_nodes
                carry = None
        level_nodes = builder.pair_up(level_nodes, depth)
        builder.levels.append(level_nodes)
    if carry is not None:
        depth += 1
        level_nodes = [builder.join(carry, level_nodes[0], depth)]
        builder.levels.append(level_nodes)
    return builder.finish(TreeVariant.TRIM, started)


_BUILDERS = {
    TreeVariant.TRADITIONAL: build_traditional,
    TreeVariant.TRIM: build_trim,
}


def build_tree(
    leaves: Sequence[bytes],
    variant: TreeVariant = TreeVariant.TRIM,
    mode: HashMode = HashMode.DOMAIN_SEPARATED,
) -> MerkleTree:
    return _BUILDERS[variant](leaves, mode)


def root(tree: MerkleTree) -> Digest:
    return tree.nodes[tree.root_index].digest


def level_widths(tree: MerkleTree) -> List[int]:
    """
    Node count per level, leaves first. A pending Trim carry is reported in
    the level where it is consumed.
    """
    return [len(level) for level in tree.levels]


def tree_shape(n: int, variant: TreeVariant) -> TreeShape:
    """Replay either construction on counts alone."""
    if n < 1:
        raise InvalidCount(f"InvalidCount: leaf count must be >= 1, got {n}")
    widths = [n]
    width = n
    internal = 0
    duplicated = 0
    carry = False
    while width > 1:
        if width % 2:
            if variant is TreeVariant.TRADITIONAL:
                duplicated += 1
                width += 1
            elif carry:
                width += 1
                carry = False
            else:
                width -= 1
                carry = True
        width //= 2
        internal += width
        widths.append(width)
    if carry:
        internal += 1
        widths.append(1)
    return TreeShape(tuple(widths), internal, duplicated)


def expected_node_count(n: int, variant: TreeVariant) -> int:
    """Distinct stored nodes; Trim is always ``2n - 1``."""
    if n < 1:
        raise InvalidCount(f"InvalidCount: leaf count must be >= 1, got {n}")
    if variant is TreeVariant.TRIM:
        return 2 * n - 1
    return tree_shape(n, variant).total_nodes


def tree_to_dump(tree: MerkleTree) -> Dict[str, Any]:
    """Serializable tree document. Timing is left out so dumps are reproducible."""
    return {
        "variant": tree.variant.value,
        "mode": tree.mode.value,
        "n": tree.n,
        "levels": [[tree.nodes[i].digest.hex() for i in level] for level in tree.levels],
        "root": root(tree).hex(),
        "stats": tree.stats.as_dict(include_timing=False),
    }


def tree_from_dump(document: Dict[str, Any], source: str = "<tree dump>") -> MerkleTree:
    """Rebuild a tree from its leaf level and check it against the recorded root."""
    try:
        variant = TreeVariant.parse(document["variant"])
        mode = HashMode.parse(document["mode"])
        n = int(document["n"])
        leaf_hex = document["levels"][0]
        recorded_root = Digest.from_hex(document["root"])
    except (KeyError, IndexError, TypeError) as e:
        raise ParseError(f"{source}: tree dump is missing a field ({e})")
    except ValueError as e:
        if e.__class__ is not ValueError:
            raise
        raise ParseError(f"{source}: tree dump has a bad value ({e})")
    if len(leaf_hex) != n:
        raise StoreCorrupt(source, f"leaf level holds {len(leaf_hex)} digests, n is {n}")
    tree = build_tree([Digest.from_hex(h) for h in leaf_hex], variant, mode)
    if root(tree) != recorded_root:
        raise StoreCorrupt(source, "recorded root does not match the leaf level")
    return tree
