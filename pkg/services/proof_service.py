# services/proof_service.py
"""
Inclusion proofs and tamper detection over either tree variant.

A proof records, per step, the sibling digest and the side the SIBLING sits on.
Trim trees are irregular (a carry can join at any level), so sides are stored
rather than derived from the leaf index. Proofs also carry variant, mode and
leaf count, making verification independent of the tree.
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Set, Tuple

import structlog

from services.errors import IndexOutOfRange, LengthMismatch, ParseError
from services.hashing_service import DIGEST_SIZE, Digest, HashMode, hash_internal
from services.merkle_service import (
    MerkleTree,
    NodeKind,
    Side,
    TreeVariant,
    build_tree,
    root,
)

logger = structlog.get_logger(__name__)

PROOF_VERSION = 1
# version(1) + variant(1) + mode(1) + n(4) + leaf_index(4) + leaf_digest(32) + side bitmap(8)
PROOF_HEADER_BYTES = 51


@dataclass(frozen=True)
class ProofStep:
    sibling: Digest
    side: Side


@dataclass(frozen=True)
class InclusionProof:
    leaf_index: int
    leaf_digest: Digest
    path: Tuple[ProofStep, ...]
    variant: TreeVariant
    mode: HashMode
    n: int

    @property
    def depth(self) -> int:
        return len(self.path)


@dataclass(frozen=True)
class VerificationOutcome:
    valid: bool
    computed_root: Digest
    expected_root: Digest
    steps_applied: int


def generate_proof(tree: MerkleTree, leaf_index: int) -> InclusionProof:
    """Walk parent links from the leaf to the root, collecting the other child at each join."""
    if not 0 <= leaf_index < tree.n:
        raise IndexOutOfRange(leaf_index, tree.n)
    nodes = tree.nodes
    path = []
    current = leaf_index
    node = nodes[current]
    while node.parent is not None:
        parent = nodes[node.parent]
        if parent.left == parent.right:
            # duplicated pairing: the node is its own sibling
            path.append(ProofStep(node.digest, Side.RIGHT))
        elif parent.left == current:
            path.append(ProofStep(nodes[parent.right].digest, Side.RIGHT))
        else:
            path.append(ProofStep(nodes[parent.left].digest, Side.LEFT))
        current = node.parent
        node = parent
    return InclusionProof(
        leaf_index=leaf_index,
        leaf_digest=nodes[leaf_index].digest,
        path=tuple(path),
        variant=tree.variant,
        mode=tree.mode,
        n=tree.n,
    )


def verify_proof(proof: InclusionProof, expected_root: Digest) -> VerificationOutcome:
    """Fold the path from the leaf upward. Never raises for a bad proof."""
    computed = proof.leaf_digest
    for step in proof.path:
        if step.side is Side.LEFT:
            computed = hash_internal(step.sibling, computed, proof.mode)
        else:
            computed = hash_internal(computed, step.sibling, proof.mode)
    valid = bytes(computed) == bytes(expected_root)
    if not valid:
        logger.debug(
            "Proof rejected",
            leaf_index=proof.leaf_index,
            computed_root=computed.hex(),
            expected_root=bytes(expected_root).hex(),
        )
    return VerificationOutcome(
        valid=valid,
        computed_root=computed,
        expected_root=Digest(expected_root),
        steps_applied=len(proof.path),
    )


def detect_tamper(tree: MerkleTree, leaves: Sequence[bytes]) -> Set[int]:
    """Leaf indices whose supplied digest disagrees with the tree; empty when clean.

    The supplied leaves are rebuilt under the tree's variant and mode, giving an
    arena with the same topology, and mismatching subtrees are descended from
    the root.
    """
    if len(leaves) != tree.n:
        raise LengthMismatch(tree.n, len(leaves))
    rebuilt = build_tree(leaves, tree.variant, tree.mode)
    if root(rebuilt) == root(tree):
        return set()

    suspects: Set[int] = set()
    pending = [tree.root_index]
    while pending:
        index = pending.pop()
        stored = tree.nodes[index]
        if stored.digest == rebuilt.nodes[index].digest:
            continue
        if stored.kind is NodeKind.LEAF:
            suspects.add(index)
            continue
        pending.append(stored.left)
        if stored.right != stored.left:
            pending.append(stored.right)
    logger.info("Tampered leaves located", variant=tree.variant.value, suspects=sorted(suspects))
    return suspects


def proof_size_bytes(proof: InclusionProof) -> int:
    return DIGEST_SIZE * len(proof.path) + PROOF_HEADER_BYTES


def path_depths(tree: MerkleTree) -> List[int]:
    """Proof length for every leaf, by counting parent hops."""
    depths = []
    for index in range(tree.n):
        depth = 0
        parent = tree.nodes[index].parent
        while parent is not None:
            depth += 1
            parent = tree.nodes[parent].parent
        depths.append(depth)
    return depths


def proof_to_document(proof: InclusionProof, tree_root: Optional[Digest] = None) -> Dict[str, Any]:
    document = {
        "version": PROOF_VERSION,
        "variant": proof.variant.value,
        "mode": proof.mode.value,
        "n": proof.n,
        "leaf_index": proof.leaf_index,
        "leaf_digest": proof.leaf_digest.hex(),
        "path": [{"sibling": step.sibling.hex(), "side": step.side.value} for step in proof.path],
    }
    if tree_root is not None:
        document["root"] = bytes(tree_root).hex()
    return document


def proof_from_document(document: Dict[str, Any]) -> InclusionProof:
    try:
        version = document["version"]
        if version != PROOF_VERSION:
            raise ParseError(f"unsupported proof version {version!r}")
        path = tuple(
            ProofStep(Digest.from_hex(step["sibling"]), Side(step["side"]))
            for step in document["path"]
        )
        return InclusionProof(
            leaf_index=int(document["leaf_index"]),
            leaf_digest=Digest.from_hex(document["leaf_digest"]),
            path=path,
            variant=TreeVariant.parse(document["variant"]),
            mode=HashMode.parse(document["mode"]),
            n=int(document["n"]),
        )
    except ParseError:
        raise
    except (KeyError, TypeError) as e:
        raise ParseError(f"proof document is missing a field ({e})")
    except ValueError as e:
        # MalformedDigest is a ValueError too and already names the problem
        if e.__class__ is not ValueError:
            raise
        raise ParseError(f"proof document has a bad value ({e})")
