# services/chain_service.py
"""
Minimal block and chain plumbing around the Merkle builders.

Mempool files are JSON lines ``{"id": ..., "payload_hex": ...}``. Blocks hold at
most ``BLOCK_CAP_BYTES`` of summed payload, are packed greedily in mempool
order, and are persisted as ``block_<k>.json`` (k from 1) in a store directory.
No mining: the nonce is always zero.
"""

import json
import re
import struct
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from services.errors import (
    DuplicateId,
    EmptyChainStore,
    EmptyMempool,
    IoError,
    OversizedTransaction,
    ParseError,
    StoreCorrupt,
    ValidationFailure,
)
from services.hashing_service import ZERO_DIGEST, Digest, HashMode, hash_leaf
from services.merkle_service import TreeVariant, build_tree, root

logger = structlog.get_logger(__name__)

BLOCK_CAP_BYTES = 1_000_000
BLOCK_VERSION = 1
# version, prev_hash, merkle_root, timestamp, nonce, tx_count (all little-endian)
HEADER_LAYOUT = struct.Struct("<I32s32sQQI")
BLOCK_FILE_PATTERN = re.compile(r"^block_(\d+)\.json$")
HEX_PATTERN = re.compile(r"[0-9a-fA-F]*")
# upper bounds of the unsigned header fields in HEADER_LAYOUT
HEADER_FIELD_LIMITS = {"version": 2**32, "timestamp": 2**64, "nonce": 2**64, "tx_count": 2**32}

Clock = Callable[[], float]


@dataclass(frozen=True)
class TransactionRecord:
    id: str
    payload: bytes

    @property
    def byte_size(self) -> int:
        return len(self.payload)


@dataclass(frozen=True)
class BlockHeader:
    version: int
    prev_hash: Digest
    merkle_root: Digest
    timestamp: int
    nonce: int
    tx_count: int

    def preimage(self) -> bytes:
        return HEADER_LAYOUT.pack(
            self.version,
            bytes(self.prev_hash),
            bytes(self.merkle_root),
            self.timestamp,
            self.nonce,
            self.tx_count,
        )

    def digest(self, mode: HashMode) -> Digest:
        return hash_leaf(self.preimage(), mode)


@dataclass(frozen=True)
class Block:
    header: BlockHeader
    transactions: tuple
    variant: TreeVariant
    mode: HashMode

    @property
    def payload_bytes(self) -> int:
        return sum(tx.byte_size for tx in self.transactions)

    def header_digest(self) -> Digest:
        return self.header.digest(self.mode)


@dataclass(frozen=True)
class BlockCheck:
    index: int
    passed: bool
    failed_check: Optional[str] = None
    detail: str = ""


@dataclass
class ChainReport:
    checks: List[BlockCheck] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[BlockCheck]:
        return [check for check in self.checks if not check.passed]

    def raise_for_failures(self) -> None:
        if not self.valid:
            raise ValidationFailure(self.failures)


def leaf_digests(transactions: Iterable[TransactionRecord], mode: HashMode) -> List[Digest]:
    return [hash_leaf(tx.payload, mode) for tx in transactions]


def _parse_transaction(document: Any, line: int) -> TransactionRecord:
    if not isinstance(document, dict):
        raise ParseError("expected an object with id and payload_hex", line)
    tx_id = document.get("id")
    payload_hex = document.get("payload_hex")
    if not isinstance(tx_id, str) or not tx_id:
        raise ParseError("id must be a non-empty string", line)
    if not isinstance(payload_hex, str):
        raise ParseError("payload_hex must be a string", line)
    if len(payload_hex) % 2:
        raise ParseError("payload_hex has odd length", line)
    if not HEX_PATTERN.fullmatch(payload_hex):
        raise ParseError("payload_hex is not hexadecimal", line)
    return TransactionRecord(tx_id, bytes.fromhex(payload_hex))


def ingest_transactions(path) -> List[TransactionRecord]:
    """Read a JSON-lines mempool file, keeping file order."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise IoError(path, e.strerror or str(e))
    except UnicodeDecodeError as e:
        raise ParseError(f"{path} is not UTF-8 ({e.reason})")

    records = []
    seen = set()
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            document = json.loads(line)
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON ({e.msg})", line_no)
        record = _parse_transaction(document, line_no)
        if record.id in seen:
            raise DuplicateId(record.id, line_no)
        if record.byte_size > BLOCK_CAP_BYTES:
            raise OversizedTransaction(record.id, record.byte_size, BLOCK_CAP_BYTES)
        seen.add(record.id)
        records.append(record)
    logger.info("Mempool ingested", path=str(path), transactions=len(records))
    return records


def write_mempool(path, transactions: Iterable[TransactionRecord]) -> None:
    path = Path(path)
    lines = [
        json.dumps({"id": tx.id, "payload_hex": tx.payload.hex()}) for tx in transactions
    ]
    try:
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as e:
        raise IoError(path, e.strerror or str(e))


def synthetic_mempool(count: int, payload_bytes: int = 256, seed: int = 0) -> List[TransactionRecord]:
    """Fixed-size pseudo-random transactions from a seeded PCG64 stream."""
    rng = np.random.Generator(np.random.PCG64(seed))
    return [TransactionRecord(f"tx{i:06d}", rng.bytes(payload_bytes)) for i in range(count)]


def _seal(
    transactions: List[TransactionRecord],
    variant: TreeVariant,
    mode: HashMode,
    prev_hash: Digest,
    timestamp: int,
) -> Block:
    tree = build_tree(leaf_digests(transactions, mode), variant, mode)
    header = BlockHeader(
        version=BLOCK_VERSION,
        prev_hash=prev_hash,
        merkle_root=root(tree),
        timestamp=timestamp,
        nonce=0,
        tx_count=len(transactions),
    )
    return Block(header, tuple(transactions), variant, mode)


def assemble_blocks(
    mempool: Sequence[TransactionRecord],
    variant: TreeVariant = TreeVariant.TRIM,
    mode: HashMode = HashMode.DOMAIN_SEPARATED,
    prev: Optional[Digest] = None,
    clock: Clock = time.time,
) -> List[Block]:
    """Greedy first-fit packing in arrival order, each block chained to the last."""
    if not mempool:
        raise EmptyMempool()

    batches: List[List[TransactionRecord]] = [[]]
    running = 0
    for tx in mempool:
        if tx.byte_size > BLOCK_CAP_BYTES:
            raise OversizedTransaction(tx.id, tx.byte_size, BLOCK_CAP_BYTES)
        if batches[-1] and running + tx.byte_size > BLOCK_CAP_BYTES:
            batches.append([])
            running = 0
        batches[-1].append(tx)
        running += tx.byte_size

    blocks = []
    prev_hash = prev if prev is not None else ZERO_DIGEST
    for batch in batches:
        block = _seal(batch, variant, mode, prev_hash, int(clock()))
        blocks.append(block)
        prev_hash = block.header_digest()
    logger.info(
        "Blocks assembled",
        blocks=len(blocks),
        transactions=len(mempool),
        variant=variant.value,
        mode=mode.value,
    )
    return blocks


def block_to_document(block: Block) -> Dict[str, Any]:
    header = block.header
    return {
        "header": {
            "version": header.version,
            "prev_hash": header.prev_hash.hex(),
            "merkle_root": header.merkle_root.hex(),
            "timestamp": header.timestamp,
            "nonce": header.nonce,
            "tx_count": header.tx_count,
        },
        "variant": block.variant.value,
        "mode": block.mode.value,
        "transactions": [
            {"id": tx.id, "payload_hex": tx.payload.hex()} for tx in block.transactions
        ],
    }


def _header_field(header: Dict[str, Any], name: str) -> int:
    value = header[name]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"header {name} must be an integer, got {value!r}")
    if not 0 <= value < HEADER_FIELD_LIMITS[name]:
        raise ValueError(f"header {name} out of range: {value}")
    return value


def block_from_document(document: Dict[str, Any]) -> Block:
    header = document["header"]
    transactions = []
    for tx in document["transactions"]:
        payload_hex = tx["payload_hex"]
        if len(payload_hex) % 2 or not HEX_PATTERN.fullmatch(payload_hex):
            raise ValueError("payload_hex is not an even-length hex string")
        transactions.append(TransactionRecord(tx["id"], bytes.fromhex(payload_hex)))
    return Block(
        header=BlockHeader(
            version=_header_field(header, "version"),
            prev_hash=Digest.from_hex(header["prev_hash"]),
            merkle_root=Digest.from_hex(header["merkle_root"]),
            timestamp=_header_field(header, "timestamp"),
            nonce=_header_field(header, "nonce"),
            tx_count=_header_field(header, "tx_count"),
        ),
        transactions=tuple(transactions),
        variant=TreeVariant.parse(document["variant"]),
        mode=HashMode.parse(document["mode"]),
    )


class ChainStore:
    """Directory of numbered block files. One writer at a time."""

    def __init__(self, directory):
        self.directory = Path(directory)

    def _numbered_paths(self) -> List[Tuple[int, Path]]:
        if not self.directory.is_dir():
            raise IoError(self.directory, "chain store directory does not exist")
        numbered = []
        for path in self.directory.iterdir():
            match = BLOCK_FILE_PATTERN.match(path.name)
            if match:
                numbered.append((int(match.group(1)), path))
        return sorted(numbered)

    def block_paths(self) -> List[Path]:
        return [path for _, path in self._numbered_paths()]

    def next_number(self) -> int:
        """One past the highest stored block number, so gaps are never refilled."""
        numbered = self._numbered_paths()
        return numbered[-1][0] + 1 if numbered else 1

    def load_blocks(self) -> List[Block]:
        blocks = []
        for path in self.block_paths():
            try:
                document = json.loads(path.read_text(encoding="utf-8"))
            except OSError as e:
                raise StoreCorrupt(path, e.strerror or str(e))
            except (UnicodeDecodeError, json.JSONDecodeError) as e:
                raise StoreCorrupt(path, f"not a JSON document ({e})")
            try:
                blocks.append(block_from_document(document))
            except (KeyError, TypeError, ValueError) as e:
                raise StoreCorrupt(path, f"malformed block ({e})")
        return blocks

    def tip(self) -> Optional[Digest]:
        """Header digest of the last stored block, or None for an empty store."""
        if not self.directory.exists():
            return None
        blocks = self.load_blocks()
        return blocks[-1].header_digest() if blocks else None

    def write_blocks(self, blocks: Sequence[Block]) -> List[Path]:
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise IoError(self.directory, e.strerror or str(e))
        start = self.next_number()
        written = []
        for offset, block in enumerate(blocks):
            path = self.directory / f"block_{start + offset}.json"
            try:
                with path.open("x", encoding="utf-8") as handle:
                    handle.write(json.dumps(block_to_document(block), indent=2) + "\n")
            except FileExistsError:
                raise StoreCorrupt(path, "block file already exists")
            except OSError as e:
                raise IoError(path, e.strerror or str(e))
            written.append(path)
        logger.info("Blocks persisted", directory=str(self.directory), count=len(written))
        return written


def _check_block(block: Block, index: int, expected_prev: Digest) -> BlockCheck:
    header = block.header
    if header.tx_count != len(block.transactions):
        return BlockCheck(
            index, False, "tx_count",
            f"header says {header.tx_count}, block holds {len(block.transactions)}",
        )
    if block.payload_bytes > BLOCK_CAP_BYTES:
        return BlockCheck(index, False, "payload_cap", f"{block.payload_bytes} bytes")
    if not block.transactions:
        return BlockCheck(index, False, "merkle_root", "block has no transactions")
    tree = build_tree(leaf_digests(block.transactions, block.mode), block.variant, block.mode)
    if root(tree) != header.merkle_root:
        return BlockCheck(
            index, False, "merkle_root",
            f"recomputed {root(tree).hex()}, header has {header.merkle_root.hex()}",
        )
    if header.prev_hash != expected_prev:
        return BlockCheck(
            index, False, "prev_hash",
            f"expected {expected_prev.hex()}, header has {header.prev_hash.hex()}",
        )
    return BlockCheck(index, True)


def validate_blocks(blocks: Sequence[Block]) -> ChainReport:
    """Check every block's Merkle root and linkage; numbering starts at 1."""
    report = ChainReport()
    expected_prev = ZERO_DIGEST
    for index, block in enumerate(blocks, start=1):
        check = _check_block(block, index, expected_prev)
        if not check.passed:
            logger.warning(
                "Block failed validation",
                block=index,
                check=check.failed_check,
                detail=check.detail,
            )
        report.checks.append(check)
        expected_prev = block.header_digest()
    return report


def validate_chain(store: ChainStore) -> ChainReport:
    blocks = store.load_blocks()
    if not blocks:
        raise EmptyChainStore(f"EmptyChainStore: no block files in {store.directory}")
    report = validate_blocks(blocks)
    logger.info(
        "Chain validated",
        directory=str(store.directory),
        blocks=len(blocks),
        failures=len(report.failures),
    )
    return report
