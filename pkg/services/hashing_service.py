# services/hashing_service.py
"""
Leaf, internal-node and header hashing.

All digests are single SHA-256 (no Bitcoin-style double hashing and no byte
reversal). Two hashing modes exist:

    PLAIN             leaf = SHA256(payload), node = SHA256(left || right)
    DOMAIN_SEPARATED  leaf = SHA256(0x00 || payload), node = SHA256(0x01 || left || right)

Every call to ``hash_leaf`` or ``hash_internal`` is counted. The counter is
process-global with an explicit reset; ``counting_scope`` additionally gives
the current context its own private tally so concurrent benchmark cells do not
see each other's work.
"""

import hashlib
import threading
from contextlib import contextmanager
from contextvars import ContextVar
from enum import Enum
from typing import Iterator, Optional

from services.errors import MalformedDigest, ParseError

DIGEST_SIZE = 32
LEAF_PREFIX = b"\x00"
NODE_PREFIX = b"\x01"


class Digest(bytes):
    """A 32-byte SHA-256 output. Renders as 64 lowercase hex characters."""

    __slots__ = ()

    def __new__(cls, value: bytes) -> "Digest":
        if len(value) != DIGEST_SIZE:
            raise MalformedDigest(
                f"digest must be {DIGEST_SIZE} bytes, got {len(value)}"
            )
        return super().__new__(cls, value)

    @classmethod
    def from_hex(cls, text: str) -> "Digest":
        if not isinstance(text, str) or len(text) != 2 * DIGEST_SIZE:
            length = len(text) if isinstance(text, str) else type(text).__name__
            raise MalformedDigest(f"digest hex must be 64 characters, got {length}")
        try:
            return cls(bytes.fromhex(text))
        except ValueError:
            raise MalformedDigest(f"digest hex is not hexadecimal: {text!r}")

    def __str__(self) -> str:
        return self.hex()

    def __repr__(self) -> str:
        return f"Digest({self.hex()})"


ZERO_DIGEST = Digest(bytes(DIGEST_SIZE))


class HashMode(Enum):
    """How leaf and node preimages are framed."""

    PLAIN = "plain"
    DOMAIN_SEPARATED = "domsep"

    @classmethod
    def parse(cls, value: str) -> "HashMode":
        try:
            return cls(value)
        except ValueError:
            raise ParseError(f"unknown hash mode {value!r} (expected plain|domsep)")


class HashCounter:
    """Thread-safe running total of hash invocations."""

    def __init__(self):
        self._lock = threading.Lock()
        self._count = 0

    def increment(self) -> None:
        with self._lock:
            self._count += 1

    def snapshot(self) -> int:
        with self._lock:
            return self._count

    def reset(self) -> None:
        with self._lock:
            self._count = 0


_global_counter = HashCounter()
_scoped_counter: ContextVar[Optional[HashCounter]] = ContextVar(
    "merkle_scoped_hash_counter", default=None
)


def _count() -> None:
    _global_counter.increment()
    scoped = _scoped_counter.get()
    if scoped is not None:
        scoped.increment()


def hash_leaf(payload: bytes, mode: HashMode = HashMode.DOMAIN_SEPARATED) -> Digest:
    """Hash a transaction payload (or any opaque bytes) into a leaf digest."""
    if mode is HashMode.DOMAIN_SEPARATED:
        raw = hashlib.sha256(LEAF_PREFIX + payload).digest()
    else:
        raw = hashlib.sha256(payload).digest()
    _count()
    return Digest(raw)


def hash_internal(left: bytes, right: bytes, mode: HashMode = HashMode.DOMAIN_SEPARATED) -> Digest:
    """Combine two child digests, left then right."""
    if mode is HashMode.DOMAIN_SEPARATED:
        raw = hashlib.sha256(NODE_PREFIX + left + right).digest()
    else:
        raw = hashlib.sha256(left + right).digest()
    _count()
    return Digest(raw)


def hash_counter_snapshot() -> int:
    """Hash invocations since process start or the last reset.

    Inside ``counting_scope`` the scoped tally is returned instead.
    """
    scoped = _scoped_counter.get()
    if scoped is not None:
        return scoped.snapshot()
    return _global_counter.snapshot()


def reset_hash_counter() -> None:
    scoped = _scoped_counter.get()
    if scoped is not None:
        scoped.reset()
    else:
        _global_counter.reset()


@contextmanager
def counting_scope() -> Iterator[HashCounter]:
    """Give the current context a private hash counter for the duration."""
    counter = HashCounter()
    token = _scoped_counter.set(counter)
    try:
        yield counter
    finally:
        _scoped_counter.reset(token)
