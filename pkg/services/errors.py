# services/errors.py
"""Error vocabulary shared by the Merkle services.

Every domain error derives from ``MerkleError``, itself a ``ValueError``, so
callers that only care about bad input can keep catching ``ValueError``.
"""


class MerkleError(ValueError):
    """Root of all domain errors."""


class EmptyLeaves(MerkleError):
    def __init__(self, message="EmptyLeaves: a Merkle tree needs at least one leaf"):
        super().__init__(message)


class InvalidCount(MerkleError):
    pass


class IndexOutOfRange(MerkleError):
    def __init__(self, index, n):
        self.index = index
        self.n = n
        super().__init__(f"IndexOutOfRange: leaf index {index} not in [0, {n})")


class LengthMismatch(MerkleError):
    def __init__(self, expected, actual):
        self.expected = expected
        self.actual = actual
        super().__init__(f"LengthMismatch: expected {expected} leaves, got {actual}")


class MalformedDigest(MerkleError):
    pass


class ModeMismatch(MerkleError):
    pass


class ParseError(MerkleError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(f"ParseError: {message}")


class DuplicateId(MerkleError):
    def __init__(self, tx_id, line=None):
        self.tx_id = tx_id
        self.line = line
        super().__init__(f"DuplicateId: transaction id {tx_id!r} repeated (line {line})")


class OversizedTransaction(MerkleError):
    def __init__(self, tx_id, size, cap):
        self.tx_id = tx_id
        self.size = size
        super().__init__(
            f"OversizedTransaction: {tx_id!r} is {size} bytes, block cap is {cap}"
        )


class EmptyMempool(MerkleError):
    def __init__(self, message="EmptyMempool: no transactions to assemble"):
        super().__init__(message)


class EmptyChainStore(MerkleError):
    pass


class InvalidRange(MerkleError):
    pass


class InvalidConfig(MerkleError):
    pass


class StoreCorrupt(MerkleError):
    """A chain store file exists but cannot be read or decoded."""

    def __init__(self, path, reason):
        self.path = str(path)
        super().__init__(f"StoreCorrupt: {path}: {reason}")


class ValidationFailure(MerkleError):
    """A readable chain whose contents are inconsistent."""

    def __init__(self, failures):
        self.failures = list(failures)
        summary = ", ".join(f"block {f.index} ({f.failed_check})" for f in self.failures)
        super().__init__(f"ValidationFailure: {summary}")


class IoError(OSError):
    def __init__(self, path, reason):
        self.path = str(path)
        super().__init__(f"IoError: {path}: {reason}")
