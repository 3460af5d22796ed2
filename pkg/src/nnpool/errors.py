"""Exception types raised by the engine.

Every failure mode that callers are expected to handle gets its own class so
the CLI and the HTTP service can map them to exit codes / status codes
without string matching.
"""

from __future__ import annotations


class NnpoolError(Exception):
    """Base class for all engine errors."""


class MalformedRecord(NnpoolError):
    """A manifest line failed validation."""

    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"manifest line {line_no}: {reason}")


class BadHeader(NnpoolError):
    """Vector file header (magic, version, dim, or length) is invalid."""


class CountMismatch(NnpoolError):
    """Manifest record count does not match the vector file count."""

    def __init__(self, manifest_count: int, vector_count: int):
        self.manifest_count = manifest_count
        self.vector_count = vector_count
        super().__init__(
            f"manifest has {manifest_count} records but vector file has {vector_count} rows"
        )


class NonFiniteVector(NnpoolError):
    """A vector row contains NaN or Inf."""

    def __init__(self, row: int):
        self.row = row
        super().__init__(f"non-finite value in vector row {row}")


class IoFailure(NnpoolError):
    """Underlying read/write failed."""


class EmptyView(NnpoolError):
    """Index build requested over a view with no rows."""


class DimMismatch(NnpoolError):
    """Vector dimensionality differs from what the operation requires."""

    def __init__(self, expected: int, got: int):
        self.expected = expected
        self.got = got
        super().__init__(f"expected dimension {expected}, got {got}")


class StaleIndex(NnpoolError):
    """Persisted index does not match the current vector file."""


class ZeroVector(NnpoolError):
    """Cosine similarity is undefined for a zero-norm vector."""


class KTooLarge(NnpoolError):
    """Requested more selections than there are candidates."""

    def __init__(self, k: int, available: int):
        self.k = k
        self.available = available
        super().__init__(f"k={k} exceeds candidate count {available}")


class Shortfall(NnpoolError):
    """Pool exhausted before the requested number of unique texts was found."""

    def __init__(self, requested: int, achieved: int):
        self.requested = requested
        self.achieved = achieved
        super().__init__(
            f"only {achieved} unique instances available, {requested} requested"
        )


class EmptyData(NnpoolError):
    """Operation requires at least one data point."""


class LengthMismatch(NnpoolError):
    """Paired sequences have different lengths."""

    def __init__(self, a: int, b: int):
        super().__init__(f"length mismatch: {a} vs {b}")


class InsufficientData(NnpoolError):
    """Split or subsample sizes exceed what the pool provides."""


class ConfigError(NnpoolError):
    """Experiment or CLI configuration is invalid."""
