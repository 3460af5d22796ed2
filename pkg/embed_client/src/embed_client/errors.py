"""Typed failures for the encoding pipeline.

Every anticipated failure derives from EmbedClientError so callers (and the
CLI) can catch one base class; unexpected exceptions propagate untouched.
"""

from __future__ import annotations


class EmbedClientError(Exception):
    """Base class for all anticipated encoding failures."""


class ManifestError(EmbedClientError):
    """A manifest line could not be parsed into an encodable record.

    ``line`` is 1-based, or None for file-level problems (e.g. no records).
    """

    def __init__(self, line: int | None, reason: str):
        self.line = line
        self.reason = reason
        where = f"manifest line {line}" if line is not None else "manifest"
        super().__init__(f"{where}: {reason}")


class ModelLoadError(EmbedClientError):
    """The embedding model could not be loaded."""


class DimMismatch(EmbedClientError):
    """Encoder output width disagrees with the model's advertised dimension."""

    def __init__(self, expected: int, actual: object):
        self.expected = expected
        self.actual = actual
        super().__init__(f"encoder returned shape {actual}, expected dim {expected}")


class NonFiniteOutput(EmbedClientError):
    """An embedding row contains NaN or Inf; ``row`` is the 0-based row index."""

    def __init__(self, row: int):
        self.row = row
        super().__init__(f"vector row {row} is not finite")


class FormatError(EmbedClientError):
    """A vector file has a malformed header or truncated payload."""


class IoFailure(EmbedClientError):
    """An underlying file operation failed."""
