"""Encode the texts of a manifest into a companion vector file.

Row i of the output is the embedding of manifest line i's text. Each
distinct text is embedded exactly once and its vector copied to every row
that carries it, so duplicate lines are bit-identical by construction and
batch size remains a pure throughput knob.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoder import DEFAULT_MODEL, SentenceEncoder, TextEncoder
from .errors import DimMismatch
from .manifest import read_texts
from .vecio import write_vectors

DEFAULT_BATCH = 32


@dataclass(frozen=True)
class EmbedJob:
    """One encoding run: which manifest, where to write, which model, batch size."""

    manifest_path: str
    output_vectors_path: str
    model: str = DEFAULT_MODEL
    batch_size: int = DEFAULT_BATCH

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass(frozen=True)
class EncodeReport:
    """What an encoding run produced."""

    count: int
    dim: int
    model: str


def encode_manifest(job: EmbedJob, encoder: TextEncoder | None = None) -> EncodeReport:
    """Embed every manifest text and write the vector file.

    The manifest is read (and rejected) before any model is loaded. When
    ``encoder`` is None the configured model is loaded via SentenceEncoder;
    passing an encoder lets callers reuse a loaded model or substitute a
    different backend. Output dim always equals the encoder's advertised dim.
    """
    texts = read_texts(job.manifest_path)
    if encoder is None:
        encoder = SentenceEncoder(job.model)
    dim = int(encoder.dim)
    if dim <= 0:
        raise DimMismatch(dim, "encoder advertises a non-positive dim")

    first_row: dict[str, int] = {}
    row_of = np.empty(len(texts), dtype=np.int64)
    for i, text in enumerate(texts):
        row_of[i] = first_row.setdefault(text, len(first_row))
    unique_texts = list(first_row)

    blocks = []
    for start in range(0, len(unique_texts), job.batch_size):
        batch = unique_texts[start : start + job.batch_size]
        block = np.asarray(encoder.encode(batch), dtype=np.float32)
        if block.shape != (len(batch), dim):
            raise DimMismatch(dim, block.shape)
        blocks.append(block)
    unique_matrix = np.vstack(blocks)

    write_vectors(unique_matrix[row_of], job.output_vectors_path)
    return EncodeReport(count=len(texts), dim=dim, model=job.model)
