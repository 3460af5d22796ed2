"""Offline batch encoder: manifest texts in, binary vector file out.

Reads a JSONL manifest, embeds each line's ``text`` with a multilingual
sentence-embedding model (inference only, raw un-normalized output), and
writes the engine's vector file format so the two files can be loaded as a
pool by the retrieval engine. The packages share only the file formats.
"""

from .core import DEFAULT_BATCH, EmbedJob, EncodeReport, encode_manifest
from .encoder import DEFAULT_MODEL, SentenceEncoder, TextEncoder
from .errors import (
    DimMismatch,
    EmbedClientError,
    FormatError,
    IoFailure,
    ManifestError,
    ModelLoadError,
    NonFiniteOutput,
)
from .manifest import read_texts
from .vecio import VEC_MAGIC, VEC_VERSION, read_vectors, write_vectors

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_BATCH",
    "DEFAULT_MODEL",
    "DimMismatch",
    "EmbedClientError",
    "EmbedJob",
    "EncodeReport",
    "FormatError",
    "IoFailure",
    "ManifestError",
    "ModelLoadError",
    "NonFiniteOutput",
    "SentenceEncoder",
    "TextEncoder",
    "VEC_MAGIC",
    "VEC_VERSION",
    "encode_manifest",
    "read_texts",
    "read_vectors",
    "write_vectors",
    "__version__",
]
