"""Embedding backends.

A backend is anything with an integer ``dim`` property and an
``encode(texts) -> float32 (len(texts), dim)`` method whose output for a
given text depends only on that text — never on what else is in the batch.
The production backend wraps a sentence-transformers model in inference
mode; tests inject cheap deterministic stand-ins through the same protocol.
"""

from __future__ import annotations

from typing import Protocol, Sequence, runtime_checkable

import numpy as np

from .errors import ModelLoadError

DEFAULT_MODEL = "BAAI/bge-m3"


@runtime_checkable
class TextEncoder(Protocol):
    """Minimal contract an embedding backend must satisfy."""

    @property
    def dim(self) -> int: ...

    def encode(self, texts: Sequence[str]) -> np.ndarray: ...


class SentenceEncoder:
    """sentence-transformers backend, inference mode only.

    The model is loaded in evaluation mode and run without gradients, so
    identical inputs produce identical outputs. Embeddings are returned raw —
    no re-normalization. Long texts are passed through as-is; any length
    handling is the model's own.
    """

    def __init__(self, model: str = DEFAULT_MODEL):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as e:
            raise ModelLoadError(f"sentence-transformers is not installed: {e}") from e
        try:
            self._model = SentenceTransformer(model)
        except Exception as e:
            raise ModelLoadError(f"cannot load model {model!r}: {e}") from e
        dim = self._model.get_sentence_embedding_dimension()
        if not dim or int(dim) <= 0:
            raise ModelLoadError(f"model {model!r} does not advertise an embedding dim")
        self._dim = int(dim)
        self.name = model

    @property
    def dim(self) -> int:
        return self._dim

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        """Embed ``texts`` in one forward pass; float32 (len(texts), dim)."""
        batch = list(texts)
        out = self._model.encode(
            batch,
            batch_size=max(1, len(batch)),
            convert_to_numpy=True,
            normalize_embeddings=False,
            show_progress_bar=False,
        )
        return np.asarray(out, dtype=np.float32).reshape(len(batch), -1)
