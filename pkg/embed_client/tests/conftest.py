"""Shared fixtures: deterministic fake backends and manifest builders.

FakeEncoder derives each embedding purely from the text's bytes, which gives
the tests the exact properties the production backend must provide — per-text
determinism and batch-composition independence — without any model download.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np


class FakeEncoder:
    """Deterministic backend: each row depends only on its own text."""

    def __init__(self, dim: int = 16):
        self._dim = dim

    @property
    def dim(self) -> int:
        return self._dim

    def encode(self, texts):
        if not texts:
            return np.empty((0, self._dim), dtype=np.float32)
        return np.stack([self._one(t) for t in texts])

    def _one(self, text: str) -> np.ndarray:
        digest = hashlib.sha256(text.encode("utf-8")).digest()
        seed = int.from_bytes(digest[:8], "little")
        rng = np.random.default_rng(seed)
        return rng.normal(size=self._dim).astype(np.float32)


class WrongWidthEncoder(FakeEncoder):
    """Advertises one dim but emits another; used to exercise DimMismatch."""

    @property
    def dim(self) -> int:
        return self._dim + 1


class NaNEncoder(FakeEncoder):
    """Emits a NaN in a chosen row of each batch."""

    def __init__(self, dim: int = 16, bad_index: int = 0):
        super().__init__(dim)
        self.bad_index = bad_index

    def encode(self, texts):
        out = super().encode(texts)
        if len(texts) > self.bad_index:
            out[self.bad_index, 0] = np.nan
        return out


def record(text: str, label: int = 0, lang: str = "en", task: str = "TaskA") -> dict:
    return {"text": text, "label": label, "lang": lang, "task": task}


def write_manifest(path, records) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")


def write_lines(path, lines) -> None:
    """Write raw lines verbatim (for malformed-manifest tests)."""
    with open(path, "w", encoding="utf-8") as f:
        for line in lines:
            f.write(line + "\n")
