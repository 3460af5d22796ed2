"""Shared builders for randomized test pools."""

from __future__ import annotations

import numpy as np

from nnpool.pool import Instance, Pool

LANGS = ["en", "de", "tr", "it", "pt"]
TASKS = ["TaskA", "TaskB", "TaskC", "TaskD"]

# small multilingual grab bag for text generation, non-ASCII included
WORDS = [
    "alpha", "beta", "gamma", "über", "straße", "çok", "güzel", "ragù",
    "coração", "naïve", "Ωμέγα", "зима", "空", "שָׁלוֹם", "🌌", "déjà",
]


def random_text(rng: np.random.Generator) -> str:
    k = int(rng.integers(1, 6))
    return " ".join(WORDS[int(i)] for i in rng.integers(0, len(WORDS), size=k))


def make_pool(
    rng: np.random.Generator,
    n: int,
    dim: int,
    dup_fraction: float = 0.0,
    same_vector_dups: bool = True,
    langs: list[str] | None = None,
    tasks: list[str] | None = None,
) -> Pool:
    """Random labeled pool. ``dup_fraction`` of rows are duplicates of an
    earlier row: full copies (text and vector) when ``same_vector_dups``,
    else same text with a fresh vector."""
    langs = langs or LANGS
    tasks = tasks or TASKS
    vectors = rng.normal(size=(n, dim)).astype(np.float32)
    texts: list[str] = []
    for i in range(n):
        if i > 0 and rng.random() < dup_fraction:
            src = int(rng.integers(0, i))
            texts.append(texts[src])
            if same_vector_dups and rng.random() < 0.5:
                vectors[i] = vectors[src]
        else:
            texts.append(f"{random_text(rng)} #{i}")
    instances = [
        Instance(
            id=i,
            text=texts[i],
            label=int(rng.integers(0, 2)),
            language=langs[int(rng.integers(0, len(langs)))],
            source_task=tasks[int(rng.integers(0, len(tasks)))],
        )
        for i in range(n)
    ]
    return Pool(instances=instances, vectors=vectors)
