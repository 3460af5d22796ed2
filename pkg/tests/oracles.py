"""Independent straight-line reference implementations.

Everything here is written from the definitions using plain Python and
compensated summation where it matters, deliberately sharing no code with the
package under test. Tests compare package output against these.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np


def euclid_fsum(u, v) -> float:
    """Euclidean distance via compensated summation."""
    return math.sqrt(math.fsum((float(a) - float(b)) ** 2 for a, b in zip(u, v)))


def cos_fsum(u, v) -> float:
    nu = math.sqrt(math.fsum(float(a) * float(a) for a in u))
    nv = math.sqrt(math.fsum(float(b) * float(b) for b in v))
    dot = math.fsum(float(a) * float(b) for a, b in zip(u, v))
    return dot / (nu * nv)


def bce_reference(w, b, data, l2) -> float:
    """Binary cross-entropy + l2 penalty, pure python."""

    def sigmoid(z: float) -> float:
        if z >= 0:
            return 1.0 / (1.0 + math.exp(-z))
        e = math.exp(z)
        return e / (1.0 + e)

    terms = []
    for x, y in data:
        z = math.fsum(float(wi) * float(xi) for wi, xi in zip(w, x)) + float(b)
        p = min(1.0 - 1e-12, max(1e-12, sigmoid(z)))
        terms.append(y * math.log(p) + (1 - y) * math.log1p(-p))
    penalty = float(l2) * math.fsum(float(wi) * float(wi) for wi in w)
    return -math.fsum(terms) / len(terms) + penalty


def f1_macro_reference(pred, act) -> float:
    """Macro F1 via exact rational arithmetic, zero denominators -> 0."""
    total = Fraction(0)
    for cls in (0, 1):
        tp = sum(1 for p, a in zip(pred, act) if p == cls and a == cls)
        fp = sum(1 for p, a in zip(pred, act) if p == cls and a != cls)
        fn = sum(1 for p, a in zip(pred, act) if p != cls and a == cls)
        precision = Fraction(tp, tp + fp) if tp + fp else Fraction(0)
        recall = Fraction(tp, tp + fn) if tp + fn else Fraction(0)
        if precision + recall:
            total += 2 * precision * recall / (precision + recall)
    return float(total / 2)


def exact_topk(vectors: np.ndarray, query, k: int) -> list[tuple[float, int]]:
    """Full-sort top-k by (distance, row)."""
    pairs = sorted(
        (float(np.linalg.norm(np.asarray(vectors[r], dtype=np.float64) - np.asarray(query, dtype=np.float64))), r)
        for r in range(len(vectors))
    )
    return pairs[:k]


def retrieve_reference(
    vectors: np.ndarray,
    texts: list[str],
    langs: list[str],
    tasks: list[str],
    queries: np.ndarray,
    total_r: int,
    k_init: int | None = None,
    exclude_langs=(),
    exclude_tasks=(),
) -> list[tuple[int, int, int, float]]:
    """Literal retrieval pipeline: per-query exact top-k, union, dedup by
    best (distance, row, query, rank) occurrence, double-k top-up, and global
    (min distance to any query, row) truncation.

    Returns [(row, query_index, rank, occurrence_distance)] in final order.
    """
    n = len(texts)
    m = len(queries)
    eligible = {
        r
        for r in range(n)
        if langs[r] not in set(exclude_langs) and tasks[r] not in set(exclude_tasks)
    }
    k = k_init if k_init is not None else math.ceil(total_r / m)
    while True:
        k_eff = min(k, n)
        best: dict[str, tuple[float, int, int, int]] = {}
        for qi in range(m):
            ranked = exact_topk(vectors, queries[qi], k_eff)
            for rank, (d, r) in enumerate(ranked):
                if r not in eligible:
                    continue
                key = (d, r, qi, rank)
                t = texts[r]
                if t not in best or key < best[t]:
                    best[t] = key
        if len(best) >= total_r or k_eff >= n:
            break
        k *= 2
    assert len(best) >= total_r, "reference caller must guarantee feasibility"
    scored = []
    for _text, (d, r, qi, rank) in best.items():
        min_d = min(
            float(np.linalg.norm(np.asarray(vectors[r], np.float64) - np.asarray(q, np.float64)))
            for q in queries
        )
        scored.append((min_d, r, qi, rank, d))
    scored.sort(key=lambda e: (e[0], e[1]))
    return [(r, qi, rank, d) for _min_d, r, qi, rank, d in scored[:total_r]]


def mmr_reference(query, rows, vectors, k: int, lam: float) -> list[int]:
    """Greedy maximal-marginal-relevance, per-pair fsum cosines, ties to the
    smaller row."""
    n = len(rows)
    rel = [cos_fsum(vectors[i], query) for i in range(n)]
    picked: list[int] = []
    remaining = list(range(n))
    for step in range(k):
        best_i = None
        best_score = None
        for i in remaining:
            if step == 0:
                score = rel[i]
            else:
                maxsim = max(cos_fsum(vectors[i], vectors[j]) for j in picked)
                score = lam * rel[i] - (1.0 - lam) * maxsim
            if (
                best_i is None
                or score > best_score
                or (score == best_score and rows[i] < rows[best_i])
            ):
                best_i, best_score = i, score
        picked.append(best_i)
        remaining.remove(best_i)
    return [rows[i] for i in picked]
