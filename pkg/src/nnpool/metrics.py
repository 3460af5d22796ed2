"""Distance and similarity primitives.

All arithmetic is carried out in float64 regardless of input dtype; stored
embeddings are float32 and get upcast here.
"""

from __future__ import annotations

import numpy as np

from .errors import DimMismatch, ZeroVector


def _as_f64(v) -> np.ndarray:
    a = np.asarray(v, dtype=np.float64)
    if a.ndim != 1:
        raise ValueError("expected a 1-D vector")
    return a


def euclidean(u, v) -> float:
    """Euclidean distance sqrt(sum((u_i - v_i)^2)) in float64.

    Delegates to the batch routine so scalar and batch results are
    bit-identical.
    """
    a = _as_f64(u)
    b = _as_f64(v)
    if a.shape[0] != b.shape[0]:
        raise DimMismatch(a.shape[0], b.shape[0])
    return float(euclidean_to_many(b[None, :], a)[0])


def euclidean_to_many(matrix: np.ndarray, q) -> np.ndarray:
    """Distances from query `q` to every row of `matrix`, float64.

    This single routine backs both the brute-force oracle and the distances
    reported by the approximate index, so the two agree bit for bit on any
    row they both return.
    """
    q64 = _as_f64(q)
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    if m.shape[1] != q64.shape[0]:
        raise DimMismatch(m.shape[1], q64.shape[0])
    diff = m - q64[None, :]
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def cosine(u, v) -> float:
    """Cosine similarity dot(u,v) / (|u||v|), clipped to [-1, 1].

    Delegates to the batch routine so scalar and batch results are
    bit-identical.
    """
    a = _as_f64(u)
    b = _as_f64(v)
    if a.shape[0] != b.shape[0]:
        raise DimMismatch(a.shape[0], b.shape[0])
    return float(cosine_to_many(b[None, :], a)[0])


def cosine_to_many(matrix: np.ndarray, q) -> np.ndarray:
    """Cosine similarity of `q` against every row of `matrix`."""
    q64 = _as_f64(q)
    m = np.asarray(matrix, dtype=np.float64)
    if m.shape[1] != q64.shape[0]:
        raise DimMismatch(m.shape[1], q64.shape[0])
    nq = float(np.sqrt(np.dot(q64, q64)))
    norms = np.sqrt(np.einsum("ij,ij->i", m, m))
    if nq == 0.0 or np.any(norms == 0.0):
        raise ZeroVector("cosine undefined for zero vector")
    sims = (m @ q64) / (norms * nq)
    return np.clip(sims, -1.0, 1.0)
