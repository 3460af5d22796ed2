"""Retrieval-set construction over an indexed pool.

Given m target query vectors and a requested total of R instances, this
module gathers per-query nearest neighbors, unions them, deduplicates by
byte-equal text, tops up by doubling the per-query depth until R unique texts
are available, and finally ranks the survivors globally. An optional
maximal-marginal-relevance (MMR) stage swaps pure proximity for a
relevance/diversity trade-off.

Ordering rules, fixed for determinism:

- Per-query neighbor lists are ascending (distance, row).
- Deduplication keeps, for each text, the occurrence with the smallest
  (distance, row, query_index, rank) tuple.
- The final global order is ascending (min distance to any query, row),
  truncated to exactly R.

Distances are Euclidean; MMR scores use cosine similarity. Both come from
the same primitives the index and the exhaustive baseline use, so retrieval
results are reproducible bit-for-bit across code paths.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .ann import AnnIndex, search
from .errors import (
    DimMismatch,
    EmptyData,
    IoFailure,
    KTooLarge,
    Shortfall,
    ZeroVector,
)
from .metrics import cosine_to_many, euclidean_to_many
from .pool import Instance, Pool

__all__ = [
    "MmrConfig",
    "RetrievalConfig",
    "RetrievedItem",
    "RetrievedSet",
    "topk_union",
    "retrieve",
    "mmr_select",
    "write_retrieved_manifest",
]


@dataclass(frozen=True)
class MmrConfig:
    """Diversity-selection knobs.

    ``lam`` weighs relevance against redundancy; ``candidate_multiplier``
    times the per-query selection size fixes how many unique-text candidates
    each query gathers before selection.
    """

    lam: float = 0.5
    candidate_multiplier: int = 2

    def __post_init__(self) -> None:
        if not (0.0 <= self.lam <= 1.0):
            raise ValueError(f"lam must be in [0, 1], got {self.lam}")
        if self.candidate_multiplier < 2:
            raise ValueError("candidate_multiplier must be >= 2")


@dataclass(frozen=True)
class RetrievalConfig:
    """What to retrieve and what to keep out.

    ``total_r`` is the exact number of unique-text instances to return.
    ``k_init`` overrides the initial per-query depth (default ceil(R/m)).
    """

    total_r: int
    exclude_languages: frozenset[str] = field(default_factory=frozenset)
    exclude_tasks: frozenset[str] = field(default_factory=frozenset)
    mmr: MmrConfig | None = None
    k_init: int | None = None

    def __post_init__(self) -> None:
        if self.total_r < 1:
            raise ValueError(f"total_r must be >= 1, got {self.total_r}")
        if self.k_init is not None and self.k_init < 1:
            raise ValueError(f"k_init must be >= 1, got {self.k_init}")
        object.__setattr__(self, "exclude_languages", frozenset(self.exclude_languages))
        object.__setattr__(self, "exclude_tasks", frozenset(self.exclude_tasks))


@dataclass(frozen=True)
class RetrievedItem:
    """One retrieved instance plus where it came from.

    ``query_index`` and ``rank`` identify the best nearest-neighbor occurrence
    that surfaced this text (rank is 0-based within that query's list) and
    ``distance`` is the Euclidean distance of that occurrence.
    """

    row: int
    instance: Instance
    query_index: int
    rank: int
    distance: float


@dataclass(frozen=True)
class RetrievedSet:
    """The final ordered selection and the configuration that produced it."""

    items: tuple[RetrievedItem, ...]
    config: RetrievalConfig

    def rows(self) -> list[int]:
        return [it.row for it in self.items]

    def texts(self) -> list[str]:
        return [it.instance.text for it in self.items]


def topk_union(
    index: AnnIndex, queries, k: int
) -> dict[int, list]:
    """Per-query top-k neighbor lists, keyed by query index.

    ``k`` is clamped to the view size, so each list holds
    ``min(k, view.count)`` neighbors in ascending (distance, row) order.
    """
    arr = _as_query_matrix(queries, index.view.dim)
    kk = min(k, index.view.count)
    return {qi: search(index, arr[qi], kk) for qi in range(arr.shape[0])}


def _as_query_matrix(queries, dim: int) -> np.ndarray:
    arr = np.asarray(queries, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise EmptyData("need at least one query vector")
    if arr.shape[1] != dim:
        raise DimMismatch(expected=dim, got=int(arr.shape[1]))
    return arr


@dataclass(frozen=True)
class _Occurrence:
    distance: float
    row: int
    query_index: int
    rank: int

    @property
    def key(self) -> tuple:
        return (self.distance, self.row, self.query_index, self.rank)


def _dedup_by_text(
    occurrences: list[_Occurrence], pool: Pool
) -> dict[str, _Occurrence]:
    """Collapse occurrences to one per text, keeping the smallest
    (distance, row, query_index, rank)."""
    best: dict[str, _Occurrence] = {}
    for occ in occurrences:
        text = pool.instances[occ.row].text
        cur = best.get(text)
        if cur is None or occ.key < cur.key:
            best[text] = occ
    return best


def _finalize(
    kept: dict[str, _Occurrence],
    pool: Pool,
    targets: np.ndarray,
    config: RetrievalConfig,
) -> RetrievedSet:
    """Rank unique candidates by (min distance to any query, row) and cut to R."""
    occs = list(kept.values())
    rows = np.array([o.row for o in occs], dtype=np.int64)
    cand = pool.vectors[rows]
    dmat = np.stack([euclidean_to_many(cand, q) for q in targets])
    min_d = dmat.min(axis=0)
    order = np.lexsort((rows, min_d))[: config.total_r]
    items = []
    for i in order:
        occ = occs[i]
        items.append(
            RetrievedItem(
                row=occ.row,
                instance=dataclasses.replace(pool.instances[occ.row]),
                query_index=occ.query_index,
                rank=occ.rank,
                distance=occ.distance,
            )
        )
    return RetrievedSet(items=tuple(items), config=config)


def retrieve(
    index: AnnIndex, pool: Pool, target_vectors, config: RetrievalConfig
) -> RetrievedSet:
    """Build a retrieval set of exactly ``config.total_r`` unique-text instances.

    The view behind ``index`` is expected to be pre-filtered for the
    configured exclusions; membership is re-verified here and violating rows
    are dropped rather than returned. Raises Shortfall when the view cannot
    supply ``total_r`` distinct eligible texts, and DimMismatch on query/pool
    dimension disagreement.
    """
    targets = _as_query_matrix(target_vectors, index.view.dim)
    m = targets.shape[0]
    view = index.view

    eligible: list[int] = []
    for r in view.selected.tolist():
        inst = pool.instances[r]
        if inst.language in config.exclude_languages:
            continue
        if inst.source_task in config.exclude_tasks:
            continue
        eligible.append(r)
    eligible_set = set(eligible)
    distinct = len({pool.instances[r].text for r in eligible})
    if distinct < config.total_r:
        raise Shortfall(requested=config.total_r, achieved=distinct)

    if config.mmr is not None:
        return _retrieve_mmr(index, pool, targets, config, eligible_set)

    k = config.k_init if config.k_init is not None else math.ceil(config.total_r / m)
    while True:
        k_eff = min(k, view.count)
        occurrences: list[_Occurrence] = []
        for qi, neighbors in topk_union(index, targets, k_eff).items():
            for rank, nb in enumerate(neighbors):
                if nb.row in eligible_set:
                    occurrences.append(
                        _Occurrence(nb.distance, nb.row, qi, rank)
                    )
        kept = _dedup_by_text(occurrences, pool)
        if len(kept) >= config.total_r:
            return _finalize(kept, pool, targets, config)
        if k_eff >= view.count:
            # Unreachable when the early distinct-text check passed and the
            # search is exhaustive at k = view size; kept defensively.
            raise Shortfall(requested=config.total_r, achieved=len(kept))
        k *= 2


def _unique_text_candidates(
    index: AnnIndex,
    pool: Pool,
    query: np.ndarray,
    want: int,
    eligible_set: set[int],
) -> list[_Occurrence]:
    """First ``want`` unique-by-text eligible neighbors of one query, each
    represented by its nearest occurrence, in ascending (distance, row)."""
    view = index.view
    k = want
    while True:
        k_eff = min(k, view.count)
        neighbors = search(index, query, k_eff)
        seen: set[str] = set()
        out: list[_Occurrence] = []
        for rank, nb in enumerate(neighbors):
            if nb.row not in eligible_set:
                continue
            text = pool.instances[nb.row].text
            if text in seen:
                continue
            seen.add(text)
            out.append(_Occurrence(nb.distance, nb.row, 0, rank))
            if len(out) >= want:
                break
        if len(out) >= want or k_eff >= view.count:
            return out
        k *= 2


def _retrieve_mmr(
    index: AnnIndex,
    pool: Pool,
    targets: np.ndarray,
    config: RetrievalConfig,
    eligible_set: set[int],
) -> RetrievedSet:
    """Diversity path: per-query candidate gathering, per-query MMR selection,
    then the shared union/dedup/truncation pipeline.

    On shortfall the per-query candidate pool grows (multiplier doubles);
    once candidates are exhausted the per-query selection size grows too, so
    the loop terminates whenever the view holds enough distinct texts.
    """
    m = targets.shape[0]
    view = index.view
    k_pq = math.ceil(config.total_r / m)
    mult = config.mmr.candidate_multiplier
    lam = config.mmr.lam

    while True:
        want = mult * k_pq
        kept: dict[str, _Occurrence] = {}
        exhausted = True
        for qi in range(m):
            cands = _unique_text_candidates(index, pool, targets[qi], want, eligible_set)
            if len(cands) >= want:
                exhausted = False
            take = min(k_pq, len(cands))
            if take == 0:
                continue
            pairs = [(c.row, pool.vectors[c.row]) for c in cands]
            chosen = set(mmr_select(targets[qi], pairs, take, lam))
            for c in cands:
                if c.row not in chosen:
                    continue
                occ = _Occurrence(c.distance, c.row, qi, c.rank)
                text = pool.instances[c.row].text
                cur = kept.get(text)
                if cur is None or occ.key < cur.key:
                    kept[text] = occ
        if len(kept) >= config.total_r:
            return _finalize(kept, pool, targets, config)
        if exhausted and k_pq >= config.total_r:
            raise Shortfall(requested=config.total_r, achieved=len(kept))
        if exhausted:
            k_pq = min(2 * k_pq, config.total_r)
        else:
            mult *= 2


def mmr_select(query, candidates, k: int, lam: float) -> list[int]:
    """Greedy maximal-marginal-relevance selection.

    Candidates are (row, vector) pairs. The first pick maximizes cosine
    similarity to the query; every later pick maximizes
    ``lam * cos(v, query) - (1 - lam) * max_{s in selected} cos(v, s)``.
    All ties break toward the smaller row. Returns exactly ``k`` rows in
    selection order. Raises ZeroVector for any zero-norm vector and KTooLarge
    when ``k`` exceeds the candidate count.
    """
    if not candidates:
        raise EmptyData("mmr_select needs at least one candidate")
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > len(candidates):
        raise KTooLarge(k=k, available=len(candidates))
    if not (0.0 <= lam <= 1.0):
        raise ValueError(f"lam must be in [0, 1], got {lam}")

    rows = np.array([r for r, _ in candidates], dtype=np.int64)
    mat = np.asarray([v for _, v in candidates], dtype=np.float64)
    q = np.asarray(query, dtype=np.float64).reshape(-1)
    if mat.shape[1] != q.shape[0]:
        raise DimMismatch(expected=int(q.shape[0]), got=int(mat.shape[1]))
    qn = float(np.linalg.norm(q))
    norms = np.linalg.norm(mat, axis=1)
    if qn == 0.0:
        raise ZeroVector("query vector has zero norm")
    if np.any(norms == 0.0):
        raise ZeroVector(f"candidate row {int(rows[int(np.argmin(norms))])} has zero norm")

    rel = np.clip(cosine_to_many(mat, q), -1.0, 1.0)
    n = len(candidates)
    picked = np.zeros(n, dtype=bool)
    maxsim = np.full(n, -np.inf)
    out: list[int] = []
    for step in range(k):
        score = rel if step == 0 else lam * rel - (1.0 - lam) * maxsim
        best = -1
        for i in range(n):
            if picked[i]:
                continue
            if best < 0 or score[i] > score[best] or (
                score[i] == score[best] and rows[i] < rows[best]
            ):
                best = i
        picked[best] = True
        out.append(int(rows[best]))
        sims = np.clip(cosine_to_many(mat, mat[best]), -1.0, 1.0)
        maxsim = np.maximum(maxsim, sims)
    return out


def write_retrieved_manifest(rset: RetrievedSet, path: str) -> None:
    """Write a retrieved set as a manifest with provenance fields appended
    (src_row, query_index, rank, distance), one JSON object per line."""
    try:
        with open(path, "w", encoding="utf-8") as f:
            for it in rset.items:
                rec = {
                    "text": it.instance.text,
                    "label": it.instance.label,
                    "lang": it.instance.language,
                    "task": it.instance.source_task,
                    "src_row": it.row,
                    "query_index": it.query_index,
                    "rank": it.rank,
                    "distance": it.distance,
                }
                f.write(json.dumps(rec, ensure_ascii=False) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
