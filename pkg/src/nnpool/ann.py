"""Approximate nearest-neighbor index over a pool view.

A navigable small-world graph with a layered structure: each node draws a
level from a geometric-like distribution (``floor(-ln(U) * 1/ln(M))`` with U
uniform from a seeded generator), upper layers form coarse routing graphs, and
layer 0 connects everything. Queries descend greedily through the upper
layers, then run a best-first beam search on layer 0.

Conventions fixed by this module:

- Distances are Euclidean (L2). Internally squared float64 values drive the
  graph walk; reported distances are recomputed with the same primitive the
  exhaustive baseline uses, so the two paths agree bit-for-bit on shared rows.
- Every candidate ordering breaks ties lexicographically by (distance, row),
  ascending. Insertion order is ascending row order. Builds and searches are
  fully deterministic for a given (vectors, params) pair.
- Layer 0 allows up to ``2 * max_neighbors`` links per node; upper layers
  allow ``max_neighbors``.
- Small views fall back to exhaustive search: below
  ``brute_force_cutoff`` rows the graph is not built at all, and any query
  asking for ``k >= view.count`` rows is answered exhaustively.

Neighbor rows are always *pool* row ids (view-local ids never escape).
"""

from __future__ import annotations

import hashlib
import heapq
import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import BadHeader, DimMismatch, EmptyView, IoFailure, KTooLarge, StaleIndex
from .metrics import euclidean_to_many
from .pool import PoolView
from ._hnsw_kernels import build_layer0 as _kernel_build
from ._hnsw_kernels import search_layer0 as _kernel_search

IDX_MAGIC = b"XIDX"
IDX_VERSION = 1

_IDX_HEADER = struct.Struct("<4sII")  # magic, version, meta length


@dataclass(frozen=True)
class HnswParams:
    """Graph construction and search parameters.

    ``ef_construction`` must be at least ``max_neighbors`` so every insertion
    sees enough candidates to fill its adjacency list.
    """

    max_neighbors: int = 128
    ef_construction: int = 200
    ef_search: int = 128
    rng_seed: int = 0
    brute_force_cutoff: int = 2000

    def __post_init__(self) -> None:
        if self.max_neighbors < 1:
            raise ValueError("max_neighbors must be >= 1")
        if self.ef_construction < self.max_neighbors:
            raise ValueError(
                "ef_construction must be >= max_neighbors "
                f"({self.ef_construction} < {self.max_neighbors})"
            )
        if self.ef_search < 1:
            raise ValueError("ef_search must be >= 1")
        if self.brute_force_cutoff < 0:
            raise ValueError("brute_force_cutoff must be >= 0")

    def to_dict(self) -> dict:
        return {
            "max_neighbors": self.max_neighbors,
            "ef_construction": self.ef_construction,
            "ef_search": self.ef_search,
            "rng_seed": self.rng_seed,
            "brute_force_cutoff": self.brute_force_cutoff,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HnswParams":
        return cls(**{k: int(v) for k, v in d.items()})


@dataclass(frozen=True)
class Neighbor:
    """A search hit: pool row id and exact Euclidean distance."""

    row: int
    distance: float


@dataclass
class AnnIndex:
    """A built index over one pool view.

    ``mode`` is "hnsw" for graph-backed indexes and "brute" for small views
    that delegate every query to the exhaustive path. Graph state uses
    view-local ids; ``view.selected`` maps them back to pool rows.
    """

    view: PoolView
    params: HnswParams
    mode: str
    levels: np.ndarray | None = None  # int32 (n,)
    nbr: np.ndarray | None = None  # int32 (n, 2*M)
    nbrdist: np.ndarray | None = None  # float32 (n, 2*M), squared
    deg: np.ndarray | None = None  # int32 (n,)
    upper: dict[int, dict[int, dict[int, float]]] = field(default_factory=dict)
    entry: int = 0
    max_level: int = 0
    source_sha256: str | None = None

    @property
    def count(self) -> int:
        return self.view.count

    @property
    def dim(self) -> int:
        return self.view.dim

    def graph_signature(self) -> str:
        """Hex digest of the full graph state; equal signatures mean
        structurally identical indexes."""
        h = hashlib.sha256()
        h.update(self.mode.encode())
        h.update(struct.pack("<qq", self.entry, self.max_level))
        h.update(np.ascontiguousarray(self.view.selected).tobytes())
        if self.mode == "hnsw":
            h.update(np.ascontiguousarray(self.levels).tobytes())
            h.update(np.ascontiguousarray(self.deg).tobytes())
            h.update(np.ascontiguousarray(self.nbr).tobytes())
            h.update(np.ascontiguousarray(self.nbrdist).tobytes())
            for lvl in sorted(self.upper):
                for node in sorted(self.upper[lvl]):
                    edges = self.upper[lvl][node]
                    for dst in sorted(edges):
                        h.update(struct.pack("<qqqd", lvl, node, dst, edges[dst]))
        return h.hexdigest()


def _draw_levels(n: int, params: HnswParams) -> np.ndarray:
    """Level per node: floor(-ln(U) * mult) with mult = 1/ln(max_neighbors)."""
    m = params.max_neighbors
    mult = 1.0 / math.log(m) if m >= 2 else 0.0
    rng = np.random.default_rng(params.rng_seed)
    u = rng.random(n)
    return np.floor(-np.log(u) * mult).astype(np.int32)


def _sq(vecs: np.ndarray, i: int, q: np.ndarray) -> float:
    diff = vecs[i].astype(np.float64) - q
    return float(diff @ diff)


def _sq_many(vecs: np.ndarray, ids: list[int], q: np.ndarray) -> np.ndarray:
    diff = vecs[ids].astype(np.float64) - q
    return np.einsum("ij,ij->i", diff, diff)


def _upper_greedy(
    graph: dict[int, dict[int, float]],
    vecs: np.ndarray,
    q: np.ndarray,
    ep: int,
    d_ep: float,
) -> tuple[int, float]:
    """Walk to the local (distance, id) minimum of one upper layer."""
    improved = True
    while improved:
        improved = False
        nbrs = sorted(graph.get(ep, ()))
        if not nbrs:
            break
        dists = _sq_many(vecs, nbrs, q)
        i = int(np.lexsort((nbrs, dists))[0])
        if (dists[i], nbrs[i]) < (d_ep, ep):
            ep, d_ep = nbrs[i], float(dists[i])
            improved = True
    return ep, d_ep


def _upper_search(
    graph: dict[int, dict[int, float]],
    vecs: np.ndarray,
    q: np.ndarray,
    eps: list[tuple[float, int]],
    ef: int,
) -> list[tuple[float, int]]:
    """Best-first search on one upper layer from multiple entry points.

    Returns up to ef (squared distance, id) pairs, ascending.
    """
    visited = {e for _, e in eps}
    cand = list(eps)
    heapq.heapify(cand)
    # max-heap over results via negated keys
    res = [(-d, -e) for d, e in eps]
    heapq.heapify(res)
    while len(res) > ef:
        heapq.heappop(res)
    while cand:
        d, u = heapq.heappop(cand)
        worst = (-res[0][0], -res[0][1])
        if len(res) >= ef and (d, u) > worst:
            break
        fresh = sorted(v for v in graph.get(u, ()) if v not in visited)
        if not fresh:
            continue
        visited.update(fresh)
        for dv, v in zip(_sq_many(vecs, fresh, q), fresh):
            dv = float(dv)
            if len(res) < ef or (dv, v) < (-res[0][0], -res[0][1]):
                heapq.heappush(cand, (dv, v))
                heapq.heappush(res, (-dv, -v))
                if len(res) > ef:
                    heapq.heappop(res)
    return sorted((-nd, -ni) for nd, ni in res)


def _upper_link(
    graph: dict[int, dict[int, float]],
    node: int,
    nbrs: list[tuple[float, int]],
    cap: int,
) -> None:
    """Bidirectionally link ``node`` to its chosen neighbors, pruning any
    adjacency that exceeds ``cap`` by dropping the farthest (distance, id)."""
    adj = graph.setdefault(node, {})
    for d, v in nbrs:
        adj[v] = d
        back = graph.setdefault(v, {})
        back[node] = d
        if len(back) > cap:
            worst = max(back.items(), key=lambda kv: (kv[1], kv[0]))
            del back[worst[0]]


def build_index(view: PoolView, params: HnswParams | None = None) -> AnnIndex:
    """Build an index over ``view``.

    Raises EmptyView for a zero-row view. Views smaller than
    ``params.brute_force_cutoff`` skip graph construction entirely.
    """
    params = params or HnswParams()
    n = view.count
    if n == 0:
        raise EmptyView("cannot index an empty view")
    if n < params.brute_force_cutoff:
        return AnnIndex(view=view, params=params, mode="brute")

    vecs = view.vectors()
    levels = _draw_levels(n, params)
    m = params.max_neighbors
    cap0 = 2 * m
    efc = params.ef_construction

    nbr = np.full((n, cap0), -1, dtype=np.int32)
    nbrdist = np.zeros((n, cap0), dtype=np.float32)
    deg = np.zeros(n, dtype=np.int32)

    upper: dict[int, dict[int, dict[int, float]]] = {}
    entry = 0
    max_level = int(levels[0])
    for lvl in range(1, max_level + 1):
        upper.setdefault(lvl, {})[0] = {}

    # Phase A: build upper layers incrementally and record each node's
    # layer-0 entry point for the compiled bulk insert below.
    entries0 = np.zeros(n, dtype=np.int64)
    for i in range(1, n):
        li = int(levels[i])
        q = vecs[i].astype(np.float64)
        ep, d_ep = entry, _sq(vecs, entry, q)
        for lc in range(max_level, li, -1):
            ep, d_ep = _upper_greedy(upper.get(lc, {}), vecs, q, ep, d_ep)
        eps = [(d_ep, ep)]
        for lc in range(min(max_level, li), 0, -1):
            graph = upper.setdefault(lc, {})
            found = _upper_search(graph, vecs, q, eps, efc)
            _upper_link(graph, i, found[:m], m)
            eps = found
        for lc in range(max_level + 1, li + 1):
            upper.setdefault(lc, {})[i] = {}
        entries0[i] = eps[0][1]
        if li > max_level:
            max_level = li
            entry = i

    # Phase B: layer 0 in one compiled pass.
    _kernel_build(vecs, entries0, m, cap0, efc, nbr, nbrdist, deg)

    return AnnIndex(
        view=view,
        params=params,
        mode="hnsw",
        levels=levels,
        nbr=nbr,
        nbrdist=nbrdist,
        deg=deg,
        upper=upper,
        entry=entry,
        max_level=max_level,
    )


def brute_force_search(view: PoolView, query: np.ndarray, k: int) -> list[Neighbor]:
    """Exhaustive k-nearest-neighbor search, the correctness baseline.

    Ordering is ascending (distance, pool row). Raises EmptyView, DimMismatch,
    or KTooLarge when k exceeds the view size.
    """
    if view.count == 0:
        raise EmptyView("cannot search an empty view")
    query = np.asarray(query, dtype=np.float64).reshape(-1)
    if query.shape[0] != view.dim:
        raise DimMismatch(expected=view.dim, got=int(query.shape[0]))
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > view.count:
        raise KTooLarge(k=k, available=view.count)
    dists = euclidean_to_many(view.vectors(), query)
    rows = view.selected
    order = np.lexsort((rows, dists))[:k]
    return [Neighbor(row=int(rows[i]), distance=float(dists[i])) for i in order]


def search(
    index: AnnIndex, query: np.ndarray, k: int, ef_search: int | None = None
) -> list[Neighbor]:
    """Query the index for the k nearest rows.

    The effective beam width is ``max(ef, k)`` where ``ef`` is the per-call
    override or the index default. Brute-mode indexes and queries with
    ``k >= view.count`` are answered exhaustively.
    """
    view = index.view
    if view.count == 0:
        raise EmptyView("cannot search an empty view")
    query = np.asarray(query, dtype=np.float64).reshape(-1)
    if query.shape[0] != view.dim:
        raise DimMismatch(expected=view.dim, got=int(query.shape[0]))
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > view.count:
        raise KTooLarge(k=k, available=view.count)
    if index.mode == "brute" or k >= view.count:
        return brute_force_search(view, query, k)

    ef = max(ef_search if ef_search is not None else index.params.ef_search, k)
    vecs = view.vectors()
    ep, d_ep = index.entry, _sq(vecs, index.entry, query)
    for lc in range(index.max_level, 0, -1):
        ep, d_ep = _upper_greedy(index.upper.get(lc, {}), vecs, query, ep, d_ep)
    _, ids = _kernel_search(vecs, index.nbr, index.deg, ep, query, ef, view.count)

    rows = view.selected[ids]
    dists = euclidean_to_many(vecs[ids], query)
    order = np.lexsort((rows, dists))[:k]
    return [Neighbor(row=int(rows[i]), distance=float(dists[i])) for i in order]


def file_sha256(path: str) -> str:
    h = hashlib.sha256()
    try:
        with open(path, "rb") as f:
            while True:
                chunk = f.read(1 << 20)
                if not chunk:
                    break
                h.update(chunk)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return h.hexdigest()


def save_index(index: AnnIndex, path: str, vectors_path: str | None = None) -> None:
    """Serialize an index. When ``vectors_path`` is given, a checksum of that
    vector file is embedded so later loads can detect staleness."""
    sha = file_sha256(vectors_path) if vectors_path else index.source_sha256
    meta = {
        "params": index.params.to_dict(),
        "mode": index.mode,
        "count": index.count,
        "dim": index.dim,
        "entry": index.entry,
        "max_level": index.max_level,
        "source_sha256": sha,
        "upper_nodes": [
            [lvl, node] for lvl in sorted(index.upper) for node in sorted(index.upper[lvl])
        ],
        "upper_edges": [
            [lvl, src, dst, index.upper[lvl][src][dst]]
            for lvl in sorted(index.upper)
            for src in sorted(index.upper[lvl])
            for dst in sorted(index.upper[lvl][src])
        ],
    }
    blob = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    try:
        with open(path, "wb") as f:
            f.write(_IDX_HEADER.pack(IDX_MAGIC, IDX_VERSION, len(blob)))
            f.write(blob)
            f.write(struct.pack("<Q", index.count))
            f.write(np.ascontiguousarray(index.view.selected, dtype=np.int64).tobytes())
            if index.mode == "hnsw":
                f.write(np.ascontiguousarray(index.levels, dtype=np.int32).tobytes())
                f.write(np.ascontiguousarray(index.deg, dtype=np.int32).tobytes())
                f.write(np.ascontiguousarray(index.nbr, dtype=np.int32).tobytes())
                f.write(np.ascontiguousarray(index.nbrdist, dtype=np.float32).tobytes())
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_index(path: str, pool, vectors_path: str | None = None) -> AnnIndex:
    """Load an index and re-attach it to ``pool``.

    Raises BadHeader for a malformed file and StaleIndex when the embedded
    vector-file checksum does not match ``vectors_path``, or when the stored
    shape disagrees with the pool.
    """
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc

    if len(data) < _IDX_HEADER.size:
        raise BadHeader(f"{path}: truncated header")
    magic, version, meta_len = _IDX_HEADER.unpack_from(data, 0)
    if magic != IDX_MAGIC:
        raise BadHeader(f"{path}: bad magic {magic!r}")
    if version != IDX_VERSION:
        raise BadHeader(f"{path}: unsupported version {version}")
    off = _IDX_HEADER.size
    if len(data) < off + meta_len:
        raise BadHeader(f"{path}: truncated metadata")
    try:
        meta = json.loads(data[off : off + meta_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BadHeader(f"{path}: unreadable metadata: {exc}") from exc
    off += meta_len

    sha = meta.get("source_sha256")
    if vectors_path is not None and sha is not None:
        actual = file_sha256(vectors_path)
        if actual != sha:
            raise StaleIndex(
                f"{path}: vector file checksum changed (index built from "
                f"{sha[:12]}..., file is {actual[:12]}...)"
            )

    (count,) = struct.unpack_from("<Q", data, off)
    off += 8
    if int(meta["count"]) != count:
        raise BadHeader(f"{path}: row count disagrees with metadata")
    selected = np.frombuffer(data, dtype="<i8", count=count, offset=off).astype(np.int64)
    off += 8 * count
    if count and (selected[-1] >= pool.count or int(meta["dim"]) != pool.dim):
        raise StaleIndex(
            f"{path}: stored rows/dim do not fit the pool "
            f"(pool has {pool.count} rows of dim {pool.dim})"
        )
    view = pool.view(selected)

    params = HnswParams.from_dict(meta["params"])
    mode = meta["mode"]
    if mode == "brute":
        idx = AnnIndex(view=view, params=params, mode="brute", source_sha256=sha)
        return idx

    cap0 = 2 * params.max_neighbors
    need = count * 4 + count * 4 + count * cap0 * 4 + count * cap0 * 4
    if len(data) - off < need:
        raise BadHeader(f"{path}: truncated graph arrays")
    levels = np.frombuffer(data, dtype="<i4", count=count, offset=off).astype(np.int32)
    off += 4 * count
    deg = np.frombuffer(data, dtype="<i4", count=count, offset=off).astype(np.int32)
    off += 4 * count
    nbr = (
        np.frombuffer(data, dtype="<i4", count=count * cap0, offset=off)
        .astype(np.int32)
        .reshape(count, cap0)
    )
    off += 4 * count * cap0
    nbrdist = (
        np.frombuffer(data, dtype="<f4", count=count * cap0, offset=off)
        .astype(np.float32)
        .reshape(count, cap0)
    )

    upper: dict[int, dict[int, dict[int, float]]] = {}
    for lvl, node in meta.get("upper_nodes", []):
        upper.setdefault(int(lvl), {})[int(node)] = {}
    for lvl, src, dst, d in meta.get("upper_edges", []):
        upper[int(lvl)][int(src)][int(dst)] = float(d)

    return AnnIndex(
        view=view,
        params=params,
        mode="hnsw",
        levels=levels,
        nbr=nbr,
        nbrdist=nbrdist,
        deg=deg,
        upper=upper,
        entry=int(meta["entry"]),
        max_level=int(meta["max_level"]),
        source_sha256=sha,
    )
