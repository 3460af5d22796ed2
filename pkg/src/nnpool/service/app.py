"""FastAPI application exposing pools, indexes, retrieval, and probes.

State is an in-process registry on ``app.state``: pools, indexes, and models
get sequential ids. Engine validation errors map to 400, unknown ids to 404,
and retrieval shortfalls to 409; all error bodies are
``{"error": <type>, "detail": <message>}``.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..ann import AnnIndex, HnswParams, build_index, search
from ..classifier import LinearModel, TrainConfig, predict, train
from ..errors import NnpoolError, Shortfall
from ..pool import Pool, load_pool, pool_stats
from ..retriever import MmrConfig, RetrievalConfig, retrieve
from .schemas import (
    BuildIndexRequest,
    HealthResponse,
    IndexInfo,
    LoadPoolRequest,
    NeighborModel,
    PoolInfo,
    PoolStatsResponse,
    PredictRequest,
    PredictResponse,
    RetrievedItemModel,
    RetrieveRequest,
    RetrieveResponse,
    SearchRequest,
    SearchResponse,
    TrainInfo,
    TrainRequest,
)


class Registry:
    """Sequentially numbered in-memory object store."""

    def __init__(self) -> None:
        self.pools: dict[str, Pool] = {}
        self.indexes: dict[str, tuple[AnnIndex, str]] = {}
        self.models: dict[str, LinearModel] = {}
        self._next = {"pool": 0, "index": 0, "model": 0}

    def new_id(self, kind: str) -> str:
        self._next[kind] += 1
        return f"{kind}-{self._next[kind]}"


class NotFound(Exception):
    def __init__(self, kind: str, key: str):
        super().__init__(f"unknown {kind} {key!r}")


def create_app() -> FastAPI:
    app = FastAPI(
        title="nnpool",
        version=__version__,
        description="Cross-lingual retrieval augmentation over embedded text pools.",
    )
    app.state.registry = Registry()
    reg: Registry = app.state.registry

    @app.exception_handler(Shortfall)
    async def _shortfall(_: Request, exc: Shortfall) -> JSONResponse:
        return JSONResponse(
            status_code=409, content={"error": "Shortfall", "detail": str(exc)}
        )

    @app.exception_handler(NotFound)
    async def _not_found(_: Request, exc: NotFound) -> JSONResponse:
        return JSONResponse(
            status_code=404, content={"error": "NotFound", "detail": str(exc)}
        )

    @app.exception_handler(NnpoolError)
    async def _engine_error(_: Request, exc: NnpoolError) -> JSONResponse:
        return JSONResponse(
            status_code=400,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.exception_handler(ValueError)
    async def _value_error(_: Request, exc: ValueError) -> JSONResponse:
        return JSONResponse(
            status_code=400, content={"error": "ValueError", "detail": str(exc)}
        )

    def get_pool(pool_id: str) -> Pool:
        if pool_id not in reg.pools:
            raise NotFound("pool", pool_id)
        return reg.pools[pool_id]

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok")

    @app.post("/pools", response_model=PoolInfo)
    def create_pool(req: LoadPoolRequest) -> PoolInfo:
        pool = load_pool(req.manifest_path, req.vectors_path)
        pool_id = reg.new_id("pool")
        reg.pools[pool_id] = pool
        return PoolInfo(pool_id=pool_id, count=pool.count, dim=pool.dim)

    @app.get("/pools/{pool_id}", response_model=PoolInfo)
    def pool_info(pool_id: str) -> PoolInfo:
        pool = get_pool(pool_id)
        return PoolInfo(pool_id=pool_id, count=pool.count, dim=pool.dim)

    @app.get("/pools/{pool_id}/stats", response_model=PoolStatsResponse)
    def stats(pool_id: str) -> PoolStatsResponse:
        return PoolStatsResponse(**pool_stats(get_pool(pool_id)).to_dict())

    @app.post("/indexes", response_model=IndexInfo)
    def create_index(req: BuildIndexRequest) -> IndexInfo:
        pool = get_pool(req.pool_id)
        params = HnswParams(
            max_neighbors=req.max_neighbors,
            ef_construction=req.ef_construction,
            ef_search=req.ef_search,
            rng_seed=req.rng_seed,
            brute_force_cutoff=req.brute_force_cutoff,
        )
        index = build_index(pool.view(), params)
        index_id = reg.new_id("index")
        reg.indexes[index_id] = (index, req.pool_id)
        return IndexInfo(
            index_id=index_id,
            pool_id=req.pool_id,
            count=index.count,
            dim=index.dim,
            mode=index.mode,
        )

    def get_index(index_id: str) -> tuple[AnnIndex, str]:
        if index_id not in reg.indexes:
            raise NotFound("index", index_id)
        return reg.indexes[index_id]

    @app.post("/indexes/{index_id}/search", response_model=SearchResponse)
    def search_index(index_id: str, req: SearchRequest) -> SearchResponse:
        index, _ = get_index(index_id)
        hits = search(
            index, np.asarray(req.query, dtype=np.float64), req.k, ef_search=req.ef_search
        )
        return SearchResponse(
            neighbors=[NeighborModel(row=h.row, distance=h.distance) for h in hits]
        )

    @app.post("/indexes/{index_id}/retrieve", response_model=RetrieveResponse)
    def retrieve_from_index(index_id: str, req: RetrieveRequest) -> RetrieveResponse:
        index, pool_id = get_index(index_id)
        pool = get_pool(pool_id)
        mmr = None
        if req.mmr is not None:
            mmr = MmrConfig(lam=req.mmr.lam, candidate_multiplier=req.mmr.candidate_multiplier)
        config = RetrievalConfig(
            total_r=req.r,
            exclude_languages=frozenset(req.exclude_languages),
            exclude_tasks=frozenset(req.exclude_tasks),
            mmr=mmr,
            k_init=req.k_init,
        )
        rset = retrieve(index, pool, np.asarray(req.queries, dtype=np.float64), config)
        provenance: dict[str, int] = {}
        items = []
        for it in rset.items:
            provenance[it.instance.source_task] = (
                provenance.get(it.instance.source_task, 0) + 1
            )
            items.append(
                RetrievedItemModel(
                    row=it.row,
                    text=it.instance.text,
                    label=it.instance.label,
                    language=it.instance.language,
                    source_task=it.instance.source_task,
                    query_index=it.query_index,
                    rank=it.rank,
                    distance=it.distance,
                )
            )
        return RetrieveResponse(items=items, provenance=provenance)

    @app.post("/models", response_model=TrainInfo)
    def train_model(req: TrainRequest) -> TrainInfo:
        pool = get_pool(req.pool_id)
        data = list(
            zip(pool.vectors.astype(np.float64), (i.label for i in pool.instances))
        )
        val = []
        if req.val_pool_id is not None:
            vpool = get_pool(req.val_pool_id)
            val = list(
                zip(vpool.vectors.astype(np.float64), (i.label for i in vpool.instances))
            )
        config = TrainConfig(
            learning_rate=req.learning_rate,
            batch_size=req.batch_size,
            epochs=req.epochs,
            l2=req.l2,
            rng_seed=req.rng_seed,
            select_best_on_validation=req.select_best_on_validation,
        )
        model, history = train(data, val, config)
        model_id = reg.new_id("model")
        reg.models[model_id] = model
        last = history.epochs[-1]
        return TrainInfo(
            model_id=model_id,
            epochs_run=len(history.epochs),
            best_epoch=history.best_epoch,
            final_train_loss=last.train_loss,
            final_val_f1=last.val_f1,
            flags=history.flags,
        )

    @app.post("/models/{model_id}/predict", response_model=PredictResponse)
    def predict_one(model_id: str, req: PredictRequest) -> PredictResponse:
        if model_id not in reg.models:
            raise NotFound("model", model_id)
        model = reg.models[model_id]
        p = predict(model, np.asarray(req.vector, dtype=np.float64))
        return PredictResponse(probability=p, label=1 if p >= 0.5 else 0)

    return app
