"""Request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str


class LoadPoolRequest(BaseModel):
    manifest_path: str
    vectors_path: str


class PoolInfo(BaseModel):
    pool_id: str
    count: int
    dim: int


class PoolStatsResponse(BaseModel):
    total: int
    dim: int
    per_language: dict[str, int]
    language_pct: dict[str, float]
    per_task: dict[str, int]
    hate_fraction: float
    hate_fraction_per_task: dict[str, float]


class BuildIndexRequest(BaseModel):
    pool_id: str
    max_neighbors: int = Field(default=128, ge=1)
    ef_construction: int = Field(default=200, ge=1)
    ef_search: int = Field(default=128, ge=1)
    rng_seed: int = 0
    brute_force_cutoff: int = Field(default=2000, ge=0)


class IndexInfo(BaseModel):
    index_id: str
    pool_id: str
    count: int
    dim: int
    mode: str


class SearchRequest(BaseModel):
    query: list[float]
    k: int = Field(ge=1)
    ef_search: int | None = Field(default=None, ge=1)


class NeighborModel(BaseModel):
    row: int
    distance: float


class SearchResponse(BaseModel):
    neighbors: list[NeighborModel]


class MmrOptions(BaseModel):
    lam: float = Field(default=0.5, ge=0.0, le=1.0)
    candidate_multiplier: int = Field(default=2, ge=2)


class RetrieveRequest(BaseModel):
    queries: list[list[float]]
    r: int = Field(ge=1)
    exclude_languages: list[str] = Field(default_factory=list)
    exclude_tasks: list[str] = Field(default_factory=list)
    mmr: MmrOptions | None = None
    k_init: int | None = Field(default=None, ge=1)


class RetrievedItemModel(BaseModel):
    row: int
    text: str
    label: int
    language: str
    source_task: str
    query_index: int
    rank: int
    distance: float


class RetrieveResponse(BaseModel):
    items: list[RetrievedItemModel]
    provenance: dict[str, int]


class TrainRequest(BaseModel):
    pool_id: str
    val_pool_id: str | None = None
    learning_rate: float = Field(default=0.1, gt=0)
    batch_size: int = Field(default=16, ge=1)
    epochs: int | None = Field(default=None, ge=1)
    l2: float = Field(default=1e-4, ge=0)
    rng_seed: int = 0
    select_best_on_validation: bool = True


class TrainInfo(BaseModel):
    model_id: str
    epochs_run: int
    best_epoch: int | None
    final_train_loss: float
    final_val_f1: float | None
    flags: list[str]


class PredictRequest(BaseModel):
    vector: list[float]


class PredictResponse(BaseModel):
    probability: float
    label: int


class ErrorResponse(BaseModel):
    error: str
    detail: str
