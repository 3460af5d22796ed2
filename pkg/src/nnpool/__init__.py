"""Cross-lingual retrieval augmentation over embedded text pools.

The pipeline: load a labeled multilingual pool with precomputed embeddings
(`pool`), index it for nearest-neighbor search (`ann`), build deduplicated
augmentation sets for a small target training set (`retriever`), train a
linear probe on the combined data (`classifier`), and sweep the full
low-resource evaluation grid (`evaluation`). `cli` and `service` expose the
same engine on the command line and over HTTP.
"""

from .ann import (
    AnnIndex,
    HnswParams,
    Neighbor,
    brute_force_search,
    build_index,
    load_index,
    save_index,
    search,
)
from .classifier import (
    LinearModel,
    TrainConfig,
    TrainHistory,
    bce_loss,
    grad,
    load_model,
    predict,
    predict_label,
    predict_many,
    save_model,
    train,
)
from .errors import (
    BadHeader,
    ConfigError,
    CountMismatch,
    DimMismatch,
    EmptyData,
    EmptyView,
    InsufficientData,
    IoFailure,
    KTooLarge,
    LengthMismatch,
    MalformedRecord,
    NnpoolError,
    NonFiniteVector,
    Shortfall,
    StaleIndex,
    ZeroVector,
)
from .evaluation import (
    ExperimentConfig,
    Experiment,
    ResultRow,
    f1_macro,
    provenance_report,
    run_condition,
    split_target,
    subsample,
    sweep,
)
from .metrics import cosine, cosine_to_many, euclidean, euclidean_to_many
from .pool import (
    Instance,
    Pool,
    PoolView,
    StatsReport,
    filter_pool,
    load_pool,
    pool_stats,
    read_vectors,
    write_pool,
    write_vectors,
)
from .retriever import (
    MmrConfig,
    RetrievalConfig,
    RetrievedItem,
    RetrievedSet,
    mmr_select,
    retrieve,
    topk_union,
    write_retrieved_manifest,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # pool
    "Instance",
    "Pool",
    "PoolView",
    "StatsReport",
    "load_pool",
    "write_pool",
    "read_vectors",
    "write_vectors",
    "pool_stats",
    "filter_pool",
    # metrics
    "euclidean",
    "euclidean_to_many",
    "cosine",
    "cosine_to_many",
    # ann
    "HnswParams",
    "AnnIndex",
    "Neighbor",
    "build_index",
    "search",
    "brute_force_search",
    "save_index",
    "load_index",
    # retriever
    "RetrievalConfig",
    "MmrConfig",
    "RetrievedItem",
    "RetrievedSet",
    "topk_union",
    "retrieve",
    "mmr_select",
    "write_retrieved_manifest",
    # classifier
    "LinearModel",
    "TrainConfig",
    "TrainHistory",
    "bce_loss",
    "grad",
    "train",
    "predict",
    "predict_label",
    "predict_many",
    "save_model",
    "load_model",
    # evaluation
    "ExperimentConfig",
    "Experiment",
    "ResultRow",
    "f1_macro",
    "split_target",
    "subsample",
    "run_condition",
    "sweep",
    "provenance_report",
    # errors
    "NnpoolError",
    "MalformedRecord",
    "BadHeader",
    "CountMismatch",
    "NonFiniteVector",
    "IoFailure",
    "EmptyView",
    "DimMismatch",
    "StaleIndex",
    "ZeroVector",
    "KTooLarge",
    "Shortfall",
    "EmptyData",
    "LengthMismatch",
    "InsufficientData",
    "ConfigError",
]
