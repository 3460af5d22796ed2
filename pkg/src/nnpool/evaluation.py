"""Low-resource evaluation protocol.

Runs the full experimental grid: a fixed validation/test split of the target
pool, seeded subsampling of training subsets at several sizes, optional
retrieval augmentation from a source pool at several retrieval counts
(count 0 is the unaugmented baseline), a linear-probe fit per cell, and
F1-macro scoring on the held-out test set.

Results land in a CSV whose layout is canonical and byte-reproducible:

- header: ``train_size,retrieval_count,seed,f1_macro,wall_time_ms`` followed
  by one ``prov_<task>`` column per source task (sorted by task name);
- one row per (train_size, retrieval_count, seed) in configuration order;
- when more than one seed is configured, one mean row per cell with
  ``seed=MEAN``;
- one ``train_size=AVG`` row per retrieval count: the mean over train sizes
  of the per-cell means.

Measured wall times are kept on the in-memory rows and in the resumption
journal; the CSV's ``wall_time_ms`` column is fixed at 0 so reruns are
byte-identical. Floats are rendered with ``repr`` (shortest round-trip form).

A sweep flushes every finished cell to ``<out>.journal`` so an interrupted
run resumes where it stopped; the journal is deleted once the CSV is written.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .ann import AnnIndex, HnswParams, build_index
from .classifier import TrainConfig, predict_many, train
from .errors import (
    ConfigError,
    EmptyData,
    InsufficientData,
    IoFailure,
    LengthMismatch,
)
from .pool import Pool, PoolView, load_pool
from .retriever import RetrievalConfig, MmrConfig, retrieve

DEFAULT_TRAIN_SIZES = [10, 20, 30, 40, 50, 100, 200, 300, 400, 500, 1000, 2000]
DEFAULT_SEEDS = [0, 1, 2, 3, 4]


def f1_macro(predicted, actual) -> float:
    """Unweighted mean of the per-class F1 scores over classes {0, 1}.

    Any zero denominator (precision, recall, or the F1 combination) makes
    that quantity 0. Raises LengthMismatch / EmptyData on bad shapes.
    """
    pred = np.asarray(predicted, dtype=np.int64).reshape(-1)
    act = np.asarray(actual, dtype=np.int64).reshape(-1)
    if pred.shape[0] != act.shape[0]:
        raise LengthMismatch(a=int(pred.shape[0]), b=int(act.shape[0]))
    if pred.shape[0] == 0:
        raise EmptyData("f1_macro needs at least one example")
    for arr, name in ((pred, "predicted"), (act, "actual")):
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError(f"{name} labels must be 0 or 1")
    total = 0.0
    for cls in (0, 1):
        tp = float(np.sum((pred == cls) & (act == cls)))
        fp = float(np.sum((pred == cls) & (act != cls)))
        fn = float(np.sum((pred != cls) & (act == cls)))
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = (
            2.0 * precision * recall / (precision + recall)
            if precision + recall > 0
            else 0.0
        )
        total += f1
    return total / 2.0


def split_target(
    target_pool: Pool, val_size: int, test_size: int, split_seed: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Disjoint seeded split of the target pool's row indices.

    Returns (train_reservoir, val_rows, test_rows), each sorted ascending.
    The split depends only on ``split_seed``, never on per-run seeds.
    """
    n = target_pool.count
    if val_size < 0 or test_size < 0:
        raise ValueError("val_size and test_size must be >= 0")
    if val_size + test_size > n:
        raise InsufficientData(
            f"need {val_size + test_size} rows for val+test, pool has {n}"
        )
    perm = np.random.default_rng(split_seed).permutation(n)
    val = np.sort(perm[:val_size]).astype(np.int64)
    test = np.sort(perm[val_size : val_size + test_size]).astype(np.int64)
    reservoir = np.sort(perm[val_size + test_size :]).astype(np.int64)
    return reservoir, val, test


def subsample(train_reservoir: np.ndarray, size: int, seed: int) -> np.ndarray:
    """Uniform sample without replacement from the reservoir, sorted ascending.

    No label stratification: tiny samples may be single-label, which the
    trainer flags and handles.
    """
    reservoir = np.asarray(train_reservoir, dtype=np.int64).reshape(-1)
    if size < 0:
        raise ValueError("size must be >= 0")
    if size > reservoir.shape[0]:
        raise InsufficientData(
            f"asked for {size} rows, reservoir has {reservoir.shape[0]}"
        )
    rng = np.random.default_rng(seed)
    pick = rng.choice(reservoir, size=size, replace=False)
    return np.sort(pick).astype(np.int64)


@dataclass
class ExperimentConfig:
    """Everything one sweep needs.

    ``retrieval`` is a template: its ``total_r`` is replaced by each cell's
    retrieval count. ``train.rng_seed`` is likewise replaced by the cell seed,
    which drives both subsampling and batch shuffling.
    """

    target_pool: Pool
    source_pool: PoolView
    train_sizes: list[int] = field(default_factory=lambda: list(DEFAULT_TRAIN_SIZES))
    retrieval_counts: list[int] = field(default_factory=lambda: [0])
    seeds: list[int] = field(default_factory=lambda: list(DEFAULT_SEEDS))
    val_size: int = 500
    test_size: int = 2000
    split_seed: int = 42
    retrieval: RetrievalConfig = field(default_factory=lambda: RetrievalConfig(total_r=1))
    train: TrainConfig = field(default_factory=TrainConfig)
    ann: HnswParams = field(default_factory=HnswParams)

    def __post_init__(self) -> None:
        if not self.train_sizes or any(s < 1 for s in self.train_sizes):
            raise ConfigError("train_sizes must be positive integers")
        if not self.retrieval_counts or any(c < 0 for c in self.retrieval_counts):
            raise ConfigError("retrieval_counts must be non-negative integers")
        if not self.seeds:
            raise ConfigError("need at least one seed")
        if self.val_size + self.test_size + max(self.train_sizes) > self.target_pool.count:
            raise ConfigError(
                f"val_size + test_size + max(train_sizes) = "
                f"{self.val_size + self.test_size + max(self.train_sizes)} exceeds "
                f"target pool size {self.target_pool.count}"
            )
        if self.target_pool.dim != self.source_pool.dim:
            raise ConfigError(
                f"target dim {self.target_pool.dim} != source dim {self.source_pool.dim}"
            )


@dataclass(frozen=True)
class ResultRow:
    """One finished cell run. ``retrieved_provenance`` maps source task to
    the number of retrieved instances that came from it."""

    train_size: int
    retrieval_count: int
    seed: int
    f1_macro: float
    wall_time_ms: float
    retrieved_provenance: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not (0.0 <= self.f1_macro <= 1.0):
            raise ValueError(f"f1_macro out of [0, 1]: {self.f1_macro}")


class Experiment:
    """A configured experiment with its split and source index precomputed.

    The source view is re-filtered by the retrieval exclusions once, and the
    index over it is built lazily on the first augmented cell, then reused.
    """

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.reservoir, self.val_rows, self.test_rows = split_target(
            config.target_pool, config.val_size, config.test_size, config.split_seed
        )
        src = config.source_pool
        keep = [
            r
            for r in src.selected.tolist()
            if src.pool.instances[r].language not in config.retrieval.exclude_languages
            and src.pool.instances[r].source_task not in config.retrieval.exclude_tasks
        ]
        self.source_view = src.pool.view(np.asarray(keep, dtype=np.int64))
        self._index: AnnIndex | None = None

    @property
    def index(self) -> AnnIndex:
        if self._index is None:
            self._index = build_index(self.source_view, self.config.ann)
        return self._index

    def run_condition(self, train_size: int, retrieval_count: int, seed: int) -> ResultRow:
        """Train on (sampled target subset + retrieved instances) and score
        F1-macro on the fixed test split."""
        cfg = self.config
        t0 = time.perf_counter()
        rows = subsample(self.reservoir, train_size, seed)
        tp = cfg.target_pool
        xs = tp.vectors[rows].astype(np.float64)
        ys = [tp.instances[r].label for r in rows.tolist()]

        provenance: dict[str, int] = {}
        if retrieval_count > 0:
            rcfg = dataclasses.replace(cfg.retrieval, total_r=retrieval_count)
            rset = retrieve(self.index, self.source_view.pool, xs, rcfg)
            counts = Counter(it.instance.source_task for it in rset.items)
            provenance = dict(sorted(counts.items()))
            src_rows = np.asarray(rset.rows(), dtype=np.int64)
            sp = self.source_view.pool
            xs = np.concatenate([xs, sp.vectors[src_rows].astype(np.float64)])
            ys = ys + [sp.instances[r].label for r in src_rows.tolist()]

        train_pairs = list(zip(xs, ys))
        val_pairs = list(
            zip(
                tp.vectors[self.val_rows].astype(np.float64),
                [tp.instances[r].label for r in self.val_rows.tolist()],
            )
        )
        model, _ = train(train_pairs, val_pairs, dataclasses.replace(cfg.train, rng_seed=seed))

        test_x = tp.vectors[self.test_rows].astype(np.float64)
        test_y = [tp.instances[r].label for r in self.test_rows.tolist()]
        preds = (predict_many(model, test_x) >= 0.5).astype(np.int64)
        score = f1_macro(preds, test_y)
        wall = (time.perf_counter() - t0) * 1000.0
        return ResultRow(
            train_size=train_size,
            retrieval_count=retrieval_count,
            seed=seed,
            f1_macro=score,
            wall_time_ms=wall,
            retrieved_provenance=provenance,
        )


def run_condition(
    config: ExperimentConfig, train_size: int, retrieval_count: int, seed: int
) -> ResultRow:
    """One-off convenience wrapper; sweeps should use Experiment directly."""
    return Experiment(config).run_condition(train_size, retrieval_count, seed)


def _config_fingerprint(config: ExperimentConfig) -> str:
    payload = {
        "train_sizes": config.train_sizes,
        "retrieval_counts": config.retrieval_counts,
        "seeds": config.seeds,
        "val_size": config.val_size,
        "test_size": config.test_size,
        "split_seed": config.split_seed,
        "retrieval": {
            "exclude_languages": sorted(config.retrieval.exclude_languages),
            "exclude_tasks": sorted(config.retrieval.exclude_tasks),
            "mmr": None
            if config.retrieval.mmr is None
            else [config.retrieval.mmr.lam, config.retrieval.mmr.candidate_multiplier],
            "k_init": config.retrieval.k_init,
        },
        "train": dataclasses.asdict(config.train),
        "ann": config.ann.to_dict(),
        "target": [config.target_pool.count, config.target_pool.dim],
        "source": [config.source_pool.count, config.source_pool.dim],
    }
    blob = json.dumps(payload, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def _source_tasks(config: ExperimentConfig) -> list[str]:
    return sorted({inst.source_task for inst in config.source_pool.instances()})


def render_csv(config: ExperimentConfig, rows: list[ResultRow]) -> str:
    """Canonical CSV text for a finished grid (see module docstring for the
    layout). Same config and rows always produce identical bytes."""
    tasks = _source_tasks(config)
    header = ["train_size", "retrieval_count", "seed", "f1_macro", "wall_time_ms"]
    header += [f"prov_{t}" for t in tasks]
    by_cell: dict[tuple[int, int, int], ResultRow] = {
        (r.train_size, r.retrieval_count, r.seed): r for r in rows
    }
    lines = [",".join(header)]

    def fmt(x) -> str:
        return repr(float(x)) if isinstance(x, float) else str(x)

    def emit(size, count, seed, f1, prov) -> None:
        cells = [str(size), str(count), str(seed), fmt(f1), "0"]
        cells += [fmt(prov.get(t, 0)) for t in tasks]
        lines.append(",".join(cells))

    mean_rows = len(config.seeds) > 1
    cell_means: dict[tuple[int, int], tuple[float, dict]] = {}
    for size in config.train_sizes:
        for count in config.retrieval_counts:
            group = [by_cell[(size, count, s)] for s in config.seeds]
            for r in group:
                emit(size, count, r.seed, r.f1_macro, r.retrieved_provenance)
            f1m = sum(r.f1_macro for r in group) / len(group)
            provm = {
                t: sum(r.retrieved_provenance.get(t, 0) for r in group) / len(group)
                for t in tasks
            }
            cell_means[(size, count)] = (f1m, provm)
            if mean_rows:
                emit(size, count, "MEAN", f1m, provm)
    for count in config.retrieval_counts:
        f1s = [cell_means[(s, count)][0] for s in config.train_sizes]
        avg_f1 = sum(f1s) / len(f1s)
        avg_prov = {
            t: sum(cell_means[(s, count)][1].get(t, 0) for s in config.train_sizes)
            / len(config.train_sizes)
            for t in tasks
        }
        emit("AVG", count, "MEAN", avg_f1, avg_prov)
    return "\n".join(lines) + "\n"


def _journal_path(out_path: str) -> str:
    return out_path + ".journal"


def _load_journal(path: str, fingerprint: str) -> dict[tuple[int, int, int], ResultRow]:
    done: dict[tuple[int, int, int], ResultRow] = {}
    if not os.path.exists(path):
        return done
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.read().splitlines()
    except OSError:
        return done
    if not lines:
        return done
    try:
        head = json.loads(lines[0])
    except json.JSONDecodeError:
        return done
    if head.get("config_fingerprint") != fingerprint:
        return done
    for line in lines[1:]:
        try:
            rec = json.loads(line)
            row = ResultRow(
                train_size=int(rec["train_size"]),
                retrieval_count=int(rec["retrieval_count"]),
                seed=int(rec["seed"]),
                f1_macro=float(rec["f1_macro"]),
                wall_time_ms=float(rec["wall_time_ms"]),
                retrieved_provenance={k: v for k, v in rec["prov"].items()},
            )
        except (json.JSONDecodeError, KeyError, ValueError):
            continue  # torn tail line from an interrupted run
        done[(row.train_size, row.retrieval_count, row.seed)] = row
    return done


def sweep(
    config: ExperimentConfig, out_path: str | None = None, workers: int = 1
) -> list[ResultRow]:
    """Run the full train_sizes x retrieval_counts x seeds grid.

    Returns rows in canonical configuration order. With ``out_path`` set, the
    canonical CSV is written there, every finished cell is journaled to
    ``<out_path>.journal`` for resumption, and the journal is removed once
    the CSV lands. ``workers`` > 1 runs cells in a thread pool; output is
    independent of scheduling.
    """
    ex = Experiment(config)
    cells = [
        (s, c, seed)
        for s in config.train_sizes
        for c in config.retrieval_counts
        for seed in config.seeds
    ]
    fingerprint = _config_fingerprint(config)
    journal = _journal_path(out_path) if out_path else None
    done = _load_journal(journal, fingerprint) if journal else {}

    pending = [cell for cell in cells if cell not in done]
    jfile = None
    if journal is not None:
        try:
            fresh = not done
            jfile = open(journal, "w" if fresh else "a", encoding="utf-8")
            if fresh:
                jfile.write(json.dumps({"config_fingerprint": fingerprint}) + "\n")
                jfile.flush()
        except OSError as exc:
            raise IoFailure(f"cannot write {journal}: {exc}") from exc

    def record(row: ResultRow) -> None:
        done[(row.train_size, row.retrieval_count, row.seed)] = row
        if jfile is not None:
            jfile.write(
                json.dumps(
                    {
                        "train_size": row.train_size,
                        "retrieval_count": row.retrieval_count,
                        "seed": row.seed,
                        "f1_macro": row.f1_macro,
                        "wall_time_ms": row.wall_time_ms,
                        "prov": row.retrieved_provenance,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
            jfile.flush()

    try:
        if any(c > 0 for _, c, _ in pending):
            ex.index  # build once up front, not inside worker threads
        if workers > 1 and len(pending) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(ex.run_condition, *cell) for cell in pending]
                for fut in futures:
                    record(fut.result())
        else:
            for cell in pending:
                record(ex.run_condition(*cell))
    finally:
        if jfile is not None:
            jfile.close()

    rows = [done[cell] for cell in cells]
    if out_path is not None:
        text = render_csv(config, rows)
        try:
            with open(out_path, "w", encoding="utf-8", newline="") as f:
                f.write(text)
        except OSError as exc:
            raise IoFailure(f"cannot write {out_path}: {exc}") from exc
        if journal is not None and os.path.exists(journal):
            os.remove(journal)
    return rows


def provenance_report(rows: list[ResultRow], top_n: int | None = None) -> list[dict]:
    """Aggregate retrieved-instance counts per source task across rows.

    Returns [{"task", "count", "percent"}] sorted by count descending then
    task ascending, optionally truncated to the top N tasks.
    """
    totals: Counter = Counter()
    for row in rows:
        for task, count in row.retrieved_provenance.items():
            totals[task] += count
    grand = sum(totals.values())
    ordered = sorted(totals.items(), key=lambda kv: (-kv[1], kv[0]))
    if top_n is not None:
        ordered = ordered[:top_n]
    return [
        {
            "task": task,
            "count": count,
            "percent": (100.0 * count / grand) if grand else 0.0,
        }
        for task, count in ordered
    ]


# ---------------------------------------------------------------------------
# Flat key=value experiment files
# ---------------------------------------------------------------------------

_REQUIRED_KEYS = (
    "target_manifest",
    "target_vectors",
    "source_manifest",
    "source_vectors",
    "out",
)

_KNOWN_KEYS = set(_REQUIRED_KEYS) | {
    "train_sizes",
    "retrieval_counts",
    "seeds",
    "val_size",
    "test_size",
    "split_seed",
    "exclude_languages",
    "exclude_tasks",
    "k_init",
    "mmr_enabled",
    "mmr_lambda",
    "mmr_candidate_multiplier",
    "learning_rate",
    "batch_size",
    "epochs",
    "l2",
    "select_best_on_validation",
    "max_neighbors",
    "ef_construction",
    "ef_search",
    "ann_seed",
    "brute_force_cutoff",
    "workers",
}


def parse_config_file(path: str) -> dict[str, str]:
    """Parse a flat ``key=value`` experiment file.

    Blank lines and ``#`` comments are ignored. Unknown or duplicate keys and
    missing required keys raise ConfigError. Values stay as raw strings here;
    ``load_experiment`` interprets them.
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    out: dict[str, str] = {}
    for ln, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{ln}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"{path}:{ln}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"{path}:{ln}: duplicate key {key!r}")
        out[key] = value
    missing = [k for k in _REQUIRED_KEYS if k not in out]
    if missing:
        raise ConfigError(f"{path}: missing required keys: {', '.join(missing)}")
    return out


def _parse_int(kv: dict, key: str, default: int) -> int:
    if key not in kv:
        return default
    try:
        return int(kv[key])
    except ValueError as exc:
        raise ConfigError(f"{key}: expected integer, got {kv[key]!r}") from exc


def _parse_float(kv: dict, key: str, default: float) -> float:
    if key not in kv:
        return default
    try:
        return float(kv[key])
    except ValueError as exc:
        raise ConfigError(f"{key}: expected float, got {kv[key]!r}") from exc


def _parse_bool(kv: dict, key: str, default: bool) -> bool:
    if key not in kv:
        return default
    v = kv[key].lower()
    if v in ("true", "1", "yes"):
        return True
    if v in ("false", "0", "no"):
        return False
    raise ConfigError(f"{key}: expected boolean, got {kv[key]!r}")


def _parse_int_list(kv: dict, key: str, default: list[int]) -> list[int]:
    if key not in kv:
        return list(default)
    try:
        return [int(p) for p in kv[key].split(",") if p.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"{key}: expected comma-separated integers") from exc


def _parse_str_set(kv: dict, key: str) -> frozenset[str]:
    if key not in kv or kv[key] == "":
        return frozenset()
    return frozenset(p.strip() for p in kv[key].split(",") if p.strip())


def load_experiment(kv: dict[str, str]) -> tuple[ExperimentConfig, str, int]:
    """Build an ExperimentConfig from parsed key=value pairs.

    Returns (config, out_path, workers). Loads both pools; any pool-format
    error propagates to the caller as-is.
    """
    for k in _REQUIRED_KEYS:
        if k not in kv:
            raise ConfigError(f"missing required key {k!r}")
    target = load_pool(kv["target_manifest"], kv["target_vectors"])
    source = load_pool(kv["source_manifest"], kv["source_vectors"])

    mmr = None
    if _parse_bool(kv, "mmr_enabled", False):
        mmr = MmrConfig(
            lam=_parse_float(kv, "mmr_lambda", 0.5),
            candidate_multiplier=_parse_int(kv, "mmr_candidate_multiplier", 2),
        )
    k_init = _parse_int(kv, "k_init", 0)
    retrieval = RetrievalConfig(
        total_r=1,
        exclude_languages=_parse_str_set(kv, "exclude_languages"),
        exclude_tasks=_parse_str_set(kv, "exclude_tasks"),
        mmr=mmr,
        k_init=k_init if k_init > 0 else None,
    )
    epochs_raw = kv.get("epochs", "auto")
    epochs = None if epochs_raw in ("auto", "") else _parse_int(kv, "epochs", 0)
    train_cfg = TrainConfig(
        learning_rate=_parse_float(kv, "learning_rate", 0.1),
        batch_size=_parse_int(kv, "batch_size", 16),
        epochs=epochs,
        l2=_parse_float(kv, "l2", 1e-4),
        select_best_on_validation=_parse_bool(kv, "select_best_on_validation", True),
    )
    ann = HnswParams(
        max_neighbors=_parse_int(kv, "max_neighbors", 128),
        ef_construction=_parse_int(kv, "ef_construction", 200),
        ef_search=_parse_int(kv, "ef_search", 128),
        rng_seed=_parse_int(kv, "ann_seed", 0),
        brute_force_cutoff=_parse_int(kv, "brute_force_cutoff", 2000),
    )
    try:
        config = ExperimentConfig(
            target_pool=target,
            source_pool=source.view(),
            train_sizes=_parse_int_list(kv, "train_sizes", DEFAULT_TRAIN_SIZES),
            retrieval_counts=_parse_int_list(kv, "retrieval_counts", [0]),
            seeds=_parse_int_list(kv, "seeds", DEFAULT_SEEDS),
            val_size=_parse_int(kv, "val_size", 500),
            test_size=_parse_int(kv, "test_size", 2000),
            split_seed=_parse_int(kv, "split_seed", 42),
            retrieval=retrieval,
            train=train_cfg,
            ann=ann,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return config, kv["out"], _parse_int(kv, "workers", 1)
