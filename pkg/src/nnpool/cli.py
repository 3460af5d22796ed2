"""Command-line entry point.

Subcommands cover the whole pipeline: ``build-index`` persists a search graph
over a pool, ``retrieve`` materializes an augmentation set with provenance,
``train`` fits and saves a linear probe, ``sweep`` runs a full experiment
grid from a key=value config file, ``stats`` prints pool statistics, and
``serve`` starts the HTTP service.

Contract:

- exit 0 on success, 2 on input validation failure, 3 on retrieval
  shortfall, 4 on unexpected runtime failure;
- human-readable summaries go to stderr; machine-readable output goes to
  files or stdout only;
- no command mutates its input files;
- all randomness flows from explicit seeds (defaults are fixed constants,
  never wall-clock).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from .ann import HnswParams, build_index, load_index, save_index
from .classifier import TrainConfig, save_model, train
from .errors import NnpoolError, Shortfall
from .evaluation import (
    load_experiment,
    parse_config_file,
    provenance_report,
    sweep,
)
from .pool import load_pool, pool_stats, read_vectors
from .retriever import (
    MmrConfig,
    RetrievalConfig,
    retrieve,
    write_retrieved_manifest,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SHORTFALL = 3
EXIT_RUNTIME = 4


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


def cmd_build_index(args: argparse.Namespace) -> int:
    pool = load_pool(args.pool, args.vectors)
    params = HnswParams(
        max_neighbors=args.m,
        ef_construction=args.ef_construction,
        ef_search=args.ef_search,
        rng_seed=args.seed,
        brute_force_cutoff=args.brute_force_cutoff,
    )
    index = build_index(pool.view(), params)
    save_index(index, args.out, vectors_path=args.vectors)
    _say(
        f"indexed {index.count} rows of dim {index.dim} "
        f"(mode={index.mode}, M={params.max_neighbors}, "
        f"efc={params.ef_construction}, efs={params.ef_search}, "
        f"seed={params.rng_seed}) -> {args.out}"
    )
    return EXIT_OK


def cmd_retrieve(args: argparse.Namespace) -> int:
    pool = load_pool(args.pool, args.vectors)
    index = load_index(args.index, pool, vectors_path=args.vectors)
    queries = read_vectors(args.queries)
    mmr = None if args.mmr_lambda is None else MmrConfig(lam=args.mmr_lambda)
    config = RetrievalConfig(
        total_r=args.r,
        exclude_languages=frozenset(args.exclude_lang),
        exclude_tasks=frozenset(args.exclude_task),
        mmr=mmr,
    )
    rset = retrieve(index, pool, np.asarray(queries, dtype=np.float64), config)
    write_retrieved_manifest(rset, args.out)
    counts: dict[str, int] = {}
    for it in rset.items:
        counts[it.instance.source_task] = counts.get(it.instance.source_task, 0) + 1
    _say(f"retrieved {len(rset.items)} instances -> {args.out}")
    for task in sorted(counts, key=lambda t: (-counts[t], t)):
        _say(f"  {task}: {counts[task]} ({100.0 * counts[task] / len(rset.items):.1f}%)")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    pool = load_pool(args.pool, args.vectors)
    data = list(
        zip(pool.vectors.astype(np.float64), (i.label for i in pool.instances))
    )
    val = []
    if args.val_pool:
        if not args.val_vectors:
            raise ValueError("--val-vectors is required with --val-pool")
        vpool = load_pool(args.val_pool, args.val_vectors)
        val = list(
            zip(vpool.vectors.astype(np.float64), (i.label for i in vpool.instances))
        )
    config = TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch_size,
        epochs=args.epochs,
        l2=args.l2,
        rng_seed=args.seed,
    )
    model, history = train(data, val, config)
    save_model(model, args.out)
    last = history.epochs[-1]
    _say(
        f"trained {len(history.epochs)} epochs on {len(data)} rows "
        f"(final loss {last.train_loss:.6f}"
        + (f", val F1 {last.val_f1:.4f}" if last.val_f1 is not None else "")
        + f", kept epoch {history.best_epoch}) -> {args.out}"
    )
    for flag in history.flags:
        _say(f"  flag: {flag}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    kv = parse_config_file(args.config)
    config, out_path, workers = load_experiment(kv)
    if args.workers is not None:
        workers = args.workers
    rows = sweep(config, out_path=out_path, workers=workers)
    report = provenance_report(rows)
    report_path = out_path + ".provenance.json"
    with open(report_path, "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")
    _say(
        f"swept {len(config.train_sizes)} sizes x {len(config.retrieval_counts)} "
        f"counts x {len(config.seeds)} seeds = {len(rows)} runs -> {out_path}"
    )
    for entry in report[:4]:
        _say(f"  {entry['task']}: {entry['count']} ({entry['percent']:.1f}%)")
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    pool = load_pool(args.pool, args.vectors)
    report = pool_stats(pool)
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True, ensure_ascii=False))
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nnpool",
        description="Cross-lingual retrieval augmentation over embedded text pools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-index", help="build and persist a search index")
    p.add_argument("--pool", required=True, help="manifest (.pool.jsonl)")
    p.add_argument("--vectors", required=True, help="vector file (.vec)")
    p.add_argument("--out", required=True, help="output index file")
    p.add_argument("--m", type=int, default=128, help="max neighbors per node")
    p.add_argument("--ef-construction", type=int, default=200)
    p.add_argument("--ef-search", type=int, default=128)
    p.add_argument("--seed", type=int, default=0, help="level-assignment seed")
    p.add_argument(
        "--brute-force-cutoff",
        type=int,
        default=2000,
        help="below this many rows, skip the graph and search exhaustively",
    )
    p.set_defaults(handler=cmd_build_index)

    p = sub.add_parser("retrieve", help="retrieve an augmentation set")
    p.add_argument("--index", required=True, help="index file from build-index")
    p.add_argument("--pool", required=True, help="manifest the index was built over")
    p.add_argument("--vectors", required=True, help="vector file the index was built over")
    p.add_argument("--queries", required=True, help="query vectors (.vec)")
    p.add_argument("--r", type=int, required=True, help="total instances to retrieve")
    p.add_argument(
        "--exclude-lang", action="append", default=[], metavar="LANG",
        help="language code to exclude (repeatable)",
    )
    p.add_argument(
        "--exclude-task", action="append", default=[], metavar="TASK",
        help="source task to exclude (repeatable)",
    )
    p.add_argument(
        "--mmr-lambda", type=float, default=None,
        help="enable diversity selection with this relevance weight",
    )
    p.add_argument("--out", required=True, help="output manifest with provenance")
    p.set_defaults(handler=cmd_retrieve)

    p = sub.add_parser("train", help="train a linear probe on a pool")
    p.add_argument("--pool", required=True)
    p.add_argument("--vectors", required=True)
    p.add_argument("--out", required=True, help="output model file")
    p.add_argument("--val-pool", default=None, help="validation manifest (optional)")
    p.add_argument("--val-vectors", default=None)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument(
        "--epochs", type=int, default=None,
        help="default: 10 if under 10k training rows, else 5",
    )
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("sweep", help="run an experiment grid from a config file")
    p.add_argument("--config", required=True, help="flat key=value experiment file")
    p.add_argument("--workers", type=int, default=None, help="parallel cell workers")
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("stats", help="print pool statistics as JSON")
    p.add_argument("--pool", required=True)
    p.add_argument("--vectors", required=True)
    p.set_defaults(handler=cmd_stats)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(handler=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except Shortfall as exc:
        _say(f"shortfall: {exc}")
        return EXIT_SHORTFALL
    except (NnpoolError, ValueError, OSError) as exc:
        _say(f"error: {exc}")
        return EXIT_VALIDATION
    except KeyboardInterrupt:
        _say("interrupted")
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - last-resort runtime mapping
        _say(f"runtime failure: {type(exc).__name__}: {exc}")
        return EXIT_RUNTIME


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
