"""Labeled multilingual pool: on-disk formats, validation, filtered views.

A pool is two files that travel together:

* manifest (``.pool.jsonl``) — UTF-8, one JSON object per line with keys
  ``text`` (non-empty string), ``label`` (0 or 1), ``lang`` (two lowercase
  letters), ``task`` (string). Line N corresponds to vector row N.
* vectors (``.vec``) — header ``XVEC`` | version u32 LE (=1) | count u64 LE |
  dim u32 LE, then count*dim float32 LE values row-major. No padding, no
  footer.

Instance ids are assigned as row indices at load time. Pools are immutable
after load and safe to share across threads.
"""

from __future__ import annotations

import json
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadHeader,
    CountMismatch,
    IoFailure,
    MalformedRecord,
    NonFiniteVector,
)

VEC_MAGIC = b"XVEC"
VEC_VERSION = 1
_HEADER = struct.Struct("<4sIQI")  # magic, version, count, dim

_LANG_RE = re.compile(r"^[a-z]{2}$")


@dataclass(frozen=True)
class Instance:
    """One labeled text: id is the pool row index."""

    id: int
    text: str
    label: int
    language: str
    source_task: str


@dataclass
class Pool:
    """Aligned instance metadata and embedding matrix (row i <-> instance i)."""

    instances: list[Instance]
    vectors: np.ndarray  # float32, shape (count, dim)

    @property
    def count(self) -> int:
        return len(self.instances)

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def view(self, selected=None) -> "PoolView":
        if selected is None:
            selected = np.arange(self.count, dtype=np.int64)
        return PoolView(self, np.asarray(selected, dtype=np.int64))


@dataclass
class PoolView:
    """A sorted subset of pool rows; original row indices are preserved."""

    pool: Pool
    selected: np.ndarray  # sorted int64 row indices

    def __post_init__(self):
        sel = np.asarray(self.selected, dtype=np.int64)
        sel = np.unique(sel)  # unique() also sorts
        if sel.size and (sel[0] < 0 or sel[-1] >= self.pool.count):
            raise ValueError("selected rows out of range")
        self.selected = sel

    @property
    def count(self) -> int:
        return int(self.selected.size)

    @property
    def dim(self) -> int:
        return self.pool.dim

    def vectors(self) -> np.ndarray:
        return self.pool.vectors[self.selected]

    def instances(self) -> list[Instance]:
        return [self.pool.instances[int(r)] for r in self.selected]


@dataclass
class StatsReport:
    total: int
    per_language: dict[str, int]
    language_pct: dict[str, float]
    per_task: dict[str, int]
    hate_fraction: float
    hate_fraction_per_task: dict[str, float]
    dim: int = 0

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "dim": self.dim,
            "per_language": self.per_language,
            "language_pct": self.language_pct,
            "per_task": self.per_task,
            "hate_fraction": self.hate_fraction,
            "hate_fraction_per_task": self.hate_fraction_per_task,
        }


def _parse_record(line: str, line_no: int) -> tuple[str, int, str, str]:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as e:
        raise MalformedRecord(line_no, f"invalid JSON ({e.msg})") from e
    if not isinstance(rec, dict):
        raise MalformedRecord(line_no, "record is not an object")
    missing = {"text", "label", "lang", "task"} - rec.keys()
    if missing:
        raise MalformedRecord(line_no, f"missing keys {sorted(missing)}")
    text = rec["text"]
    if not isinstance(text, str) or text == "":
        raise MalformedRecord(line_no, "text must be a non-empty string")
    label = rec["label"]
    if not isinstance(label, int) or isinstance(label, bool) or label not in (0, 1):
        raise MalformedRecord(line_no, "label must be 0 or 1")
    lang = rec["lang"]
    if not isinstance(lang, str) or not _LANG_RE.match(lang):
        raise MalformedRecord(line_no, "lang must match [a-z]{2}")
    task = rec["task"]
    if not isinstance(task, str) or task == "":
        raise MalformedRecord(line_no, "task must be a non-empty string")
    return text, label, lang, task


def read_vectors(vectors_path) -> np.ndarray:
    """Read a ``.vec`` file into a float32 (count, dim) array.

    Raises BadHeader on a malformed file and NonFiniteVector on NaN/Inf
    (reporting the first offending row).
    """
    path = Path(vectors_path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e
    if len(raw) < _HEADER.size:
        raise BadHeader(f"{path}: file shorter than header")
    magic, version, count, dim = _HEADER.unpack_from(raw, 0)
    if magic != VEC_MAGIC:
        raise BadHeader(f"{path}: bad magic {magic!r}")
    if version != VEC_VERSION:
        raise BadHeader(f"{path}: unsupported version {version}")
    if dim <= 0:
        raise BadHeader(f"{path}: non-positive dim {dim}")
    expected = _HEADER.size + count * dim * 4
    if len(raw) != expected:
        raise BadHeader(
            f"{path}: payload is {len(raw) - _HEADER.size} bytes, "
            f"expected {count * dim * 4} for count={count} dim={dim}"
        )
    data = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(count, dim)
    finite_rows = np.isfinite(data).all(axis=1)
    if not finite_rows.all():
        raise NonFiniteVector(int(np.argmin(finite_rows)))
    # copy so the array owns its memory (frombuffer is read-only)
    return np.ascontiguousarray(data, dtype=np.float32)


def write_vectors(vectors: np.ndarray, vectors_path) -> None:
    arr = np.ascontiguousarray(vectors, dtype="<f4")
    if arr.ndim != 2:
        raise ValueError("vectors must be 2-D")
    if not np.isfinite(arr).all():
        bad = int(np.argmin(np.isfinite(arr).all(axis=1)))
        raise NonFiniteVector(bad)
    header = _HEADER.pack(VEC_MAGIC, VEC_VERSION, arr.shape[0], arr.shape[1])
    try:
        with open(vectors_path, "wb") as f:
            f.write(header)
            f.write(arr.tobytes())
    except OSError as e:
        raise IoFailure(f"cannot write {vectors_path}: {e}") from e


def load_pool(manifest_path, vectors_path) -> Pool:
    """Load and validate a pool from its manifest and vector files."""
    vectors = read_vectors(vectors_path)
    instances: list[Instance] = []
    try:
        with open(manifest_path, "r", encoding="utf-8") as f:
            for row, line in enumerate(f):
                line = line.rstrip("\n")
                if line == "":
                    raise MalformedRecord(row + 1, "empty line")
                text, label, lang, task = _parse_record(line, row + 1)
                instances.append(Instance(row, text, label, lang, task))
    except OSError as e:
        raise IoFailure(f"cannot read {manifest_path}: {e}") from e
    if len(instances) != vectors.shape[0]:
        raise CountMismatch(len(instances), int(vectors.shape[0]))
    return Pool(instances, vectors)


def write_pool(pool: Pool, manifest_path, vectors_path) -> None:
    """Write a pool; load_pool(write_pool(p)) reproduces p bit-exactly."""
    if len(pool.instances) != pool.vectors.shape[0]:
        raise CountMismatch(len(pool.instances), int(pool.vectors.shape[0]))
    write_vectors(pool.vectors, vectors_path)
    try:
        with open(manifest_path, "w", encoding="utf-8") as f:
            for inst in pool.instances:
                rec = {
                    "text": inst.text,
                    "label": inst.label,
                    "lang": inst.language,
                    "task": inst.source_task,
                }
                f.write(json.dumps(rec, ensure_ascii=False) + "\n")
    except OSError as e:
        raise IoFailure(f"cannot write {manifest_path}: {e}") from e


def pool_stats(pool: Pool) -> StatsReport:
    """Counts, per-language percentages, and hate-label fractions."""
    total = pool.count
    per_language: dict[str, int] = {}
    per_task: dict[str, int] = {}
    hate_per_task: dict[str, int] = {}
    hate_total = 0
    for inst in pool.instances:
        per_language[inst.language] = per_language.get(inst.language, 0) + 1
        per_task[inst.source_task] = per_task.get(inst.source_task, 0) + 1
        if inst.label == 1:
            hate_total += 1
            hate_per_task[inst.source_task] = hate_per_task.get(inst.source_task, 0) + 1
    if total > 0:
        language_pct = {k: 100.0 * v / total for k, v in sorted(per_language.items())}
        hate_fraction = hate_total / total
    else:
        language_pct = {}
        hate_fraction = 0.0
    hate_fraction_per_task = {
        task: hate_per_task.get(task, 0) / n for task, n in sorted(per_task.items())
    }
    return StatsReport(
        total=total,
        per_language=dict(sorted(per_language.items())),
        language_pct=language_pct,
        per_task=dict(sorted(per_task.items())),
        hate_fraction=hate_fraction,
        hate_fraction_per_task=hate_fraction_per_task,
        dim=pool.dim if total else int(pool.vectors.shape[1]) if pool.vectors.ndim == 2 else 0,
    )


def filter_pool(pool: Pool, exclude_languages=(), exclude_tasks=()) -> PoolView:
    """View of all rows whose language and task are not excluded."""
    ex_lang = frozenset(exclude_languages)
    ex_task = frozenset(exclude_tasks)
    keep = [
        i
        for i, inst in enumerate(pool.instances)
        if inst.language not in ex_lang and inst.source_task not in ex_task
    ]
    return PoolView(pool, np.asarray(keep, dtype=np.int64))
