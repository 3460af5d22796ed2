"""Linear probe over frozen embeddings.

A logistic model p = sigmoid(w.x + b) trained with mini-batch SGD on binary
cross-entropy plus an L2 penalty on the weights (never the bias). Batches are
formed by a seeded shuffle each epoch, so a (data, config) pair always yields
bit-identical parameters. When a validation set is supplied, the returned
model is the epoch snapshot with the highest validation F1-macro, earliest
epoch winning ties.

Numerical choices: probabilities inside the loss are clamped to
[1e-12, 1 - 1e-12]; predict() clamps to the open unit interval at float64
resolution. The analytic gradient ignores the loss clamp — the clamp only
binds beyond |w.x + b| > 27.6 where the clamped loss is flat anyway.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import BadHeader, DimMismatch, EmptyData, IoFailure

MODEL_MAGIC = b"XMDL"
MODEL_VERSION = 1
_MODEL_HEADER = struct.Struct("<4sIId")  # magic, version, dim, bias

_P_LO = 1e-12
_P_HI = 1.0 - 1e-12
_PRED_LO = np.nextafter(0.0, 1.0)
_PRED_HI = np.nextafter(1.0, 0.0)

AUTO_EPOCH_THRESHOLD = 10_000  # below: 10 epochs; at or above: 5


@dataclass
class LinearModel:
    """Weights and bias of the probe; all parameters finite."""

    weights: np.ndarray  # float64 (dim,)
    bias: float

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        self.bias = float(self.bias)
        if not (np.all(np.isfinite(self.weights)) and np.isfinite(self.bias)):
            raise ValueError("model parameters must be finite")

    @property
    def dim(self) -> int:
        return int(self.weights.shape[0])


@dataclass(frozen=True)
class TrainConfig:
    """SGD hyperparameters.

    ``epochs=None`` applies the size rule: 10 epochs when the training set has
    fewer than 10,000 rows, 5 otherwise.
    """

    learning_rate: float = 0.1
    batch_size: int = 16
    epochs: int | None = None
    l2: float = 1e-4
    rng_seed: int = 0
    select_best_on_validation: bool = True

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs is not None and self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.l2 < 0:
            raise ValueError("l2 must be >= 0")


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    val_f1: float | None


@dataclass
class TrainHistory:
    """Per-epoch loss / validation score plus degenerate-input flags."""

    epochs: list[EpochStats] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)
    best_epoch: int | None = None


def _as_xy(data) -> tuple[np.ndarray, np.ndarray]:
    if len(data) == 0:
        raise EmptyData("need at least one (vector, label) pair")
    xs = np.asarray([np.asarray(v, dtype=np.float64).reshape(-1) for v, _ in data])
    ys = np.asarray([int(lbl) for _, lbl in data], dtype=np.float64)
    if not np.all((ys == 0.0) | (ys == 1.0)):
        raise ValueError("labels must be 0 or 1")
    return xs, ys


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _bce_arrays(w: np.ndarray, b: float, xs: np.ndarray, ys: np.ndarray, l2: float) -> float:
    p = np.clip(_sigmoid(xs @ w + b), _P_LO, _P_HI)
    ce = -np.mean(ys * np.log(p) + (1.0 - ys) * np.log1p(-p))
    return float(ce + l2 * float(w @ w))


def bce_loss(model: LinearModel, data, l2: float) -> float:
    """Mean binary cross-entropy plus l2 * ||w||^2, probabilities clamped to
    [1e-12, 1 - 1e-12]."""
    xs, ys = _as_xy(data)
    if xs.shape[1] != model.dim:
        raise DimMismatch(expected=model.dim, got=int(xs.shape[1]))
    return _bce_arrays(model.weights, model.bias, xs, ys, l2)


def grad(model: LinearModel, batch, l2: float) -> tuple[np.ndarray, float]:
    """Analytic gradient of the batch loss: ((1/B) sum (p - y) x + 2 l2 w,
    (1/B) sum (p - y))."""
    xs, ys = _as_xy(batch)
    if xs.shape[1] != model.dim:
        raise DimMismatch(expected=model.dim, got=int(xs.shape[1]))
    p = _sigmoid(xs @ model.weights + model.bias)
    err = p - ys
    gw = xs.T @ err / len(ys) + 2.0 * l2 * model.weights
    gb = float(np.mean(err))
    return gw, gb


def predict(model: LinearModel, vector) -> float:
    """P(label = 1), clamped into the open interval (0, 1)."""
    x = np.asarray(vector, dtype=np.float64).reshape(-1)
    if x.shape[0] != model.dim:
        raise DimMismatch(expected=model.dim, got=int(x.shape[0]))
    p = float(_sigmoid(np.array([x @ model.weights + model.bias]))[0])
    return min(_PRED_HI, max(_PRED_LO, p))


def predict_many(model: LinearModel, matrix) -> np.ndarray:
    """Row-wise P(label = 1) for a matrix of vectors."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] != model.dim:
        raise DimMismatch(expected=model.dim, got=int(m.shape[-1]))
    p = _sigmoid(m @ model.weights + model.bias)
    return np.clip(p, _PRED_LO, _PRED_HI)


def predict_label(model: LinearModel, vector) -> int:
    """1 iff P(label = 1) >= 0.5 (ties go to 1)."""
    return 1 if predict(model, vector) >= 0.5 else 0


def _f1_macro_arrays(pred: np.ndarray, actual: np.ndarray) -> float:
    # local copy of the zero-denominator-is-zero rule; the public scorer
    # lives in evaluation.f1_macro
    score = 0.0
    for cls in (0, 1):
        tp = float(np.sum((pred == cls) & (actual == cls)))
        fp = float(np.sum((pred == cls) & (actual != cls)))
        fn = float(np.sum((pred != cls) & (actual == cls)))
        prec = tp / (tp + fp) if tp + fp > 0 else 0.0
        rec = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec > 0 else 0.0
        score += f1
    return score / 2.0


def train(train_set, val_set, config: TrainConfig) -> tuple[LinearModel, TrainHistory]:
    """Mini-batch SGD from zero-initialized parameters.

    Returns the best validation snapshot when configured and a validation set
    is present, else the final-epoch model, plus a history of per-epoch train
    loss and validation F1-macro. A single-label training set is legal and
    flagged in ``history.flags``.
    """
    xs, ys = _as_xy(train_set)
    n, dim = xs.shape
    if val_set:
        vx, vy = _as_xy(val_set)
        if vx.shape[1] != dim:
            raise DimMismatch(expected=dim, got=int(vx.shape[1]))
    else:
        vx = vy = None

    history = TrainHistory()
    if len(np.unique(ys)) < 2:
        history.flags.append("single_label_train")

    epochs = config.epochs
    if epochs is None:
        epochs = 10 if n < AUTO_EPOCH_THRESHOLD else 5

    w = np.zeros(dim, dtype=np.float64)
    b = 0.0
    lr = config.learning_rate
    rng = np.random.default_rng(config.rng_seed)
    select = config.select_best_on_validation and vx is not None

    best_w, best_b, best_f1, best_epoch = None, 0.0, -1.0, None
    for epoch in range(epochs):
        perm = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            bx, by = xs[idx], ys[idx]
            p = _sigmoid(bx @ w + b)
            err = p - by
            w -= lr * (bx.T @ err / len(idx) + 2.0 * config.l2 * w)
            b -= lr * float(np.mean(err))

        loss = _bce_arrays(w, b, xs, ys, config.l2)
        val_f1 = None
        if vx is not None:
            vp = np.clip(_sigmoid(vx @ w + b), _PRED_LO, _PRED_HI)
            preds = (vp >= 0.5).astype(np.int64)
            val_f1 = _f1_macro_arrays(preds, vy.astype(np.int64))
        history.epochs.append(EpochStats(epoch=epoch, train_loss=loss, val_f1=val_f1))
        if select and val_f1 > best_f1:
            best_w, best_b, best_f1, best_epoch = w.copy(), b, val_f1, epoch

    if select and best_w is not None:
        history.best_epoch = best_epoch
        return LinearModel(weights=best_w, bias=best_b), history
    history.best_epoch = epochs - 1
    return LinearModel(weights=w, bias=b), history


def save_model(model: LinearModel, path: str) -> None:
    """Binary round-trip-exact serialization (dim, bias, float64 weights)."""
    try:
        with open(path, "wb") as f:
            f.write(_MODEL_HEADER.pack(MODEL_MAGIC, MODEL_VERSION, model.dim, model.bias))
            f.write(np.ascontiguousarray(model.weights, dtype="<f8").tobytes())
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_model(path: str) -> LinearModel:
    try:
        with open(path, "rb") as f:
            raw = f.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if len(raw) < _MODEL_HEADER.size:
        raise BadHeader(f"{path}: truncated header")
    magic, version, dim, bias = _MODEL_HEADER.unpack_from(raw, 0)
    if magic != MODEL_MAGIC:
        raise BadHeader(f"{path}: bad magic {magic!r}")
    if version != MODEL_VERSION:
        raise BadHeader(f"{path}: unsupported version {version}")
    expected = _MODEL_HEADER.size + dim * 8
    if len(raw) != expected:
        raise BadHeader(f"{path}: expected {expected} bytes, found {len(raw)}")
    weights = np.frombuffer(raw, dtype="<f8", count=dim, offset=_MODEL_HEADER.size)
    return LinearModel(weights=weights.copy(), bias=bias)
