"""Training loop: class-balanced batches, momentum SGD, early stopping.

Deterministic given the config seed: the split, batch composition, and
weight init all come from one seeded generator, so two runs with the same
seed produce identical losses epoch for epoch.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import emb1
from ..exceptions import InsufficientClassesError, NoNegativesError, NoValidPairsError
from ..validation import as_matrix, check_labels
from .gradients import loss_gradient
from .mining import mine_semi_hard, triplet_semi_hard_loss
from .model import EmbeddingModel, forward, init_model
from .optim import TrainerConfig, lr_at, sgd_momentum_step

_VAL_CHUNK = 128


@dataclass
class TrainLogRow:
    epoch: int
    train_loss: float
    val_loss: float
    lr: float
    wall_seconds: float


@dataclass
class TrainResult:
    model: EmbeddingModel
    log: list[TrainLogRow]
    stop_reason: str  # "early_stopped" | "max_epochs"
    best_epoch: int
    train_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64), repr=False)
    val_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64), repr=False)


def _rebuild(model: EmbeddingModel, flat_params: list[np.ndarray]) -> EmbeddingModel:
    n = len(model.weights)
    return EmbeddingModel(
        weights=[flat_params[2 * i] for i in range(n)],
        biases=[flat_params[2 * i + 1] for i in range(n)],
    )


def _balanced_batches(labels: np.ndarray, batch_size: int, n_batches: int, rng) -> list[np.ndarray]:
    """Batches holding >= 2 classes with >= 2 samples each, so mining
    preconditions always hold."""
    classes, class_indices = np.unique(labels), {}
    for c in classes:
        class_indices[int(c)] = np.flatnonzero(labels == c)
    per_class = max(2, batch_size // len(classes)) if len(classes) * 2 <= batch_size else 2
    classes_per_batch = min(len(classes), max(2, batch_size // per_class))
    batches = []
    for _ in range(n_batches):
        chosen = rng.choice(classes, size=classes_per_batch, replace=False)
        picks = []
        for c in chosen:
            idx = class_indices[int(c)]
            picks.append(rng.choice(idx, size=per_class, replace=len(idx) < per_class))
        batches.append(np.concatenate(picks))
    return batches


def _val_loss(model: EmbeddingModel, features: np.ndarray, labels: np.ndarray, margin: float) -> float:
    """Pair-pooled loss over the validation set, chunked to bound the
    O(n^3) mining tensor."""
    total, pairs = 0.0, 0
    for start in range(0, features.shape[0], _VAL_CHUNK):
        f = features[start : start + _VAL_CHUNK]
        l = labels[start : start + _VAL_CHUNK]
        try:
            state = mine_semi_hard(forward(model, f), l, margin)
        except (NoValidPairsError, NoNegativesError):
            continue
        total += triplet_semi_hard_loss(state) * state.n_pairs
        pairs += state.n_pairs
    if pairs == 0:
        raise InsufficientClassesError("validation split yields no anchor-positive pairs")
    return total / pairs


def train(features, labels, config: TrainerConfig | None = None) -> TrainResult:
    """Fit the embedding head; returns the best-validation weights.

    Splits off a validation fraction by seeded shuffle, logs one row per
    epoch, and stops early when val loss fails to improve for
    config.patience consecutive epochs.
    """
    config = config or TrainerConfig()
    x = as_matrix(features, "features")
    y = check_labels(labels, x.shape[0])
    if np.unique(y).size < 2:
        raise InsufficientClassesError("training data needs >= 2 classes")

    rng = np.random.default_rng(config.seed)
    perm = rng.permutation(x.shape[0])
    n_train = int(round(x.shape[0] * config.split_fraction))
    n_train = min(max(n_train, 2), x.shape[0] - 1)
    train_idx, val_idx = perm[:n_train], perm[n_train:]
    x_train, y_train = x[train_idx], y[train_idx]
    x_val, y_val = x[val_idx], y[val_idx]
    if np.unique(y_train).size < 2:
        raise InsufficientClassesError("training split holds a single class")

    model = init_model(x.shape[1], config.hidden_dims, config.out_dim, seed=config.seed)
    velocity = [np.zeros_like(p) for p in model.params()]
    n_batches = -(-n_train // config.batch_size)

    log: list[TrainLogRow] = []
    best_val = np.inf
    best_epoch = -1
    best_params = model.copy()
    stale = 0
    stop_reason = "max_epochs"

    for epoch in range(config.max_epochs):
        start_time = time.perf_counter()
        lr = lr_at(config, epoch)
        batch_losses = []
        for batch_idx in _balanced_batches(y_train, config.batch_size, n_batches, rng):
            loss, grads = loss_gradient(model, x_train[batch_idx], y_train[batch_idx], config.margin)
            batch_losses.append(loss)
            new_params, velocity = sgd_momentum_step(model.params(), grads, velocity, lr, config.momentum)
            model = _rebuild(model, new_params)
        train_loss = float(np.mean(batch_losses))
        val_loss = _val_loss(model, x_val, y_val, config.margin)
        log.append(
            TrainLogRow(
                epoch=epoch,
                train_loss=train_loss,
                val_loss=val_loss,
                lr=lr,
                wall_seconds=time.perf_counter() - start_time,
            )
        )
        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
            best_params = model.copy()
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                stop_reason = "early_stopped"
                break

    return TrainResult(
        model=best_params,
        log=log,
        stop_reason=stop_reason,
        best_epoch=best_epoch,
        train_indices=train_idx.copy(),
        val_indices=val_idx.copy(),
    )


def format_log_rows(rows: list[TrainLogRow]) -> str:
    """CSV with %.6f fixed formatting for losses and lr."""
    lines = ["epoch,train_loss,val_loss,lr,wall_seconds"]
    for r in rows:
        lines.append(f"{r.epoch},{r.train_loss:.6f},{r.val_loss:.6f},{r.lr:.6f},{r.wall_seconds:.6f}")
    return "\n".join(lines) + "\n"


def write_train_log(path, rows: list[TrainLogRow]) -> None:
    Path(path).write_text(format_log_rows(rows), encoding="utf-8")


def export_embeddings(
    model: EmbeddingModel, features, labels=None, path=None, timestamp: int | None = None
) -> list[emb1.EmbeddingRecord]:
    """Run the model over a dataset and emit EMB1 records (id = ordinal)."""
    ts = int(time.time()) if timestamp is None else int(timestamp)
    feats = np.asarray(features, dtype=np.float64)
    if feats.size == 0:
        records: list[emb1.EmbeddingRecord] = []
    else:
        x = as_matrix(features, "features")
        lab = None if labels is None else check_labels(labels, x.shape[0])
        embeddings = forward(model, x)
        records = [
            emb1.EmbeddingRecord(
                id=i,
                vector=embeddings[i],
                label=None if lab is None else int(lab[i]),
                timestamp=ts,
            )
            for i in range(x.shape[0])
        ]
    if path is not None:
        emb1.write_emb1(path, records, dim=model.out_dim)
    return records
