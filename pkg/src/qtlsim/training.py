"""Seeded minibatch training with AUROC-based model selection."""
from __future__ import annotations

import math

import numpy as np

from .data import batches
from .hybrid import (
    AdamState,
    HybridModel,
    adam_step,
    cross_entropy,
    grads_to_vector,
    model_backward,
    model_forward,
    model_with_vector,
    params_to_vector,
)
from .metrics import (
    MetricRecord,
    accuracy,
    auroc_binary,
    auroc_macro_ovr,
    confusion_matrix,
)
from .seeding import derive_seed


class TrainingAborted(RuntimeError):
    """Training hit a non-finite loss or gradient."""


def evaluate(model: HybridModel, samples, split: str = "test", epoch: int = 0) -> MetricRecord:
    """Loss, accuracy, AUROC and confusion matrix over one split."""
    samples = list(samples)
    if not samples:
        raise ValueError(f"cannot evaluate on an empty {split} split")
    probs = np.stack([model_forward(model, s.features) for s in samples])
    labels = np.array([s.label for s in samples], dtype=np.int64)
    loss = float(np.mean([cross_entropy(probs[i], labels[i]) for i in range(len(samples))]))
    preds = probs.argmax(axis=1)
    if model.n_classes == 2:
        auroc = auroc_binary(probs[:, 1], (labels == 1).astype(int))
    else:
        auroc = auroc_macro_ovr(probs, labels)
    return MetricRecord(
        split=split,
        epoch=epoch,
        loss=loss,
        accuracy=accuracy(preds, labels),
        auroc=auroc,
        confusion=confusion_matrix(preds, labels, model.n_classes),
    )


def _batch_gradient(model: HybridModel, batch) -> np.ndarray:
    """Mean packed gradient over a batch, accumulated in a fixed order."""
    total = None
    for sample in batch:
        g = grads_to_vector(model, model_backward(model, sample.features, sample.label))
        total = g if total is None else total + g
    return total / len(batch)


def train(model: HybridModel, train_set, val_set, *, epochs: int,
          batch_size: int = 8, lr: float = 1e-4, weight_decay: float = 0.01,
          seed: int = 0, optimizer: str = "adam",
          ) -> tuple[HybridModel, list[MetricRecord]]:
    """Train and return (best model by validation AUROC, metric history).

    Per epoch: seeded shuffle, minibatch steps with batch-averaged
    gradients, then train and val metrics. Ties in validation AUROC keep
    the earlier epoch. ``optimizer="gd"`` swaps Adam for plain gradient
    descent (the full-batch sanity mode when batch_size covers the set).

    Fully deterministic for a given seed; raises TrainingAborted on a
    non-finite loss.
    """
    train_set = list(train_set)
    val_set = list(val_set)
    if not train_set or not val_set:
        raise ValueError("train and val splits must be non-empty")
    if optimizer not in ("adam", "gd"):
        raise ValueError(f"unknown optimizer {optimizer!r}")

    params = params_to_vector(model)
    adam = AdamState.init(params.shape[0], lr=lr, weight_decay=weight_decay)
    history: list[MetricRecord] = []
    best_auroc = -math.inf
    best_model = model

    for epoch in range(1, epochs + 1):
        epoch_seed = derive_seed(seed, "shuffle", epoch)
        for batch in batches(train_set, batch_size, epoch_seed):
            grads = _batch_gradient(model, batch)
            if optimizer == "adam":
                params, adam = adam_step(adam, params, grads)
            else:
                params = params - lr * (grads + weight_decay * params)
            model = model_with_vector(model, params)

        train_rec = evaluate(model, train_set, "train", epoch)
        val_rec = evaluate(model, val_set, "val", epoch)
        if not (math.isfinite(train_rec.loss) and math.isfinite(val_rec.loss)):
            raise TrainingAborted(
                f"non-finite loss at epoch {epoch} "
                f"(train {train_rec.loss!r}, val {val_rec.loss!r})"
            )
        history.append(train_rec)
        history.append(val_rec)
        if val_rec.auroc > best_auroc:
            best_auroc = val_rec.auroc
            best_model = model

    return best_model, history


def best_val_epoch(history) -> int:
    """Epoch whose validation AUROC was selected (ties -> earliest)."""
    best = None
    for rec in history:
        if rec.split != "val":
            continue
        if best is None or rec.auroc > best.auroc:
            best = rec
    if best is None:
        raise ValueError("history contains no validation records")
    return best.epoch
