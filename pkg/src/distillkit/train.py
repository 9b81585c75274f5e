"""Mini-batch gradient-descent training with momentum.

Three loss modes:
    hard - cross-entropy against hard labels (ImageDataset)
    eq2  - soft cross-entropy against stored teacher rows (SoftLabeledDataset)
    eq3  - conditional distillation (SoftLabeledDataset whose images also
           carry hard labels)
"""

from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .data import to_float
from .distill import SoftLabeledDataset, conditional_kd_loss, unlabeled_kd_loss
from .metrics import accuracy, confusion
from .model import forward, predict_probs


class ConfigError(ValueError):
    """Raised when a dataset/loss/configuration combination is invalid."""


@dataclass
class Hyper:
    epochs: int
    batch_size: int = 32
    lr: float = 0.02
    momentum: float = 0.9
    seed: int = 0
    eval_every: int = 1   # 0 disables per-epoch validation
    stage: str = "train"


@dataclass
class EpochRecord:
    stage: str
    epoch: int
    train_loss: float
    val_accuracy: float = None


def _stack_training_arrays(dataset, loss_mode):
    if loss_mode in ("eq2", "eq3"):
        if not isinstance(dataset, SoftLabeledDataset):
            raise ConfigError(f"loss mode {loss_mode!r} needs soft labels")
        images = [im for im, _ in dataset.entries]
        teacher = np.stack([p for _, p in dataset.entries]).astype(np.float32)
    else:
        if loss_mode != "hard":
            raise ConfigError(f"unknown loss mode {loss_mode!r}")
        if isinstance(dataset, SoftLabeledDataset):
            raise ConfigError("hard loss mode takes a plain labeled dataset")
        images = list(dataset)
        teacher = None
    pixels = np.stack([im.pixels for im in images])  # uint8, converted per batch
    labels = None
    if loss_mode in ("hard", "eq3"):
        if any(im.label is None for im in images):
            raise ConfigError(f"loss mode {loss_mode!r} needs hard labels")
        labels = np.array([im.label for im in images], dtype=np.int64)
    return pixels, labels, teacher


def validation_accuracy(model, val, batch=64):
    probs = predict_probs(model, np.stack([to_float(im.pixels) for im in val]),
                          chunk=batch)
    pred = probs.argmax(axis=1)
    return accuracy(confusion(pred, val.labels()))


def train(model, dataset, loss_mode, hyper, val=None):
    """Train in place; returns (model, history). Deterministic given the seed."""
    pixels, labels, teacher = _stack_training_arrays(dataset, loss_mode)
    n = pixels.shape[0]
    if n == 0:
        raise ConfigError("cannot train on an empty dataset")
    rng = np.random.default_rng(hyper.seed)
    velocity = {k: np.zeros_like(t.data) for k, t in model.params.items()}
    history = []
    for epoch in range(1, hyper.epochs + 1):
        perm = rng.permutation(n)
        total = 0.0
        for lo in range(0, n, hyper.batch_size):
            idx = perm[lo:lo + hyper.batch_size]
            xb = to_float(pixels[idx])
            probs = forward(model, xb)
            if loss_mode == "hard":
                loss = ag.nll_loss(probs, labels[idx])
            elif loss_mode == "eq2":
                loss = unlabeled_kd_loss(probs, teacher[idx])
            else:
                loss = conditional_kd_loss(probs, teacher[idx], labels[idx])
            grads = ag.backprop(loss, model.params)
            for k, t in model.params.items():
                v = velocity[k]
                v *= hyper.momentum
                v += grads[k]
                t.data -= hyper.lr * v
            total += loss.item() * len(idx)
        val_acc = None
        if val is not None and hyper.eval_every > 0 and (
                epoch % hyper.eval_every == 0 or epoch == hyper.epochs):
            val_acc = validation_accuracy(model, val)
        history.append(EpochRecord(hyper.stage, epoch, total / n, val_acc))
    return model, history


def history_rows(history):
    """TrainHistory rows as (stage, epoch, train_loss, val_accuracy) tuples."""
    return [(r.stage, r.epoch, r.train_loss, r.val_accuracy) for r in history]


def save_history(path, history):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("stage\tepoch\ttrain_loss\tval_accuracy\n")
        for r in history:
            acc = "" if r.val_accuracy is None else repr(r.val_accuracy)
            fh.write(f"{r.stage}\t{r.epoch}\t{r.train_loss!r}\t{acc}\n")


def load_history(path):
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            stage, epoch, loss, acc = line.rstrip("\n").split("\t")
            rows.append(EpochRecord(stage, int(epoch), float(loss),
                                    float(acc) if acc else None))
    return rows
