"""Offline soft labeling and the two distillation losses.

The unlabeled loss is the batch-mean cross-entropy of student probability
rows under fixed teacher rows. The conditional loss mixes per sample: soft
cross-entropy where the teacher's argmax agrees with the hard label, plain
negative log-likelihood of the hard label where it does not.
"""

import os
import warnings
from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .autograd import PROB_FLOOR, Tensor, _accum, _node
from .data import Image, batch_pixels, read_ppm
from .kernels import ShapeError
from .model import fingerprint, predict_probs


@dataclass
class SoftLabeledDataset:
    entries: list            # (Image, probability vector over classes)
    teacher_id: str

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def generate_soft_labels(teacher, unlabeled, batch=64):
    """Label every image with the teacher's output distribution, once, offline.

    The teacher is never modified; entries keep the input order.
    """
    images = list(unlabeled)
    teacher_id = fingerprint(teacher)
    if not images:
        warnings.warn("generate_soft_labels called with an empty image set")
        return SoftLabeledDataset([], teacher_id)
    expect = tuple(teacher.spec.input_shape)
    for im in images:
        if im.pixels.shape != expect:
            raise ShapeError(
                f"teacher expects {expect} images, got {im.pixels.shape}")
    entries = []
    for lo in range(0, len(images), batch):
        chunk = images[lo:lo + batch]
        probs = predict_probs(teacher, batch_pixels(chunk))
        probs = np.maximum(probs, PROB_FLOOR)
        entries.extend((im, p) for im, p in zip(chunk, probs))
    return SoftLabeledDataset(entries, teacher_id)


def _teacher_array(teacher_probs):
    t = teacher_probs.data if isinstance(teacher_probs, Tensor) else teacher_probs
    return np.asarray(t)


def unlabeled_kd_loss(student_probs, teacher_probs):
    """Batch-mean soft cross-entropy -1/M sum_i sum_j t_ij log s_ij."""
    s = ag.as_tensor(student_probs)
    t = _teacher_array(teacher_probs)
    single = s.data.ndim == 1
    sd = s.data[None] if single else s.data
    td = t[None] if t.ndim == 1 else t
    if sd.shape != td.shape:
        raise ShapeError(
            f"student {sd.shape} and teacher {td.shape} shapes differ")
    B = sd.shape[0]
    sc = np.clip(sd, PROB_FLOOR, 1.0)
    out = -(td * np.log(sc)).sum(axis=1).mean()

    def bwd(g):
        gp = np.where(sd >= PROB_FLOOR, -td / sc, 0.0) * (g / B)
        _accum(s, gp[0] if single else gp)

    return _node(np.asarray(out), "unlabeled_kd_loss", (s,), bwd)


def conditional_kd_loss(student_probs, teacher_probs, hard_labels):
    """Soft cross-entropy where the teacher is right, NLL where it is wrong.

    Teacher argmax ties break toward the lowest class index.
    """
    s = ag.as_tensor(student_probs)
    t = _teacher_array(teacher_probs)
    y = np.asarray(hard_labels).reshape(-1)
    single = s.data.ndim == 1
    sd = s.data[None] if single else s.data
    td = t[None] if t.ndim == 1 else t
    if sd.shape != td.shape:
        raise ShapeError(
            f"student {sd.shape} and teacher {td.shape} shapes differ")
    B, C = sd.shape
    if y.shape[0] != B:
        raise ShapeError(f"{y.shape[0]} labels for a batch of {B}")
    if y.size and (y.min() < 0 or y.max() >= C):
        raise ShapeError(f"label out of range for {C} classes")

    correct = td.argmax(axis=1) == y
    sc = np.clip(sd, PROB_FLOOR, 1.0)
    rows = np.arange(B)
    soft_terms = (td * np.log(sc)).sum(axis=1)
    hard_terms = np.log(sc[rows, y])
    out = -np.where(correct, soft_terms, hard_terms).mean()

    def bwd(g):
        inside = sd >= PROB_FLOOR
        gp = np.where(correct[:, None], np.where(inside, -td / sc, 0.0), 0.0)
        hard_g = np.where(inside[rows, y], -1.0 / sc[rows, y], 0.0)
        gp[rows, y] = np.where(correct, gp[rows, y], hard_g)
        gp *= g / B
        _accum(s, gp[0] if single else gp)

    return _node(np.asarray(out), "conditional_kd_loss", (s,), bwd)


# ---------------------------------------------------------------------------
# persistence: image path + one probability column per class
# ---------------------------------------------------------------------------

def save_soft_manifest(path, dataset):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# teacher {dataset.teacher_id}\n")
        for im, probs in dataset.entries:
            if im.path is None:
                raise ValueError("images must have paths to persist soft labels")
            cols = " ".join(f"{p:.9g}" for p in probs)
            fh.write(f"{im.path} {cols}\n")


def load_soft_manifest(path):
    base = os.path.dirname(os.path.abspath(path))
    teacher_id = ""
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] == "teacher":
                    teacher_id = parts[1]
                continue
            parts = line.split()
            rel, probs = parts[0], np.array([float(p) for p in parts[1:]])
            px = read_ppm(os.path.join(base, rel))
            entries.append((Image(px, None, rel), probs))
    return SoftLabeledDataset(entries, teacher_id)
