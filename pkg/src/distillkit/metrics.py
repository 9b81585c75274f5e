"""Binary-classification metrics and cross-validation fold planning."""

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self):
        return self.tp + self.tn + self.fp + self.fn


@dataclass
class FoldPlan:
    k: int
    assignments: np.ndarray  # fold index per sample
    seed: int

    def fold_indices(self, fold):
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold):
        return np.flatnonzero(self.assignments != fold)


def confusion(predicted, actual):
    """Tally a binary confusion matrix; class 1 is the positive class."""
    p = np.asarray(predicted)
    a = np.asarray(actual)
    if p.shape != a.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {a.shape}")
    both = np.concatenate([p, a])
    if both.size and not np.isin(both, (0, 1)).all():
        raise ValueError("confusion() expects binary labels 0/1")
    return ConfusionMatrix(
        tp=int(((p == 1) & (a == 1)).sum()),
        tn=int(((p == 0) & (a == 0)).sum()),
        fp=int(((p == 1) & (a == 0)).sum()),
        fn=int(((p == 0) & (a == 1)).sum()),
    )


def accuracy(cm):
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    return (cm.tp + cm.tn) / cm.total


def mcc(cm):
    """Matthews correlation; 0 when any marginal is empty."""
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    denom = ((cm.tp + cm.fp) * (cm.tp + cm.fn)
             * (cm.tn + cm.fp) * (cm.tn + cm.fn))
    if denom == 0:
        return 0.0
    return (cm.tp * cm.tn - cm.fp * cm.fn) / math.sqrt(denom)


def auc(scores, actual):
    """ROC AUC as the Mann-Whitney rank statistic (ties count 0.5)."""
    s = np.asarray(scores, dtype=np.float64)
    a = np.asarray(actual)
    if s.shape != a.shape:
        raise ValueError(f"length mismatch: {s.shape} vs {a.shape}")
    npos = int((a == 1).sum())
    nneg = int((a == 0).sum())
    if npos == 0 or nneg == 0:
        raise ValueError("auc needs at least one positive and one negative")
    order = np.argsort(s, kind="mergesort")
    ranks = np.empty(len(s), dtype=np.float64)
    sorted_s = s[order]
    i = 0
    while i < len(s):
        j = i
        while j + 1 < len(s) and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0  # midrank, 1-based
        i = j + 1
    pos_rank_sum = ranks[a == 1].sum()
    return (pos_rank_sum - npos * (npos + 1) / 2.0) / (npos * nneg)


def kfold_split(n, k=5, seed=0):
    """Seeded shuffle then round-robin fold assignment."""
    if n < k:
        raise ValueError(f"cannot split {n} samples into {k} folds")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    assignments = np.empty(n, dtype=np.int64)
    assignments[perm] = np.arange(n) % k
    return FoldPlan(k=k, assignments=assignments, seed=seed)


# ---------------------------------------------------------------------------
# report formatting
# ---------------------------------------------------------------------------

def metrics_text(rows, percent=False):
    """rows: list of (fold, {metric: value}) -> aligned table."""
    names = sorted({m for _, vals in rows for m in vals})
    scale = 100.0 if percent else 1.0
    lines = ["fold  " + "".join(f"{n:>12}" for n in names)]
    for fold, vals in rows:
        cells = []
        for n in names:
            v = vals.get(n)
            cells.append(f"{'-':>12}" if v is None else f"{scale * v:>12.4f}")
        lines.append(f"{fold:<6}" + "".join(cells))
    return "\n".join(lines) + "\n"


def metrics_flat(rows):
    """Flat `metric fold value` key-value lines."""
    out = []
    for fold, vals in rows:
        for name in sorted(vals):
            v = vals[name]
            if v is not None:
                out.append(f"{name} {fold} {v:.9g}")
    return "\n".join(out) + "\n"
