"""The four-regime training grid: base / +kd / +ul / +ul+kd.

One synthetic dataset and one pre-trained + fine-tuned teacher are shared
across the whole grid; student seeds vary initialization and batch order.
The two unlabeled regimes share their stage-1 student per seed (identical
seed, data and schedule make the runs coincide), so stage 1 is trained once
and the branches fine-tune from a copy.

Run directly:  python -m distillkit.ablation --workdir runs/grid
"""

import os
import time
from dataclasses import dataclass

import numpy as np

from .arch import simple_a, vgg_scaled
from .data import ImageDataset, load_manifest
from .distill import generate_soft_labels
from .metrics import kfold_split
from .model import build_model
from .preprocess import balance, equalize
from .synth import SynthConfig, make_synthetic
from .train import Hyper, train, validation_accuracy

REGIMES = ("base", "kd", "ul", "ul_kd")


@dataclass
class GridSettings:
    image_size: int = 64
    per_class: int = 400
    unlabeled_count: int = 2000
    surrogate_per_class: int = 600
    data_seed: int = 0
    teacher_seed: int = 1000
    seeds: tuple = (0, 1, 2, 3, 4)
    folds: int = 5
    val_fold: int = 0
    batch_size: int = 32
    lr: float = 0.02
    momentum: float = 0.9
    teacher_pretrain_epochs: int = 4
    teacher_finetune_epochs: int = 4
    base_epochs: int = 5
    stage1_epochs: int = 2
    stage2_epochs: int = 3


def _load_or_make_data(workdir, st):
    data_dir = os.path.join(workdir, "data")
    manifest = os.path.join(data_dir, "target", "manifest.txt")
    if not os.path.exists(manifest):
        make_synthetic(data_dir, SynthConfig(
            size=st.image_size, per_class=st.per_class,
            unlabeled_count=st.unlabeled_count,
            surrogate_per_class=st.surrogate_per_class, seed=st.data_seed))
    target = load_manifest(manifest)
    unlabeled = load_manifest(os.path.join(data_dir, "unlabeled", "manifest.txt"))
    surrogate = load_manifest(os.path.join(data_dir, "surrogate", "manifest.txt"))
    return target, unlabeled, surrogate


def _hyper(st, epochs, seed, stage):
    return Hyper(epochs=epochs, batch_size=st.batch_size, lr=st.lr,
                 momentum=st.momentum, seed=seed, eval_every=0, stage=stage)


def prepare_grid(workdir, st, log=print):
    """Data, split and teacher shared by every regime and seed."""
    target, unlabeled, surrogate = _load_or_make_data(workdir, st)
    target = ImageDataset([equalize(im) for im in target])
    plan = kfold_split(len(target), st.folds, st.data_seed)
    train_ds = balance(target.subset(plan.train_indices(st.val_fold)),
                       st.data_seed)
    val_ds = target.subset(plan.fold_indices(st.val_fold))

    teacher = build_model(
        vgg_scaled(4, input_shape=(3, st.image_size, st.image_size)),
        seed=st.teacher_seed)
    t0 = time.perf_counter()
    train(teacher, surrogate, "hard",
          _hyper(st, st.teacher_pretrain_epochs, st.teacher_seed, "teacher-pretrain"))
    train(teacher, train_ds, "hard",
          _hyper(st, st.teacher_finetune_epochs, st.teacher_seed + 1,
                 "teacher-finetune"))
    teacher_acc = validation_accuracy(teacher, val_ds)
    log(f"[grid] teacher ready in {time.perf_counter() - t0:.0f}s, "
        f"val acc {teacher_acc:.3f}")

    soft_unlabeled = generate_soft_labels(teacher, list(unlabeled))
    soft_target = generate_soft_labels(teacher, list(train_ds))
    return {"train": train_ds, "val": val_ds, "teacher": teacher,
            "teacher_acc": teacher_acc, "soft_unlabeled": soft_unlabeled,
            "soft_target": soft_target}


def run_seed(st, shared, seed):
    """Train all four regimes for one student seed; returns regime -> val acc."""
    spec = simple_a(input_shape=(3, st.image_size, st.image_size))
    train_ds, val_ds = shared["train"], shared["val"]
    acc = {}

    student = build_model(spec, seed=seed)
    train(student, train_ds, "hard", _hyper(st, st.base_epochs, seed, "base"))
    acc["base"] = validation_accuracy(student, val_ds)

    student = build_model(spec, seed=seed)
    train(student, shared["soft_target"], "eq3",
          _hyper(st, st.base_epochs, seed, "kd"))
    acc["kd"] = validation_accuracy(student, val_ds)

    stage1 = build_model(spec, seed=seed)
    train(stage1, shared["soft_unlabeled"], "eq2",
          _hyper(st, st.stage1_epochs, seed, "stage1"))

    student = stage1.copy()
    train(student, train_ds, "hard", _hyper(st, st.stage2_epochs, seed, "ul"))
    acc["ul"] = validation_accuracy(student, val_ds)

    student = stage1.copy()
    train(student, shared["soft_target"], "eq3",
          _hyper(st, st.stage2_epochs, seed, "ul_kd"))
    acc["ul_kd"] = validation_accuracy(student, val_ds)
    return acc


def run_grid(workdir, st=None, log=print):
    """Full grid; returns {'per_seed', 'means', 'teacher_acc', 'elapsed'}."""
    st = st or GridSettings()
    os.makedirs(workdir, exist_ok=True)
    t0 = time.perf_counter()
    shared = prepare_grid(workdir, st, log=log)
    per_seed = {}
    for seed in st.seeds:
        ts = time.perf_counter()
        per_seed[seed] = run_seed(st, shared, seed)
        row = " ".join(f"{r}={per_seed[seed][r]:.3f}" for r in REGIMES)
        log(f"[grid] seed {seed}: {row} ({time.perf_counter() - ts:.0f}s)")
    means = {r: float(np.mean([per_seed[s][r] for s in st.seeds]))
             for r in REGIMES}
    elapsed = time.perf_counter() - t0
    log("[grid] means: " + " ".join(f"{r}={means[r]:.3f}" for r in REGIMES)
        + f"  [{elapsed:.0f}s]")

    csv = ["seed," + ",".join(REGIMES)]
    for seed in st.seeds:
        csv.append(f"{seed}," + ",".join(f"{per_seed[seed][r]:.6f}"
                                         for r in REGIMES))
    csv.append("mean," + ",".join(f"{means[r]:.6f}" for r in REGIMES))
    with open(os.path.join(workdir, "grid.csv"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(csv) + "\n")
    return {"per_seed": per_seed, "means": means,
            "teacher_acc": shared["teacher_acc"], "elapsed": elapsed}


if __name__ == "__main__":
    import argparse
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--workdir", default="runs/grid")
    args = ap.parse_args()
    run_grid(args.workdir)
