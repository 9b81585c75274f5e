"""End-to-end orchestration: preprocessing, teacher fine-tuning, offline soft
labeling, two-stage student training, evaluation and the artifact bundle.

Stage toggles implement the ablation grid: use_unlabeled=false skips soft
labeling and stage 1; use_distill=false replaces the conditional loss with
plain cross-entropy in stage 2.
"""

import os
import warnings

import numpy as np

from .arch import resolve_arch
from .checkpoint import load_checkpoint, save_checkpoint
from .config import (config_fingerprint, parse_threshold, save_config,
                     validate_config)
from .data import load_manifest, to_float
from .distill import SoftLabeledDataset, generate_soft_labels, save_soft_manifest
from .kernels import ShapeError
from .metrics import (accuracy, auc, confusion, kfold_split, mcc,
                      metrics_flat, metrics_text)
from .model import build_model, predict_probs
from .preprocess import balance, flip_expand, prepare_images, resize
from .train import ConfigError, Hyper, save_history, train


def evaluate(model, dataset, batch=64):
    """Accuracy, MCC and AUC of a model on a labeled dataset.

    AUC uses the positive-class probability as score and is omitted (with a
    warning) when the split contains a single class.
    """
    labels = dataset.labels()
    if (labels < 0).any():
        raise ConfigError("evaluate needs hard labels on every image")
    probs = predict_probs(
        model, np.stack([to_float(im.pixels) for im in dataset]), chunk=batch)
    pred = probs.argmax(axis=1)
    cm = confusion(pred, labels)
    result = {"n": len(dataset), "accuracy": accuracy(cm), "mcc": mcc(cm)}
    if labels.min() == labels.max():
        warnings.warn("single-class split: AUC omitted")
        result["auc"] = None
    else:
        result["auc"] = auc(probs[:, 1], labels)
    return result


def _resolve(path, base_dir):
    return path if os.path.isabs(path) else os.path.join(base_dir, path)


def _resolve_arch_ref(ref, base_dir):
    # zoo references are names, anything else is a DSL file path
    return ref if ref.startswith("zoo:") else _resolve(ref, base_dir)


def prepare_target(cfg, base_dir="."):
    """Module-1 phase on the raw target set plus the fold split.

    Per-image preparation (crop/resize, contrast filter, equalization) runs on
    the full dataset; augmentation and balancing apply to the train split only
    (the split happens first, so no flipped copies leak into validation).
    """
    raw = load_manifest(_resolve(cfg.target_manifest, base_dir))
    prepared = prepare_images(
        raw, crop=cfg.crop_borders, size=cfg.image_size,
        threshold=parse_threshold(cfg.contrast_threshold),
        do_equalize=cfg.equalize)
    plan = kfold_split(len(prepared), cfg.folds, cfg.seed)
    train_ds = prepared.subset(plan.train_indices(cfg.val_fold))
    val_ds = prepared.subset(plan.fold_indices(cfg.val_fold))
    if cfg.augment:
        if cfg.equalize:
            train_ds = flip_expand(train_ds)  # phase A already equalized
        else:
            from .preprocess import augment_dataset
            train_ds = augment_dataset(train_ds)
    train_ds = balance(train_ds, cfg.seed)
    return prepared, plan, train_ds, val_ds


def load_unlabeled(cfg, base_dir="."):
    ds = load_manifest(_resolve(cfg.unlabeled_manifest, base_dir))
    size = cfg.image_size
    images = [im if im.pixels.shape[1:] == (size, size) else resize(im, size)
              for im in ds]
    return images


def init_teacher(cfg, base_dir="."):
    if cfg.teacher_checkpoint:
        teacher, _ = load_checkpoint(_resolve(cfg.teacher_checkpoint, base_dir))
        expect = (3, cfg.image_size, cfg.image_size)
        if tuple(teacher.spec.input_shape) != expect:
            raise ShapeError(
                f"teacher checkpoint expects input "
                f"{tuple(teacher.spec.input_shape)}, config wants {expect}")
        return teacher
    spec = resolve_arch(_resolve_arch_ref(cfg.teacher_arch, base_dir),
                        input_shape=(3, cfg.image_size, cfg.image_size),
                        num_classes=cfg.num_classes)
    return build_model(spec, seed=cfg.seed + 1000)


def run_pipeline(cfg, out_dir, base_dir="."):
    """Execute the full pipeline; returns a bundle summary dict."""
    validate_config(cfg, base_dir)
    os.makedirs(out_dir, exist_ok=True)
    fingerprint = config_fingerprint(cfg)
    save_config(os.path.join(out_dir, "config.ini"), cfg)
    history = []
    bundle = {"out_dir": out_dir, "checkpoints": [], "config": fingerprint}

    prepared, plan, train_ds, val_ds = prepare_target(cfg, base_dir)

    # teacher: initialize (optionally from a pre-trained checkpoint), fine-tune
    teacher = init_teacher(cfg, base_dir)
    _, h = train(teacher, train_ds, "hard",
                 Hyper(epochs=cfg.teacher_epochs, batch_size=cfg.batch_size,
                       lr=cfg.learning_rate, momentum=cfg.momentum,
                       seed=cfg.seed + 1, stage="teacher"),
                 val=val_ds)
    history += h
    tpath = os.path.join(out_dir, "teacher.ckpt")
    save_checkpoint(tpath, teacher,
                    {"stage": "teacher", "epoch": cfg.teacher_epochs,
                     "seed": cfg.seed + 1, "config": fingerprint})
    bundle["checkpoints"].append(tpath)

    # student stage 1: train on the teacher-labeled unlabeled set
    student_spec = resolve_arch(
        _resolve_arch_ref(cfg.student_arch, base_dir),
        input_shape=(3, cfg.image_size, cfg.image_size),
        num_classes=cfg.num_classes)
    student = build_model(student_spec, seed=cfg.seed)
    soft_path = None
    if cfg.use_unlabeled:
        unlabeled = load_unlabeled(cfg, base_dir)
        if not unlabeled:
            raise ConfigError("unlabeled set is empty")
        soft = generate_soft_labels(teacher, unlabeled,
                                    batch=max(cfg.batch_size, 64))
        soft_path = os.path.join(
            os.path.dirname(_resolve(cfg.unlabeled_manifest, base_dir)),
            f"soft-labels-{soft.teacher_id}.txt")
        save_soft_manifest(soft_path, soft)
        _, h = train(student, soft, "eq2",
                     Hyper(epochs=cfg.stage1_epochs, batch_size=cfg.batch_size,
                           lr=cfg.learning_rate, momentum=cfg.momentum,
                           seed=cfg.seed, stage="stage1"),
                     val=val_ds)
        history += h
        s1path = os.path.join(out_dir, "student-stage1.ckpt")
        save_checkpoint(s1path, student,
                        {"stage": "stage1", "epoch": cfg.stage1_epochs,
                         "seed": cfg.seed, "config": fingerprint})
        bundle["checkpoints"].append(s1path)
    bundle["soft_manifest"] = soft_path

    # student stage 2: fine-tune on the prepared target set
    if cfg.use_distill:
        soft_target = generate_soft_labels(teacher, list(train_ds),
                                           batch=max(cfg.batch_size, 64))
        _, h = train(student, soft_target, "eq3",
                     Hyper(epochs=cfg.stage2_epochs, batch_size=cfg.batch_size,
                           lr=cfg.learning_rate, momentum=cfg.momentum,
                           seed=cfg.seed, stage="stage2"),
                     val=val_ds)
    else:
        _, h = train(student, train_ds, "hard",
                     Hyper(epochs=cfg.stage2_epochs, batch_size=cfg.batch_size,
                           lr=cfg.learning_rate, momentum=cfg.momentum,
                           seed=cfg.seed, stage="stage2"),
                     val=val_ds)
    history += h

    if cfg.final_hard_finetune and cfg.final_epochs > 0:
        _, h = train(student, train_ds, "hard",
                     Hyper(epochs=cfg.final_epochs, batch_size=cfg.batch_size,
                           lr=cfg.learning_rate, momentum=cfg.momentum,
                           seed=cfg.seed, stage="final"),
                     val=val_ds)
        history += h

    fpath = os.path.join(out_dir, "student-final.ckpt")
    save_checkpoint(fpath, student,
                    {"stage": "final", "epoch": cfg.stage2_epochs,
                     "seed": cfg.seed, "config": fingerprint})
    bundle["checkpoints"].append(fpath)

    # per-fold evaluation of the final student
    fold_rows = []
    for fold in range(cfg.folds):
        subset = prepared.subset(plan.fold_indices(fold))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            vals = evaluate(student, subset)
        vals["held_out"] = 1.0 if fold == cfg.val_fold else 0.0
        fold_rows.append((fold, vals))
        with open(os.path.join(out_dir, f"metrics-fold{fold}.txt"), "w",
                  encoding="utf-8") as fh:
            fh.write(metrics_flat([(fold, vals)]))
    with open(os.path.join(out_dir, "metrics.txt"), "w", encoding="utf-8") as fh:
        fh.write(metrics_text(fold_rows))

    hpath = os.path.join(out_dir, "history.tsv")
    save_history(hpath, history)
    bundle["history"] = history
    bundle["fold_metrics"] = fold_rows
    return bundle
