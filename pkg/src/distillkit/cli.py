"""Command-line interface.

Subcommands: preprocess, train-teacher, distill-labels, train-student,
evaluate, complexity, synth, pipeline. Exit code 0 on success, 2 on a
diagnosed configuration/usage error.
"""

import argparse
import os
import sys

from .arch import ArchError, resolve_arch
from .train import ConfigError


def _add_synth(sub):
    p = sub.add_parser("synth", help="generate the synthetic datasets")
    p.add_argument("--out", required=True)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--per-class", type=int, default=400)
    p.add_argument("--unlabeled", type=int, default=2000)
    p.add_argument("--surrogate-per-class", type=int, default=600)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--blob-contrast", default="0.10:0.22",
                   help="LO:HI blob contrast range (0:0 makes classes "
                        "indistinguishable)")


def _cmd_synth(args):
    from .synth import SynthConfig, make_synthetic
    lo, _, hi = args.blob_contrast.partition(":")
    cfg = SynthConfig(size=args.size, per_class=args.per_class,
                      unlabeled_count=args.unlabeled,
                      surrogate_per_class=args.surrogate_per_class,
                      seed=args.seed, blob_contrast_lo=float(lo),
                      blob_contrast_hi=float(hi or lo))
    paths = make_synthetic(args.out, cfg)
    for name, path in paths.items():
        print(f"{name}: {path}")


def _add_preprocess(sub):
    p = sub.add_parser("preprocess", help="contrast filter / equalize / "
                                          "augment / balance a dataset")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", default="none",
                   help="none, mean, or a numeric grayscale-std threshold")
    p.add_argument("--no-equalize", action="store_true")
    p.add_argument("--augment", action="store_true",
                   help="emit the 4 flip variants per image")
    p.add_argument("--balance-seed", type=int, default=None,
                   help="undersample all classes to the minority count")
    p.add_argument("--crop", action="store_true",
                   help="crop dark borders before anything else")
    p.add_argument("--resize", type=int, default=None)


def _cmd_preprocess(args):
    from .config import parse_threshold
    from .data import load_manifest, save_dataset
    from .preprocess import augment_dataset, balance, flip_expand, prepare_images
    ds = load_manifest(args.manifest)
    equalizing = not args.no_equalize
    ds = prepare_images(ds, crop=args.crop, size=args.resize,
                        threshold=parse_threshold(args.threshold),
                        do_equalize=equalizing)
    if args.augment:
        ds = flip_expand(ds) if equalizing else augment_dataset(ds)
    if args.balance_seed is not None:
        ds = balance(ds, args.balance_seed)
    manifest = save_dataset(ds, args.out)
    print(f"wrote {len(ds)} images -> {manifest}")


def _add_complexity(sub):
    p = sub.add_parser("complexity", help="per-layer parameter / feature-map "
                                          "analysis (Table-style)")
    p.add_argument("arch", nargs="+",
                   help="DSL file path or zoo:<name>; several models "
                        "produce a ranked comparison")
    p.add_argument("--input", default=None, help="CxHxW, e.g. 3x300x300")
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--bytes-per-element", type=int, default=4)
    p.add_argument("--csv", default=None)


def _cmd_complexity(args):
    from .complexity import analyze, compare, report_text
    input_shape = None
    if args.input:
        input_shape = tuple(int(t) for t in args.input.lower().split("x"))
        if len(input_shape) != 3:
            raise ConfigError(f"--input must be CxHxW, got {args.input!r}")
    specs = [resolve_arch(ref, input_shape=input_shape,
                          num_classes=args.classes) for ref in args.arch]
    reports = [analyze(s) for s in specs]
    if len(reports) == 1:
        print(report_text(reports[0], args.bytes_per_element), end="")
        if args.csv:
            with open(args.csv, "w", encoding="utf-8") as fh:
                fh.write("layer,kind,params,feature_map,elements\n")
                for r in reports[0].layers:
                    shape = "x".join(str(d) for d in r.feature_map_shape)
                    fh.write(f"{r.layer_name},{r.kind},{r.param_count},"
                             f"{shape},{r.feature_map_elements}\n")
    else:
        _, text, csv = compare(reports)
        print(text, end="")
        if args.csv:
            with open(args.csv, "w", encoding="utf-8") as fh:
                fh.write(csv)


def _load_cfg(path):
    from .config import load_config
    return load_config(path), os.path.dirname(os.path.abspath(path))


def _add_train_teacher(sub):
    p = sub.add_parser("train-teacher",
                       help="preprocess the target set and fine-tune the teacher")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)


def _cmd_train_teacher(args):
    from .checkpoint import save_checkpoint
    from .config import config_fingerprint, validate_config
    from .pipeline import init_teacher, prepare_target
    from .train import Hyper, save_history, train
    cfg, base = _load_cfg(args.config)
    validate_config(cfg, base)
    os.makedirs(args.out, exist_ok=True)
    _, _, train_ds, val_ds = prepare_target(cfg, base)
    teacher = init_teacher(cfg, base)
    _, hist = train(teacher, train_ds, "hard",
                    Hyper(epochs=cfg.teacher_epochs, batch_size=cfg.batch_size,
                          lr=cfg.learning_rate, momentum=cfg.momentum,
                          seed=cfg.seed + 1, stage="teacher"), val=val_ds)
    path = os.path.join(args.out, "teacher.ckpt")
    save_checkpoint(path, teacher, {"stage": "teacher",
                                    "epoch": cfg.teacher_epochs,
                                    "seed": cfg.seed + 1,
                                    "config": config_fingerprint(cfg)})
    save_history(os.path.join(args.out, "teacher-history.tsv"), hist)
    last = hist[-1]
    acc = "" if last.val_accuracy is None else f", val acc {last.val_accuracy:.4f}"
    print(f"teacher checkpoint: {path}{acc}")


def _add_distill_labels(sub):
    p = sub.add_parser("distill-labels",
                       help="soft-label an unlabeled manifest with a teacher")
    p.add_argument("--teacher", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", default=None,
                   help="output path (default: soft-labels-<id>.txt next to "
                        "the manifest)")
    p.add_argument("--batch", type=int, default=64)


def _cmd_distill_labels(args):
    from .checkpoint import load_checkpoint
    from .data import load_manifest
    from .distill import generate_soft_labels, save_soft_manifest
    from .preprocess import resize
    teacher, _ = load_checkpoint(args.teacher)
    size = teacher.spec.input_shape[1]
    images = [im if im.pixels.shape[1:] == (size, size) else resize(im, size)
              for im in load_manifest(args.manifest)]
    soft = generate_soft_labels(teacher, images, batch=args.batch)
    out = args.out or os.path.join(os.path.dirname(os.path.abspath(args.manifest)),
                                   f"soft-labels-{soft.teacher_id}.txt")
    save_soft_manifest(out, soft)
    print(f"labeled {len(soft)} images -> {out}")


def _add_train_student(sub):
    p = sub.add_parser("train-student",
                       help="two-stage student training from an existing teacher")
    p.add_argument("--config", required=True)
    p.add_argument("--teacher", required=True)
    p.add_argument("--out", required=True)


def _cmd_train_student(args):
    cfg, base = _load_cfg(args.config)
    cfg.teacher_checkpoint = os.path.abspath(args.teacher)
    cfg.teacher_epochs = 0
    from .pipeline import run_pipeline
    bundle = run_pipeline(cfg, args.out, base)
    print("\n".join(bundle["checkpoints"]))


def _add_evaluate(sub):
    p = sub.add_parser("evaluate", help="metrics of a checkpoint on a manifest")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--percent", action="store_true",
                   help="display metrics as percentages")
    p.add_argument("--equalize", action="store_true",
                   help="equalize images before evaluation")


def _cmd_evaluate(args):
    from .checkpoint import load_checkpoint
    from .data import ImageDataset, load_manifest
    from .metrics import metrics_text
    from .pipeline import evaluate
    from .preprocess import equalize, resize
    model, _ = load_checkpoint(args.checkpoint)
    size = model.spec.input_shape[1]
    ds = load_manifest(args.manifest)
    images = [im if im.pixels.shape[1:] == (size, size) else resize(im, size)
              for im in ds]
    if args.equalize:
        images = [equalize(im) for im in images]
    for im, src in zip(images, ds):
        im.label = src.label
    vals = evaluate(model, ImageDataset(images))
    print(metrics_text([("all", vals)], percent=args.percent), end="")


def _add_pipeline(sub):
    p = sub.add_parser("pipeline", help="run the full pipeline")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)


def _cmd_pipeline(args):
    from .pipeline import run_pipeline
    cfg, base = _load_cfg(args.config)
    bundle = run_pipeline(cfg, args.out, base)
    print(f"bundle: {bundle['out_dir']}")
    for c in bundle["checkpoints"]:
        print(f"  {c}")
    for fold, vals in bundle["fold_metrics"]:
        cells = " ".join(f"{k}={v:.4f}" for k, v in sorted(vals.items())
                         if v is not None and k != "n")
        print(f"  fold {fold}: {cells}")


def main(argv=None):
    ap = argparse.ArgumentParser(prog="distillkit", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    _add_preprocess(sub)
    _add_train_teacher(sub)
    _add_distill_labels(sub)
    _add_train_student(sub)
    _add_evaluate(sub)
    _add_complexity(sub)
    _add_synth(sub)
    _add_pipeline(sub)
    args = ap.parse_args(argv)
    handlers = {
        "preprocess": _cmd_preprocess,
        "train-teacher": _cmd_train_teacher,
        "distill-labels": _cmd_distill_labels,
        "train-student": _cmd_train_student,
        "evaluate": _cmd_evaluate,
        "complexity": _cmd_complexity,
        "synth": _cmd_synth,
        "pipeline": _cmd_pipeline,
    }
    try:
        handlers[args.command](args)
    except (ConfigError, ArchError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
