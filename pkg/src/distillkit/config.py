"""Experiment configuration: a sectioned key-value file.

See the "Configuration reference" section of the README for every key. The
file is standard INI syntax read by configparser:

    [data]
    target_manifest = data/target/manifest.txt
    unlabeled_manifest = data/unlabeled/manifest.txt
    image_size = 64
    ...
"""

import configparser
import hashlib
import os
from dataclasses import dataclass, asdict

from .train import ConfigError


@dataclass
class ExperimentConfig:
    # [data]
    target_manifest: str = ""
    unlabeled_manifest: str = ""
    image_size: int = 64
    num_classes: int = 2
    contrast_threshold: str = "none"   # none | mean | <float>
    equalize: bool = True
    augment: bool = False
    crop_borders: bool = False
    folds: int = 5
    val_fold: int = 0
    # [teacher]
    teacher_arch: str = "zoo:vgg/4"
    teacher_checkpoint: str = ""
    teacher_epochs: int = 6
    # [student]
    student_arch: str = "zoo:simple-a"
    # [train]
    batch_size: int = 32
    learning_rate: float = 0.02
    momentum: float = 0.9
    seed: int = 0
    stage1_epochs: int = 2
    stage2_epochs: int = 4
    final_epochs: int = 2
    # [stages]
    use_unlabeled: bool = True
    use_distill: bool = True
    final_hard_finetune: bool = False


_SCHEMA = {
    "data": [("target_manifest", str), ("unlabeled_manifest", str),
             ("image_size", int), ("num_classes", int),
             ("contrast_threshold", str), ("equalize", bool),
             ("augment", bool), ("crop_borders", bool),
             ("folds", int), ("val_fold", int)],
    "teacher": [("teacher_arch", str, "arch"),
                ("teacher_checkpoint", str, "checkpoint"),
                ("teacher_epochs", int, "epochs")],
    "student": [("student_arch", str, "arch")],
    "train": [("batch_size", int), ("learning_rate", float),
              ("momentum", float), ("seed", int), ("stage1_epochs", int),
              ("stage2_epochs", int), ("final_epochs", int)],
    "stages": [("use_unlabeled", bool), ("use_distill", bool),
               ("final_hard_finetune", bool)],
}


def _entries():
    for section, fields in _SCHEMA.items():
        for f in fields:
            attr, typ = f[0], f[1]
            key = f[2] if len(f) > 2 else attr
            yield section, key, attr, typ


def load_config(path):
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser()
    cp.read(path)
    cfg = ExperimentConfig()
    known = {(s, k) for s, k, _, _ in _entries()}
    for section in cp.sections():
        for key in cp[section]:
            if (section, key) not in known:
                raise ConfigError(f"{path}: unknown key [{section}] {key}")
    for section, key, attr, typ in _entries():
        if not cp.has_option(section, key):
            continue
        if typ is bool:
            value = cp.getboolean(section, key)
        elif typ is int:
            value = cp.getint(section, key)
        elif typ is float:
            value = cp.getfloat(section, key)
        else:
            value = cp.get(section, key)
        setattr(cfg, attr, value)
    return cfg


def save_config(path, cfg):
    cp = configparser.ConfigParser()
    for section, key, attr, _ in _entries():
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, key, str(getattr(cfg, attr)))
    with open(path, "w", encoding="utf-8") as fh:
        cp.write(fh)


def parse_threshold(value):
    v = value.strip().lower()
    if v in ("none", ""):
        return None
    if v == "mean":
        return "mean"
    try:
        return float(v)
    except ValueError:
        raise ConfigError(
            f"contrast_threshold must be none, mean or a number, got {value!r}")


def _manifest_nonempty(path):
    with open(path, "r", encoding="utf-8") as fh:
        return any(line.strip() and not line.startswith("#") for line in fh)


def validate_config(cfg, base_dir="."):
    """Check referenced files exist and stage toggles are satisfiable."""
    def resolve(p):
        return p if os.path.isabs(p) else os.path.join(base_dir, p)

    if not cfg.target_manifest:
        raise ConfigError("target_manifest is required")
    tm = resolve(cfg.target_manifest)
    if not os.path.exists(tm):
        raise ConfigError(f"target manifest not found: {tm}")
    if cfg.use_unlabeled:
        if not cfg.unlabeled_manifest:
            raise ConfigError("use_unlabeled requires unlabeled_manifest")
        um = resolve(cfg.unlabeled_manifest)
        if not os.path.exists(um):
            raise ConfigError(f"unlabeled manifest not found: {um}")
        if not _manifest_nonempty(um):
            raise ConfigError(f"unlabeled manifest is empty: {um}")
    if cfg.teacher_checkpoint:
        tc = resolve(cfg.teacher_checkpoint)
        if not os.path.exists(tc):
            raise ConfigError(f"teacher checkpoint not found: {tc}")
    if not (0 <= cfg.val_fold < cfg.folds):
        raise ConfigError(f"val_fold {cfg.val_fold} outside 0..{cfg.folds - 1}")
    parse_threshold(cfg.contrast_threshold)
    return cfg


def config_fingerprint(cfg):
    text = "\n".join(f"{k}={v}" for k, v in sorted(asdict(cfg).items()))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]
