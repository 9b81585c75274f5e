import os

import numpy as np
import pytest

from distillkit.cli import main

STUDENT_DSL = """
input 3 16 16
classes 2
conv 4
relu
pool
pool
flatten
dense 2
softmax
"""

TEACHER_DSL = """
input 3 16 16
classes 2
conv 6
relu
pool
conv 8
relu
pool
flatten
dense 12
relu
dense 2
softmax
"""

CONFIG = """
[data]
target_manifest = data/target/manifest.txt
unlabeled_manifest = data/unlabeled/manifest.txt
image_size = 16
contrast_threshold = none

[teacher]
arch = teacher.dsl
epochs = 1

[student]
arch = student.dsl

[train]
batch_size = 8
learning_rate = 0.05
seed = 0
stage1_epochs = 1
stage2_epochs = 1

[stages]
use_unlabeled = true
use_distill = true
"""


@pytest.fixture(scope="module")
def root(tmp_path_factory):
    r = tmp_path_factory.mktemp("cli")
    rc = main(["synth", "--out", str(r / "data"), "--size", "16",
               "--per-class", "12", "--unlabeled", "16",
               "--surrogate-per-class", "6", "--seed", "0"])
    assert rc == 0
    (r / "teacher.dsl").write_text(TEACHER_DSL)
    (r / "student.dsl").write_text(STUDENT_DSL)
    (r / "exp.ini").write_text(CONFIG)
    return r


def test_synth_outputs(root):
    assert (root / "data" / "target" / "manifest.txt").exists()
    assert (root / "data" / "unlabeled" / "manifest.txt").exists()
    assert (root / "data" / "surrogate" / "manifest.txt").exists()


def test_complexity_zoo(root, capsys):
    rc = main(["complexity", "zoo:simple-a", "--input", "3x300x300",
               "--csv", str(root / "c.csv")])
    assert rc == 0
    out = capsys.readouterr().out
    assert "12,800,000" in out
    assert (root / "c.csv").read_text().count("\n") > 10


def test_complexity_compare(root, capsys):
    rc = main(["complexity", "zoo:vgg", "zoo:vgg/2", "zoo:vgg/4",
               "zoo:simple-a", "--input", "3x300x300"])
    assert rc == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[1].split()[0] == "vgg"  # largest first


def test_complexity_dsl_file(root, capsys):
    rc = main(["complexity", str(root / "student.dsl")])
    assert rc == 0
    assert "dense" in capsys.readouterr().out


def test_preprocess_command(root, capsys):
    rc = main(["preprocess", "--manifest",
               str(root / "data" / "target" / "manifest.txt"),
               "--out", str(root / "prep"), "--threshold", "none",
               "--augment", "--balance-seed", "0"])
    assert rc == 0
    from distillkit.data import load_manifest
    ds = load_manifest(str(root / "prep" / "manifest.txt"))
    assert len(ds) == 24 * 4
    counts = ds.class_counts()
    assert counts[0] == counts[1]


def test_pipeline_and_evaluate_commands(root, capsys):
    rc = main(["pipeline", "--config", str(root / "exp.ini"),
               "--out", str(root / "bundle")])
    assert rc == 0
    out = capsys.readouterr().out
    assert "student-final.ckpt" in out
    rc = main(["evaluate", "--checkpoint",
               str(root / "bundle" / "student-final.ckpt"),
               "--manifest", str(root / "data" / "target" / "manifest.txt"),
               "--equalize", "--percent"])
    assert rc == 0
    assert "accuracy" in capsys.readouterr().out


def test_train_teacher_and_distill_labels(root, capsys):
    rc = main(["train-teacher", "--config", str(root / "exp.ini"),
               "--out", str(root / "tonly")])
    assert rc == 0
    ckpt = root / "tonly" / "teacher.ckpt"
    assert ckpt.exists()
    rc = main(["distill-labels", "--teacher", str(ckpt),
               "--manifest", str(root / "data" / "unlabeled" / "manifest.txt"),
               "--out", str(root / "soft.txt")])
    assert rc == 0
    text = (root / "soft.txt").read_text()
    assert text.startswith("# teacher ")
    assert len(text.strip().splitlines()) == 17  # header + 16 entries


def test_train_student_command(root, capsys):
    rc = main(["train-student", "--config", str(root / "exp.ini"),
               "--teacher", str(root / "tonly" / "teacher.ckpt"),
               "--out", str(root / "sonly")])
    assert rc == 0
    assert (root / "sonly" / "student-final.ckpt").exists()


def test_error_exit_code(root, capsys):
    rc = main(["pipeline", "--config", str(root / "missing.ini"),
               "--out", str(root / "x")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err
    rc = main(["complexity", "zoo:unknown-model"])
    assert rc == 2
