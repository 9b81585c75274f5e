import pytest

from distillkit.config import (ExperimentConfig, config_fingerprint,
                               load_config, parse_threshold, save_config,
                               validate_config)
from distillkit.train import ConfigError


def test_roundtrip(tmp_path):
    cfg = ExperimentConfig(target_manifest="t.txt", image_size=32,
                           use_unlabeled=False, learning_rate=0.05,
                           contrast_threshold="mean", seed=9)
    path = tmp_path / "c.ini"
    save_config(path, cfg)
    back = load_config(path)
    assert back == cfg


def test_defaults_and_partial_file(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[data]\ntarget_manifest = x.txt\n"
                    "[train]\nseed = 3\n")
    cfg = load_config(path)
    assert cfg.target_manifest == "x.txt"
    assert cfg.seed == 3
    assert cfg.batch_size == ExperimentConfig().batch_size


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[data]\ntarget_manifest = x.txt\nbogus = 1\n")
    with pytest.raises(ConfigError, match="bogus"):
        load_config(path)


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/config.ini")


def test_threshold_parsing():
    assert parse_threshold("none") is None
    assert parse_threshold("mean") == "mean"
    assert parse_threshold("12.5") == 12.5
    with pytest.raises(ConfigError):
        parse_threshold("sometimes")


def _manifests(tmp_path, unlabeled_lines="u/im.ppm -1\n"):
    tm = tmp_path / "target.txt"
    tm.write_text("class_0/im.ppm 0\n")
    um = tmp_path / "unlabeled.txt"
    um.write_text(unlabeled_lines)
    return str(tm), str(um)


def test_validate_requires_files(tmp_path):
    tm, um = _manifests(tmp_path)
    cfg = ExperimentConfig(target_manifest=tm, unlabeled_manifest=um)
    validate_config(cfg, str(tmp_path))
    cfg2 = ExperimentConfig(target_manifest=str(tmp_path / "missing.txt"))
    with pytest.raises(ConfigError):
        validate_config(cfg2, str(tmp_path))


def test_validate_unlabeled_rules(tmp_path):
    tm, um = _manifests(tmp_path, unlabeled_lines="")
    cfg = ExperimentConfig(target_manifest=tm, unlabeled_manifest=um,
                           use_unlabeled=True)
    with pytest.raises(ConfigError, match="empty"):
        validate_config(cfg, str(tmp_path))
    cfg.use_unlabeled = False
    validate_config(cfg, str(tmp_path))
    cfg.use_unlabeled = True
    cfg.unlabeled_manifest = ""
    with pytest.raises(ConfigError):
        validate_config(cfg, str(tmp_path))


def test_validate_teacher_checkpoint(tmp_path):
    tm, um = _manifests(tmp_path)
    cfg = ExperimentConfig(target_manifest=tm, unlabeled_manifest=um,
                           teacher_checkpoint="missing.ckpt")
    with pytest.raises(ConfigError, match="checkpoint"):
        validate_config(cfg, str(tmp_path))


def test_fingerprint_changes_with_config():
    a = ExperimentConfig(target_manifest="a")
    b = ExperimentConfig(target_manifest="a", seed=1)
    assert config_fingerprint(a) != config_fingerprint(b)
    assert config_fingerprint(a) == config_fingerprint(
        ExperimentConfig(target_manifest="a"))
