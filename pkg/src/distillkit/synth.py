"""Synthetic desk-scale image tasks.

Three sets, all fully seeded:

  target     - binary task: class 1 images contain a few small bright
               elliptical blobs on smooth textured backgrounds, class 0 images
               carry the same textures and confusers but no blobs.
  unlabeled  - images from a shifted texture distribution, blobs present in
               roughly half of them, no labels.
  surrogate  - a separate pre-training task for the teacher: compact bright
               structures (rings or blobs) vs. plain/striped textures.

Background brightness, texture scale, vignetting, channel tints, blob count,
position, size and orientation all vary per image, which is what makes a
small labeled sample generalize poorly.
"""

import os
from dataclasses import dataclass

import numpy as np

from .data import Image, ImageDataset, save_dataset
from .preprocess import resize_bilinear_array


@dataclass
class SynthConfig:
    size: int = 64
    per_class: int = 400
    unlabeled_count: int = 2000
    surrogate_per_class: int = 600
    seed: int = 0
    blob_contrast_lo: float = 0.10
    blob_contrast_hi: float = 0.22


CHANNEL_WEIGHTS = np.array([1.0, 0.95, 0.8])


def _background(rng, size, shifted=False):
    g = int(rng.integers(2, 9)) if shifted else int(rng.integers(3, 7))
    field = resize_bilinear_array(rng.random((1, g, g)), (size, size))[0]
    base = rng.uniform(0.25, 0.70) if shifted else rng.uniform(0.30, 0.60)
    amp = rng.uniform(0.10, 0.30) if shifted else rng.uniform(0.10, 0.25)
    ys, xs = np.mgrid[0:size, 0:size]
    r2 = (((ys - size / 2) ** 2 + (xs - size / 2) ** 2)
          / (2 * (size / 2) ** 2))
    vig = 1.0 - rng.uniform(0.0, 0.4) * r2
    plane = (base + amp * (field - 0.5)) * vig
    tints = rng.uniform(0.80, 1.0, size=3)
    canvas = plane[None] * tints[:, None, None]
    canvas += rng.normal(0.0, rng.uniform(0.01, 0.03), size=(3, size, size))
    return canvas


def _soft_ellipse(rng, size, r_lo, r_hi, margin=6):
    margin = min(margin, size // 3)
    cy = rng.uniform(margin, size - margin)
    cx = rng.uniform(margin, size - margin)
    ry = rng.uniform(r_lo, r_hi)
    rx = rng.uniform(r_lo, r_hi)
    theta = rng.uniform(0, np.pi)
    ys, xs = np.mgrid[0:size, 0:size]
    dy, dx = ys - cy, xs - cx
    u = (dx * np.cos(theta) + dy * np.sin(theta)) / rx
    v = (-dx * np.sin(theta) + dy * np.cos(theta)) / ry
    return u * u + v * v  # squared elliptical distance


def _add_blob(canvas, rng, contrast):
    d2 = _soft_ellipse(rng, canvas.shape[1], 2.0, 5.0)
    mask = np.exp(-0.5 * d2 * 4.0)
    canvas += contrast * mask[None] * CHANNEL_WEIGHTS[:, None, None]


def _add_dark_spot(canvas, rng):
    d2 = _soft_ellipse(rng, canvas.shape[1], 2.5, 6.0)
    mask = np.exp(-0.5 * d2 * 3.0)
    canvas -= rng.uniform(0.06, 0.16) * mask[None]


def _add_soft_disc(canvas, rng):
    # large, faint bright patch; a confuser present in both classes
    d2 = _soft_ellipse(rng, canvas.shape[1], 8.0, 14.0, margin=10)
    mask = np.exp(-0.5 * d2)
    canvas += rng.uniform(0.03, 0.06) * mask[None]


def _add_ring(canvas, rng):
    d2 = _soft_ellipse(rng, canvas.shape[1], 5.0, 10.0, margin=12)
    d = np.sqrt(d2)
    mask = np.exp(-((d - 1.0) ** 2) / (2 * 0.05))
    canvas += rng.uniform(0.12, 0.22) * mask[None] * CHANNEL_WEIGHTS[:, None, None]


def _add_stripes(canvas, rng):
    size = canvas.shape[1]
    theta = rng.uniform(0, np.pi)
    freq = rng.uniform(0.15, 0.5)
    ys, xs = np.mgrid[0:size, 0:size]
    wave = np.sin(2 * np.pi * freq * (xs * np.cos(theta) + ys * np.sin(theta)))
    canvas += rng.uniform(0.04, 0.10) * wave[None]


def _finish(canvas):
    return Image(np.clip(np.round(canvas * 255.0), 0, 255).astype(np.uint8))


def target_image(rng, cfg, label):
    canvas = _background(rng, cfg.size)
    if rng.random() < 0.5:
        _add_soft_disc(canvas, rng)
    for _ in range(int(rng.integers(0, 3))):
        _add_dark_spot(canvas, rng)
    if label == 1:
        for _ in range(int(rng.integers(1, 4))):
            contrast = rng.uniform(cfg.blob_contrast_lo, cfg.blob_contrast_hi)
            _add_blob(canvas, rng, contrast)
    im = _finish(canvas)
    im.label = label
    return im


def unlabeled_image(rng, cfg):
    canvas = _background(rng, cfg.size, shifted=True)
    if rng.random() < 0.5:
        _add_soft_disc(canvas, rng)
    for _ in range(int(rng.integers(0, 3))):
        _add_dark_spot(canvas, rng)
    if rng.random() < 0.5:
        for _ in range(int(rng.integers(1, 4))):
            contrast = rng.uniform(cfg.blob_contrast_lo * 0.8,
                                   cfg.blob_contrast_hi * 1.2)
            _add_blob(canvas, rng, contrast)
    return _finish(canvas)


def surrogate_image(rng, cfg, label):
    canvas = _background(rng, cfg.size, shifted=True)
    if label == 1:
        if rng.random() < 0.5:
            _add_ring(canvas, rng)
        else:
            for _ in range(int(rng.integers(1, 3))):
                _add_blob(canvas, rng, rng.uniform(0.12, 0.26))
    else:
        if rng.random() < 0.5:
            _add_stripes(canvas, rng)
    for _ in range(int(rng.integers(0, 2))):
        _add_dark_spot(canvas, rng)
    im = _finish(canvas)
    im.label = label
    return im


def make_synthetic(out_dir, cfg=None):
    """Generate and persist the three datasets; returns manifest paths."""
    cfg = cfg or SynthConfig()
    rng = np.random.default_rng(cfg.seed)

    target = []
    for i in range(cfg.per_class * 2):
        target.append(target_image(rng, cfg, label=i % 2))
    unlabeled = [unlabeled_image(rng, cfg) for _ in range(cfg.unlabeled_count)]
    surrogate = []
    for i in range(cfg.surrogate_per_class * 2):
        surrogate.append(surrogate_image(rng, cfg, label=i % 2))

    paths = {}
    for name, images in (("target", target), ("unlabeled", unlabeled),
                         ("surrogate", surrogate)):
        root = os.path.join(out_dir, name)
        paths[name] = save_dataset(ImageDataset(images), root)
    return paths
