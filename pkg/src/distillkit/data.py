"""Images, datasets, binary PPM/PGM codecs and manifest files.

A dataset on disk is a directory of binary portable pixmaps (P6 for color,
P5 for grayscale) in per-class subdirectories plus a manifest file with one
`<relative path> <label>` line per image. Unlabeled images carry label -1.
"""

import os
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Image:
    pixels: np.ndarray          # (C, H, W) uint8, C in {1, 3}
    label: int = None
    path: str = None

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim == 2:
            px = px[None]
        if px.dtype != np.uint8:
            if px.min() < 0 or px.max() > 255:
                raise ValueError("pixel values must lie in [0, 255]")
            px = np.round(px).astype(np.uint8)
        if px.shape[0] not in (1, 3):
            raise ValueError(f"images must have 1 or 3 channels, got {px.shape[0]}")
        self.pixels = px

    @property
    def channels(self):
        return self.pixels.shape[0]

    @property
    def height(self):
        return self.pixels.shape[1]

    @property
    def width(self):
        return self.pixels.shape[2]


class ImageDataset:
    """An ordered collection of images, possibly labeled."""

    def __init__(self, images=()):
        self.images = list(images)

    def __len__(self):
        return len(self.images)

    def __iter__(self):
        return iter(self.images)

    def __getitem__(self, i):
        return self.images[i]

    def subset(self, indices):
        return ImageDataset([self.images[i] for i in indices])

    def labels(self):
        return np.array([-1 if im.label is None else im.label
                         for im in self.images], dtype=np.int64)

    def class_counts(self):
        counts = {}
        for im in self.images:
            counts[im.label] = counts.get(im.label, 0) + 1
        return counts


def to_float(pixels):
    """uint8 [0,255] -> float32 in [-0.5, 0.5]; the network input scaling."""
    return pixels.astype(np.float32) / 255.0 - 0.5


def batch_pixels(images):
    return np.stack([to_float(im.pixels) for im in images])


# ---------------------------------------------------------------------------
# PPM / PGM
# ---------------------------------------------------------------------------

def write_ppm(path, pixels):
    px = np.asarray(pixels, dtype=np.uint8)
    if px.ndim == 2:
        px = px[None]
    C, H, W = px.shape
    if C == 3:
        header = f"P6\n{W} {H}\n255\n".encode("ascii")
        payload = px.transpose(1, 2, 0).tobytes()
    elif C == 1:
        header = f"P5\n{W} {H}\n255\n".encode("ascii")
        payload = px[0].tobytes()
    else:
        raise ValueError(f"cannot write {C}-channel image as PPM/PGM")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def _read_token(fh):
    tok = b""
    while True:
        ch = fh.read(1)
        if not ch:
            raise ValueError("truncated PPM header")
        if ch == b"#":
            while ch not in (b"\n", b""):
                ch = fh.read(1)
            continue
        if ch.isspace():
            if tok:
                return tok
            continue
        tok += ch


def read_ppm(path):
    with open(path, "rb") as fh:
        magic = _read_token(fh)
        if magic not in (b"P5", b"P6"):
            raise ValueError(f"{path}: not a binary PGM/PPM (magic {magic!r})")
        W = int(_read_token(fh))
        H = int(_read_token(fh))
        maxval = int(_read_token(fh))
        if maxval != 255:
            raise ValueError(f"{path}: only maxval 255 supported, got {maxval}")
        channels = 3 if magic == b"P6" else 1
        raw = fh.read(W * H * channels)
        if len(raw) != W * H * channels:
            raise ValueError(f"{path}: truncated pixel data")
    arr = np.frombuffer(raw, dtype=np.uint8)
    if channels == 3:
        return np.ascontiguousarray(arr.reshape(H, W, 3).transpose(2, 0, 1))
    return arr.reshape(1, H, W).copy()


# ---------------------------------------------------------------------------
# manifests
# ---------------------------------------------------------------------------

def save_dataset(dataset, root, manifest_name="manifest.txt"):
    """Write images as PPMs in per-class directories plus a manifest."""
    os.makedirs(root, exist_ok=True)
    lines = []
    counters = {}
    for im in dataset:
        label = -1 if im.label is None else im.label
        sub = "unlabeled" if label < 0 else f"class_{label}"
        os.makedirs(os.path.join(root, sub), exist_ok=True)
        n = counters.get(sub, 0)
        counters[sub] = n + 1
        rel = f"{sub}/img_{n:05d}.ppm"
        write_ppm(os.path.join(root, rel), im.pixels)
        im.path = rel
        lines.append(f"{rel} {label}")
    manifest = os.path.join(root, manifest_name)
    with open(manifest, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + ("\n" if lines else ""))
    return manifest


def load_manifest(manifest_path):
    base = os.path.dirname(os.path.abspath(manifest_path))
    images = []
    with open(manifest_path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.rsplit(None, 1)
            if len(parts) != 2:
                raise ValueError(f"{manifest_path}:{lineno}: expected '<path> <label>'")
            rel, label_s = parts
            label = int(label_s)
            px = read_ppm(os.path.join(base, rel))
            images.append(Image(px, None if label < 0 else label, rel))
    return ImageDataset(images)
