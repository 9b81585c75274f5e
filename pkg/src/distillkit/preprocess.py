"""Dataset preparation: contrast measurement and filtering, per-channel local
histogram equalization, flip augmentation, class balancing, border cropping."""

import numpy as np

from .data import Image, ImageDataset

# BT.601 luma weights; frozen so contrast scores are reproducible
GRAY_WEIGHTS = (0.299, 0.587, 0.114)
DEFAULT_TILE_GRID = 8
DARK_BORDER_LEVEL = 10


def grayscale(pixels):
    """(C,H,W) uint8 -> (H,W) float64 luma in [0, 255]."""
    px = pixels.astype(np.float64)
    if px.shape[0] == 1:
        return px[0]
    r, g, b = GRAY_WEIGHTS
    return r * px[0] + g * px[1] + b * px[2]


def grayscale_stddev(image):
    """Population standard deviation of the grayscale image."""
    return float(grayscale(image.pixels).std())


def contrast_filter(dataset, threshold="mean"):
    """Drop images whose grayscale std falls below the threshold.

    threshold="mean" uses the dataset-mean std; images with std >= threshold
    are retained, in their original order.
    """
    if len(dataset) == 0:
        raise ValueError("contrast_filter needs a non-empty dataset")
    stds = np.array([grayscale_stddev(im) for im in dataset])
    thr = float(stds.mean()) if threshold == "mean" else float(threshold)
    kept = [im for im, s in zip(dataset, stds) if s >= thr]
    return ImageDataset(kept)


# ---------------------------------------------------------------------------
# histogram equalization
# ---------------------------------------------------------------------------

def _equalize_lut(plane_values):
    hist = np.bincount(plane_values.reshape(-1), minlength=256)
    cdf = hist.cumsum()
    n = cdf[-1]
    nz = np.nonzero(hist)[0]
    cdf_min = cdf[nz[0]] if len(nz) else 0
    denom = n - cdf_min
    if denom <= 0:
        return np.arange(256, dtype=np.float64)  # degenerate: identity
    return np.clip(np.round(255.0 * (cdf - cdf_min) / denom), 0, 255)


def _equalize_plane_global(plane):
    lut = _equalize_lut(plane)
    return lut[plane].astype(np.uint8)


def _equalize_plane_tiled(plane, grid):
    H, W = plane.shape
    ye = (np.arange(grid + 1) * H) // grid
    xe = (np.arange(grid + 1) * W) // grid
    luts = np.empty((grid, grid, 256), dtype=np.float64)
    for i in range(grid):
        for j in range(grid):
            luts[i, j] = _equalize_lut(plane[ye[i]:ye[i + 1], xe[j]:xe[j + 1]])

    # bilinear blend of the four surrounding tile mappings at every pixel
    fy = (np.arange(H) + 0.5) / H * grid - 0.5
    fx = (np.arange(W) + 0.5) / W * grid - 0.5
    i0 = np.clip(np.floor(fy).astype(np.intp), 0, grid - 1)
    j0 = np.clip(np.floor(fx).astype(np.intp), 0, grid - 1)
    i1 = np.minimum(i0 + 1, grid - 1)
    j1 = np.minimum(j0 + 1, grid - 1)
    wy = np.clip(fy - i0, 0.0, 1.0)[:, None]
    wx = np.clip(fx - j0, 0.0, 1.0)[None, :]

    v = plane.astype(np.intp)
    i0g, j0g = i0[:, None], j0[None, :]
    i1g, j1g = i1[:, None], j1[None, :]
    out = ((1 - wy) * (1 - wx) * luts[i0g, j0g, v]
           + (1 - wy) * wx * luts[i0g, j1g, v]
           + wy * (1 - wx) * luts[i1g, j0g, v]
           + wy * wx * luts[i1g, j1g, v])
    return np.clip(np.round(out), 0, 255).astype(np.uint8)


def equalize(image, grid=DEFAULT_TILE_GRID):
    """Tiled local histogram equalization, independently per channel.

    Images smaller than the tile grid fall back to global equalization.
    """
    planes = []
    for c in range(image.channels):
        plane = image.pixels[c]
        if image.height < grid or image.width < grid:
            planes.append(_equalize_plane_global(plane))
        else:
            planes.append(_equalize_plane_tiled(plane, grid))
    return Image(np.stack(planes), image.label, None)


# ---------------------------------------------------------------------------
# augmentation and balancing
# ---------------------------------------------------------------------------

def row_flip(pixels):
    return np.ascontiguousarray(pixels[:, ::-1, :])


def col_flip(pixels):
    return np.ascontiguousarray(pixels[:, :, ::-1])


def augment(image, grid=DEFAULT_TILE_GRID):
    """[equalized, +row flip, +column flip, +both]; labels carried over."""
    eq = equalize(image, grid)
    px = eq.pixels
    return [eq,
            Image(row_flip(px), image.label, None),
            Image(col_flip(px), image.label, None),
            Image(row_flip(col_flip(px)), image.label, None)]


def augment_dataset(dataset, grid=DEFAULT_TILE_GRID):
    out = []
    for im in dataset:
        out.extend(augment(im, grid))
    return ImageDataset(out)


def flip_expand(dataset):
    """The 4 flip variants per image, for datasets that are already equalized."""
    out = []
    for im in dataset:
        px = im.pixels
        out += [im,
                Image(row_flip(px), im.label, None),
                Image(col_flip(px), im.label, None),
                Image(row_flip(col_flip(px)), im.label, None)]
    return ImageDataset(out)


def balance(dataset, seed):
    """Seeded undersampling of every class to the minority-class count."""
    counts = dataset.class_counts()
    if None in counts:
        raise ValueError("balance requires labeled images")
    if not counts or min(counts.values()) == 0:
        raise ValueError("every class must be present at least once")
    target = min(counts.values())
    rng = np.random.default_rng(seed)
    keep = np.zeros(len(dataset), dtype=bool)
    for label in sorted(counts):
        idx = np.flatnonzero(dataset.labels() == label)
        if len(idx) == target:
            keep[idx] = True
        else:
            chosen = rng.choice(len(idx), size=target, replace=False)
            keep[idx[np.sort(chosen)]] = True
    return dataset.subset(np.flatnonzero(keep))


# ---------------------------------------------------------------------------
# cropping and resizing
# ---------------------------------------------------------------------------

def crop_dark_border(image, level=DARK_BORDER_LEVEL):
    """Crop to the bounding box of pixels brighter than `level` in grayscale."""
    mask = grayscale(image.pixels) > level
    if not mask.any():
        return image
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    px = image.pixels[:, rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1]
    return Image(np.ascontiguousarray(px), image.label, None)


def resize_bilinear_array(arr, out_hw):
    """Bilinear resize of a float (C,H,W) array (half-pixel centers)."""
    C, H, W = arr.shape
    Ho, Wo = out_hw
    ys = np.clip((np.arange(Ho) + 0.5) * H / Ho - 0.5, 0, H - 1)
    xs = np.clip((np.arange(Wo) + 0.5) * W / Wo - 0.5, 0, W - 1)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, H - 1)
    x1 = np.minimum(x0 + 1, W - 1)
    wy = (ys - y0)[None, :, None]
    wx = (xs - x0)[None, None, :]
    a = arr[:, y0[:, None], x0[None, :]]
    b = arr[:, y0[:, None], x1[None, :]]
    c = arr[:, y1[:, None], x0[None, :]]
    d = arr[:, y1[:, None], x1[None, :]]
    return ((1 - wy) * (1 - wx) * a + (1 - wy) * wx * b
            + wy * (1 - wx) * c + wy * wx * d)


def resize(image, size):
    """Bilinear resize to a square `size` x `size` image."""
    out = resize_bilinear_array(image.pixels.astype(np.float64), (size, size))
    return Image(np.clip(np.round(out), 0, 255).astype(np.uint8),
                 image.label, None)


def prepare_images(dataset, crop=False, size=None, threshold=None,
                   do_equalize=True, grid=DEFAULT_TILE_GRID):
    """Per-image preparation: optional crop+resize, contrast filter, equalize.

    Augmentation and balancing are train-split concerns and are applied
    separately (after any train/validation split).
    """
    images = list(dataset)
    if crop:
        images = [crop_dark_border(im) for im in images]
    if size is not None:
        images = [im if im.pixels.shape[1:] == (size, size) else resize(im, size)
                  for im in images]
    ds = ImageDataset(images)
    if threshold is not None:
        ds = contrast_filter(ds, threshold)
    if do_equalize:
        ds = ImageDataset([equalize(im, grid) for im in ds])
    return ds
