import numpy as np
import numpy.testing as npt
import pytest

from distillkit.data import Image, ImageDataset
from distillkit.preprocess import (augment, augment_dataset, balance,
                                   contrast_filter, crop_dark_border, equalize,
                                   grayscale_stddev, resize)


def gray_image(values, label=None):
    arr = np.asarray(values, dtype=np.uint8)
    return Image(arr[None], label)


def noise_image(rng, h=16, w=16, label=None, lo=0, hi=256):
    return Image(rng.integers(lo, hi, size=(1, h, w)).astype(np.uint8), label)


def test_stddev_constant_is_zero():
    assert grayscale_stddev(gray_image(np.full((4, 4), 77))) == 0.0


def test_stddev_derived_values():
    assert grayscale_stddev(gray_image([[0, 0], [2, 2]])) == 1.0
    assert grayscale_stddev(gray_image([[0, 255]])) == 127.5


def test_stddev_color_uses_bt601():
    px = np.zeros((3, 1, 2), np.uint8)
    px[0, 0, 1] = 255  # red in one pixel only
    im = Image(px)
    # gray = [0, 0.299*255]; population std = half the spread
    npt.assert_allclose(grayscale_stddev(im), 0.299 * 255 / 2, rtol=1e-12)


def make_dataset_with_stds():
    # three gray images with stds 1, 2, 3 and mean threshold 2
    imgs = [gray_image([[0, 0], [2, 2]]),     # std 1
            gray_image([[0, 0], [4, 4]]),     # std 2
            gray_image([[0, 0], [6, 6]])]     # std 3
    return ImageDataset(imgs)


def test_contrast_filter_mean_threshold():
    ds = make_dataset_with_stds()
    kept = contrast_filter(ds, "mean")
    assert len(kept) == 2
    assert [grayscale_stddev(im) for im in kept] == [2.0, 3.0]


def test_contrast_filter_zero_threshold_keeps_all():
    ds = make_dataset_with_stds()
    assert len(contrast_filter(ds, 0.0)) == 3


def test_contrast_filter_constant_boundary():
    ds = ImageDataset([gray_image(np.full((3, 3), 9)) for _ in range(4)])
    kept = contrast_filter(ds, "mean")  # mean std 0; std 0 >= 0 kept
    assert len(kept) == 4


def test_contrast_filter_idempotent_and_ordered():
    rng = np.random.default_rng(0)
    ds = ImageDataset([noise_image(rng) for _ in range(20)])
    once = contrast_filter(ds, 30.0)
    twice = contrast_filter(once, 30.0)
    assert [id(a) for a in once] == [id(b) for b in twice]
    pos = {id(im): i for i, im in enumerate(ds)}
    kept_pos = [pos[id(im)] for im in once]
    assert kept_pos == sorted(kept_pos)


def test_contrast_filter_empty_rejected():
    with pytest.raises(ValueError):
        contrast_filter(ImageDataset([]), "mean")


def test_equalize_constant_stays_constant():
    im = Image(np.full((3, 32, 32), 123, np.uint8))
    out = equalize(im)
    assert np.all(out.pixels == 123)


def test_equalize_uniform_tiles_near_identity():
    # every 4x4 tile holds the 16 evenly spaced levels 0,17,...,255, whose
    # equalization mapping is exactly the identity
    tile = (np.arange(16, dtype=np.uint8) * 17).reshape(4, 4)
    plane = np.tile(tile, (8, 8))  # 32x32, tile grid 8 -> one tile each
    im = Image(plane[None])
    out = equalize(im, grid=8)
    diff = out.pixels.astype(int) - im.pixels.astype(int)
    assert np.abs(diff).max() <= 1


def test_equalize_flattens_histograms():
    rng = np.random.default_rng(1)
    bins = 16
    for _ in range(10):
        # skewed, peaked intensities
        raw = np.clip(rng.normal(90, 18, size=(1, 40, 40)), 0, 255)
        im = Image(raw.astype(np.uint8))
        out = equalize(im)

        def linf_to_uniform(px):
            h = np.histogram(px, bins=bins, range=(0, 256))[0] / px.size
            return np.abs(h - 1.0 / bins).max()

        assert linf_to_uniform(out.pixels) <= linf_to_uniform(im.pixels) + 1e-9


def test_equalize_small_image_falls_back_global():
    im = Image(np.array([[[0, 255], [0, 255]]], np.uint8))
    out = equalize(im, grid=8)  # 2x2 < grid
    assert out.pixels.shape == im.pixels.shape


def test_augment_count_and_labels():
    rng = np.random.default_rng(2)
    im = noise_image(rng, label=1)
    variants = augment(im)
    assert len(variants) == 4
    assert all(v.label == 1 for v in variants)


def test_augment_symmetric_image():
    # fully symmetric constant image: all four variants identical
    im = Image(np.full((1, 8, 8), 200, np.uint8), label=0)
    variants = augment(im)
    for v in variants[1:]:
        npt.assert_array_equal(v.pixels, variants[0].pixels)


def test_flip_involution():
    from distillkit.preprocess import row_flip
    rng = np.random.default_rng(3)
    px = rng.integers(0, 256, size=(3, 5, 7)).astype(np.uint8)
    npt.assert_array_equal(row_flip(row_flip(px)), px)


def test_augment_dataset_1200_to_4800():
    rng = np.random.default_rng(4)
    ds = ImageDataset([noise_image(rng, 8, 8, label=i % 2) for i in range(1200)])
    out = augment_dataset(ds)
    assert len(out) == 4800


def test_balance_paper_counts():
    imgs = [Image(np.zeros((1, 1, 1), np.uint8), label=0) for _ in range(20088)]
    imgs += [Image(np.zeros((1, 1, 1), np.uint8), label=1) for _ in range(5143)]
    out = balance(ImageDataset(imgs), seed=0)
    assert out.class_counts() == {0: 5143, 1: 5143}


def test_balance_already_balanced_unchanged():
    rng = np.random.default_rng(5)
    imgs = [noise_image(rng, 4, 4, label=i % 2) for i in range(10)]
    out = balance(ImageDataset(imgs), seed=1)
    assert [id(i) for i in out] == [id(i) for i in imgs]


def test_balance_seeded_golden():
    imgs = ([gray_image([[v]], label=0) for v in (10, 20, 30, 40)]
            + [gray_image([[v]], label=1) for v in (50, 60)])
    out = balance(ImageDataset(imgs), seed=42)
    assert out.class_counts() == {0: 2, 1: 2}
    again = balance(ImageDataset(imgs), seed=42)
    assert [im.pixels[0, 0, 0] for im in out] == \
           [im.pixels[0, 0, 0] for im in again]
    # sampling without replacement: chosen class-0 values are distinct
    zeros = [im.pixels[0, 0, 0] for im in out if im.label == 0]
    assert len(set(zeros)) == 2


def test_balance_rejects_missing_class():
    with pytest.raises(ValueError):
        balance(ImageDataset([gray_image([[1]], label=None)]), seed=0)


def test_crop_dark_border():
    px = np.zeros((1, 10, 10), np.uint8)
    px[0, 3:7, 2:9] = 200
    out = crop_dark_border(Image(px))
    assert out.pixels.shape == (1, 4, 7)
    assert np.all(out.pixels == 200)
    # all-dark image unchanged
    dark = Image(np.zeros((1, 5, 5), np.uint8))
    assert crop_dark_border(dark).pixels.shape == (1, 5, 5)


def test_resize_constant_and_shape():
    im = Image(np.full((3, 10, 14), 55, np.uint8))
    out = resize(im, 7)
    assert out.pixels.shape == (3, 7, 7)
    assert np.all(out.pixels == 55)
