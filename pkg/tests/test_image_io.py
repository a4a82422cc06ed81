"""Raster IO round trips."""

import numpy as np
import pytest
from PIL import Image

from spherepix.image_io import (
    read_gray,
    read_labels,
    read_rgb,
    write_label_csv,
    write_labels,
    write_overlay,
)


def test_label_roundtrip_16bit(tmp_path):
    rng = np.random.default_rng(0)
    labels = rng.integers(0, 3000, size=(8, 16))
    path = tmp_path / "labels.png"
    write_labels(path, labels)
    back = read_labels(path)
    assert back.dtype == np.int64
    assert np.array_equal(back, labels)


def test_label_range_guard(tmp_path):
    with pytest.raises(ValueError):
        write_labels(tmp_path / "bad.png", np.array([[70000]]))


def test_rgb_roundtrip_png_and_ppm(tmp_path):
    rng = np.random.default_rng(1)
    img = rng.integers(0, 256, size=(4, 8, 3), dtype=np.uint8)
    for name in ("img.png", "img.ppm"):
        path = tmp_path / name
        Image.fromarray(img).save(path)
        assert np.array_equal(read_rgb(path), img)


def test_gray_pgm(tmp_path):
    gray = np.arange(32, dtype=np.uint8).reshape(4, 8) * 8
    path = tmp_path / "map.pgm"
    Image.fromarray(gray).save(path)
    assert np.array_equal(read_gray(path), gray)


def test_overlay(tmp_path):
    rgb = np.zeros((4, 8, 3), dtype=np.uint8)
    boundary = np.zeros((4, 8), dtype=bool)
    boundary[2, 3] = True
    path = tmp_path / "overlay.png"
    write_overlay(path, rgb, boundary)
    out = np.asarray(Image.open(path))
    assert tuple(out[2, 3]) == (255, 0, 0)
    assert tuple(out[0, 0]) == (0, 0, 0)


def test_label_csv(tmp_path):
    labels = np.arange(12).reshape(3, 4)
    path = tmp_path / "labels.csv"
    write_label_csv(path, labels)
    back = np.loadtxt(path, delimiter=",", dtype=np.int64)
    assert np.array_equal(back, labels)
