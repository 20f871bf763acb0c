"""Deterministic synthetic test images with multi-modal histograms.

Each image is built from a few flat or smoothly varying regions plus
Gaussian noise, so its histogram has several well separated modes. The
generators take no external data and always produce the same pixels.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
from scipy import ndimage

from .imagery import GrayImage

SIZE = 128


def _finish(img: np.ndarray, noise: float, rng: np.random.Generator) -> GrayImage:
    img = img + rng.normal(0.0, noise, img.shape)
    return GrayImage(np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8))


def _grid(n: int = SIZE):
    y, x = np.mgrid[0:n, 0:n].astype(np.float64)
    return (x - n / 2) / (n / 2), (y - n / 2) / (n / 2)


def phantom() -> GrayImage:
    """Head-like phantom: background, skull ring, two tissues, ventricles."""
    x, y = _grid()
    img = np.full(x.shape, 15.0)
    img[(x / 0.9) ** 2 + (y / 0.95) ** 2 < 1] = 235
    img[(x / 0.82) ** 2 + (y / 0.87) ** 2 < 1] = 120
    img[(x / 0.6) ** 2 + (y / 0.65) ** 2 < 1] = 170
    img[((x - 0.15) / 0.12) ** 2 + (y / 0.3) ** 2 < 1] = 60
    img[((x + 0.15) / 0.12) ** 2 + (y / 0.3) ** 2 < 1] = 60
    return _finish(ndimage.gaussian_filter(img, 1.0), 6.0, np.random.default_rng(101))


def stripes() -> GrayImage:
    """Five vertical bands at distinct levels."""
    x, _ = _grid()
    levels = np.array([30.0, 80.0, 130.0, 185.0, 230.0])
    band = np.minimum(((x + 1) / 2 * 5).astype(int), 4)
    return _finish(levels[band], 9.0, np.random.default_rng(102))


def disks() -> GrayImage:
    """Overlapping disks on a dark background."""
    x, y = _grid()
    img = np.full(x.shape, 25.0)
    for cx, cy, r, v in [(-0.4, -0.3, 0.45, 90), (0.35, -0.2, 0.4, 150),
                         (0.0, 0.4, 0.42, 205), (0.1, 0.0, 0.2, 250)]:
        img[(x - cx) ** 2 + (y - cy) ** 2 < r * r] = v
    return _finish(img, 7.0, np.random.default_rng(103))


def checker() -> GrayImage:
    """Checkerboard with four gray levels."""
    n = SIZE
    i, j = np.mgrid[0:n, 0:n] // 16
    levels = np.array([40.0, 100.0, 160.0, 220.0])
    return _finish(levels[(i + 2 * j) % 4], 10.0, np.random.default_rng(104))


def gradient_blocks() -> GrayImage:
    """Quadrants at different levels with a gentle ramp inside each."""
    x, y = _grid()
    img = np.where(x < 0, np.where(y < 0, 50.0, 110.0), np.where(y < 0, 170.0, 215.0))
    img = img + 12.0 * x
    return _finish(img, 5.0, np.random.default_rng(105))


def rings() -> GrayImage:
    """Concentric rings at six levels."""
    x, y = _grid()
    r = np.sqrt(x * x + y * y)
    levels = np.array([20.0, 65.0, 110.0, 150.0, 195.0, 240.0])
    idx = np.minimum((r / 1.42 * 6).astype(int), 5)
    return _finish(ndimage.gaussian_filter(levels[idx], 0.8), 6.0, np.random.default_rng(106))


def blobs() -> GrayImage:
    """Smooth random field quantised into four tissues."""
    rng = np.random.default_rng(107)
    field = ndimage.gaussian_filter(rng.normal(size=(SIZE, SIZE)), 8.0)
    edges = np.quantile(field, [0.3, 0.55, 0.8])
    levels = np.array([35.0, 95.0, 150.0, 210.0])
    return _finish(levels[np.digitize(field, edges)], 8.0, rng)


def skewed() -> GrayImage:
    """Unequal class sizes: a large dark area and small bright details."""
    x, y = _grid()
    img = np.full(x.shape, 45.0)
    img[(x / 0.8) ** 2 + (y / 0.6) ** 2 < 1] = 100
    img[(np.abs(x) < 0.5) & (np.abs(y) < 0.08)] = 175
    img[(x - 0.3) ** 2 + (y + 0.3) ** 2 < 0.01] = 240
    img[(x + 0.4) ** 2 + (y - 0.35) ** 2 < 0.02] = 215
    return _finish(img, 8.0, np.random.default_rng(108))


CORPUS: dict[str, Callable[[], GrayImage]] = {
    "phantom": phantom,
    "stripes": stripes,
    "disks": disks,
    "checker": checker,
    "gradient_blocks": gradient_blocks,
    "rings": rings,
    "blobs": blobs,
    "skewed": skewed,
}


def load_corpus() -> dict[str, GrayImage]:
    return {name: make() for name, make in CORPUS.items()}
