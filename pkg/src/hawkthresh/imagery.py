"""Grayscale images, histograms, threshold vectors and segmentation.

Gray levels use two coordinate systems. Pixels are stored as 8-bit values
``v`` in ``0..255``; histogram levels, thresholds and class means use the
shifted level ``i = v + 1`` in ``1..256`` so that ``i * ln(i)`` stays defined.
A threshold ``th`` therefore puts pixel ``v`` in the upper class when
``v + 1 >= th``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from PIL import Image

#: Number of gray levels ``G``.
LEVELS = 256

INDEX_CONVENTION = (
    "pixel value v maps to gray level v+1; thresholds, class means and "
    "fitness sums use gray levels 1..256; a pixel is in the class starting "
    "at threshold th when v+1 >= th; reported pixel thresholds are th-1"
)


class ImageError(ValueError):
    """Raised for unreadable, empty or unsupported images."""


@dataclass(frozen=True, eq=False)
class GrayImage:
    """An immutable 8-bit grayscale raster, shape ``(height, width)``."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2 or arr.size == 0:
            raise ImageError("empty input")
        if arr.dtype != np.uint8:
            if not np.issubdtype(arr.dtype, np.integer):
                raise ImageError("pixels must be integers in [0, 255]")
            if arr.min() < 0 or arr.max() > 255:
                raise ImageError("pixels must be integers in [0, 255]")
        arr = np.array(arr, dtype=np.uint8, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def size(self) -> int:
        return self.pixels.size

    def same_as(self, other: "GrayImage") -> bool:
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )


@dataclass(frozen=True, eq=False)
class Histogram:
    """Occurrence counts of the 256 gray levels.

    ``counts[v]`` is the number of pixels with value ``v``, i.e. the count of
    gray level ``v + 1``.
    """

    counts: np.ndarray
    total: int = field(init=False)

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.shape != (LEVELS,):
            raise ValueError(f"histogram needs {LEVELS} bins, got shape {c.shape}")
        if np.any(c < 0):
            raise ValueError("histogram counts must be non-negative")
        c = np.array(c, dtype=np.int64, copy=True)
        c.setflags(write=False)
        total = int(c.sum())
        if total <= 0:
            raise ValueError("empty input")
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "total", total)

    @property
    def probs(self) -> np.ndarray:
        return self.counts / self.total

    @property
    def occupied(self) -> int:
        """Number of non-empty bins."""
        return int(np.count_nonzero(self.counts))

    @classmethod
    def from_counts(cls, counts: dict[int, int] | Sequence[int]) -> "Histogram":
        """Build from a full 256-vector or a sparse ``{pixel_value: count}``."""
        if isinstance(counts, dict):
            full = np.zeros(LEVELS, dtype=np.int64)
            for v, n in counts.items():
                full[int(v)] += int(n)
            return cls(full)
        return cls(np.asarray(counts))

    def scaled(self, factor: int) -> "Histogram":
        return Histogram(self.counts * int(factor))


@dataclass(frozen=True)
class ThresholdVector:
    """Strictly increasing integer thresholds in gray-level coordinates."""

    values: tuple[int, ...]
    lower: int = 1
    upper: int = LEVELS

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if not vals:
            raise ValueError("at least one threshold is required")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError(f"thresholds must be strictly increasing: {vals}")
        if vals[0] < self.lower or vals[-1] > self.upper:
            raise ValueError(
                f"thresholds {vals} outside [{self.lower}, {self.upper}]"
            )

    @classmethod
    def of(cls, values: Iterable[int], lower: int = 1, upper: int = LEVELS):
        return cls(tuple(values), lower, upper)

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    @property
    def pixel_values(self) -> tuple[int, ...]:
        """Thresholds expressed as 8-bit pixel values (``th - 1``)."""
        return tuple(v - 1 for v in self.values)


def compute_histogram(image: GrayImage) -> Histogram:
    if image.size == 0:
        raise ImageError("empty input")
    return Histogram(np.bincount(image.pixels.ravel(), minlength=LEVELS))


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def class_bounds(th: Iterable[int]) -> list[tuple[int, int]]:
    """Half-open gray-level ranges ``[lo, hi)`` of the ``N + 1`` classes."""
    edges = [1, *th, LEVELS + 1]
    return list(zip(edges[:-1], edges[1:]))


def class_mean(hist: Histogram, lo: int, hi: int) -> float:
    """Intensity-weighted mean gray level of bins ``lo .. hi-1``.

    An empty class falls back to the midpoint ``(lo + hi - 1) / 2``.
    """
    if lo >= hi:
        raise ValueError(f"degenerate range [{lo}, {hi})")
    if lo < 1 or hi > LEVELS + 1:
        raise ValueError(f"range [{lo}, {hi}) outside gray levels 1..{LEVELS}")
    levels = np.arange(lo, hi, dtype=np.float64)
    counts = hist.counts[lo - 1 : hi - 1]
    mass = counts.sum()
    if mass == 0:
        return (lo + hi - 1) / 2.0
    return float(np.dot(levels, counts) / mass)


def class_lookup(hist: Histogram, th: Iterable[int]) -> np.ndarray:
    """Map every pixel value to the rounded mean of its class, as uint8."""
    lut = np.empty(LEVELS, dtype=np.uint8)
    for lo, hi in class_bounds(th):
        if lo >= hi:
            continue
        lut[lo - 1 : hi - 1] = round_half_up(class_mean(hist, lo, hi)) - 1
    return lut


def apply_thresholds(
    image: GrayImage, th: ThresholdVector | Sequence[int], hist: Histogram | None = None
) -> GrayImage:
    """Replace every pixel by the rounded mean of its class."""
    if hist is None:
        hist = compute_histogram(image)
    values = th.values if isinstance(th, ThresholdVector) else tuple(th)
    return GrayImage(class_lookup(hist, values)[image.pixels])


def _to_gray(img: Image.Image) -> np.ndarray:
    mode = img.mode
    if mode == "L":
        return np.asarray(img, dtype=np.uint8)
    if mode == "1":
        return np.asarray(img.convert("L"), dtype=np.uint8)
    if mode == "LA":
        return np.asarray(img, dtype=np.uint8)[..., 0]
    if mode == "P":
        img = img.convert("RGBA" if "transparency" in img.info else "RGB")
        mode = img.mode
    if mode in ("RGB", "RGBA"):
        rgb = np.asarray(img, dtype=np.float64)[..., :3]
        luma = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
        return np.clip(np.floor(luma + 0.5), 0, 255).astype(np.uint8)
    raise ImageError(f"unsupported image mode {mode!r}; 8-bit gray or RGB expected")


def load_image(path: str | Path) -> GrayImage:
    """Read a PNG/PGM (or any 8-bit format Pillow decodes) as grayscale.

    Colour images are reduced with Rec. 601 luma, rounded.
    """
    path = Path(path)
    try:
        with Image.open(path) as img:
            img.load()
            arr = _to_gray(img)
    except ImageError:
        raise
    except (OSError, ValueError) as exc:
        raise ImageError(f"cannot read image {path}: {exc}") from exc
    return GrayImage(arr)


def save_image(image: GrayImage, path: str | Path) -> None:
    """Write as PNG or binary PGM (P5), chosen by file suffix."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".png":
        fmt = "PNG"
    elif suffix in (".pgm", ".pnm"):
        fmt = "PPM"
    else:
        raise ImageError(f"unsupported output format {suffix!r} (use .png or .pgm)")
    Image.fromarray(np.ascontiguousarray(image.pixels)).save(path, format=fmt)


def repair_thresholds(values, lower: int, upper: int) -> np.ndarray | None:
    """Round half up, clamp to ``[lower, upper]``, sort and de-duplicate.

    A duplicate is nudged to the nearest free level, trying ``+1, -1, +2,
    -2, ...``. Returns ``None`` when there are fewer levels than thresholds.
    """
    v = np.asarray(values, dtype=np.float64)
    n = v.shape[0]
    if upper - lower + 1 < n:
        return None
    out = np.floor(np.clip(v, lower, upper) + 0.5).astype(np.int64)
    out.sort()
    if n < 2 or np.all(np.diff(out) > 0):
        return out
    used: set[int] = set()
    fixed = []
    for x in out.tolist():
        if x in used:
            for d in range(1, upper - lower + 1):
                if x + d <= upper and x + d not in used:
                    x += d
                    break
                if x - d >= lower and x - d not in used:
                    x -= d
                    break
        used.add(x)
        fixed.append(x)
    return np.array(sorted(fixed), dtype=np.int64)


def repair_batch(matrix, lower: int, upper: int) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise :func:`repair_thresholds`; returns ``(rows, feasible_mask)``."""
    m = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    rows, n = m.shape
    ok = np.ones(rows, dtype=bool)
    if upper - lower + 1 < n:
        return np.zeros((rows, n), dtype=np.int64), ~ok
    out = np.floor(np.clip(m, lower, upper) + 0.5).astype(np.int64)
    out.sort(axis=1)
    if n > 1:
        bad = np.flatnonzero(np.any(np.diff(out, axis=1) == 0, axis=1))
        for r in bad:
            out[r] = repair_thresholds(out[r], lower, upper)
    return out, ok
