"""Threshold fitness functions over a gray-level histogram.

All objectives are minimised. Every class sum is read off prefix tables, so
evaluating one threshold vector costs ``O(N)`` and a batch of ``M`` vectors
is a handful of numpy operations.

Conventions:

* sums run over gray levels ``1..256`` (pixel value + 1) with raw counts;
* the ``ln h(i)`` term of the proposed entropy skips empty bins;
* an empty class uses the midpoint of its range as mean and contributes 0;
* the threshold-independent ``sum i h(i) ln i`` is kept so values match the
  textbook form of the cross-entropy rather than a shifted one.
"""

from __future__ import annotations

import enum
import weakref
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .imagery import LEVELS, Histogram, ThresholdVector

OBJECTIVE_CONVENTION = (
    "raw counts h(i) over gray levels 1..256; ln h(i) terms skip empty bins; "
    "empty classes use the range midpoint and contribute 0; all objectives "
    "are minimised"
)


class ObjectiveKind(str, enum.Enum):
    CROSS_ENTROPY = "ce"
    PEF = "pef"
    HYBRID = "hybrid"
    MSE = "mse"


@dataclass(frozen=True)
class ObjectiveWeights:
    alpha: float = 0.35
    beta: float = 0.65

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or self.alpha + self.beta <= 0:
            raise ValueError(
                f"weights need alpha, beta >= 0 and alpha + beta > 0, "
                f"got ({self.alpha}, {self.beta})"
            )


class _Tables:
    """Prefix sums indexed by gray level (entry 0 is the empty prefix)."""

    def __init__(self, hist: Histogram):
        h = hist.counts.astype(np.int64)
        i = np.arange(1, LEVELS + 1, dtype=np.int64)
        fi = i.astype(np.float64)
        logh = np.zeros(LEVELS)
        nz = h > 0
        logh[nz] = np.log(h[nz].astype(np.float64))

        def prefix(a):
            return np.concatenate(([0], np.cumsum(a)))

        self.total = hist.total
        self.count = prefix(h)  # int64, exact
        self.first = prefix(i * h)  # int64, exact
        self.second = prefix(i * i * h)  # int64, exact
        self.log_count = prefix(fi * logh)
        self.constant = float(np.sum(fi * h * np.log(fi)))


_TABLES: "weakref.WeakKeyDictionary[Histogram, _Tables]" = weakref.WeakKeyDictionary()


def _tables(hist: Histogram) -> _Tables:
    tab = _TABLES.get(hist)
    if tab is None:
        tab = _TABLES[hist] = _Tables(hist)
    return tab


def _as_matrix(th) -> tuple[np.ndarray, bool]:
    if isinstance(th, ThresholdVector):
        th = th.values
    arr = np.asarray(th, dtype=np.int64)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.ndim != 2 or arr.shape[1] == 0:
        raise ValueError("thresholds must be a vector or an (M, N) matrix")
    if np.any(np.diff(arr, axis=1) < 0):
        arr = np.sort(arr, axis=1)
    if arr.min() < 1 or arr.max() > LEVELS:
        raise ValueError(f"thresholds must lie in [1, {LEVELS}]")
    return arr, single


def _class_stats(tab: _Tables, th: np.ndarray):
    """Per-class ``(lo, hi, count, first moment, log-count sum, mean, occupied)``.

    Every array has shape ``(M, N + 1)``; ``lo``/``hi`` index the prefix tables.
    """
    m = th.shape[0]
    edges = np.empty((m, th.shape[1] + 2), dtype=np.int64)
    edges[:, 0] = 1
    edges[:, 1:-1] = th
    edges[:, -1] = LEVELS + 1
    lo = edges[:, :-1] - 1
    hi = edges[:, 1:] - 1
    cnt = tab.count[hi] - tab.count[lo]
    mom = tab.first[hi] - tab.first[lo]
    lgc = tab.log_count[hi] - tab.log_count[lo]
    occupied = cnt > 0
    mid = (edges[:, :-1] + edges[:, 1:] - 1) / 2.0
    mean = np.where(occupied, mom / np.where(occupied, cnt, 1), mid)
    assert np.all(mean[occupied] >= 1.0)
    return lo, hi, cnt, mom, lgc, mean, occupied


def _log_mean(mean: np.ndarray, occupied: np.ndarray) -> np.ndarray:
    # empty classes have mom == lgc == 0, so any finite value works here
    return np.log(np.where(occupied, mean, 1.0))


def _ce_terms(tab, stats) -> np.ndarray:
    _, _, _, mom, _, mean, occ = stats
    return tab.constant - np.sum(mom * _log_mean(mean, occ), axis=1)


def _pef_terms(tab, stats) -> np.ndarray:
    _, _, _, mom, lgc, mean, occ = stats
    # class entropy S = -[W (1 - mu) + L (1 - ln mu)]; subtracted below
    term = mom * (1.0 - mean) + lgc * (1.0 - _log_mean(mean, occ))
    return tab.constant + np.sum(np.where(occ, term, 0.0), axis=1)


def _cross_entropy(tab: _Tables, th: np.ndarray) -> np.ndarray:
    return _ce_terms(tab, _class_stats(tab, th))


def _pef(tab: _Tables, th: np.ndarray) -> np.ndarray:
    return _pef_terms(tab, _class_stats(tab, th))


def _mse(tab: _Tables, th: np.ndarray) -> np.ndarray:
    lo, hi, cnt, mom, _, mean, occ = _class_stats(tab, th)
    rep = np.floor(mean + 0.5).astype(np.int64)
    sq = tab.second[hi] - tab.second[lo]
    err = np.where(occ, sq - 2 * rep * mom + rep * rep * cnt, 0)
    return err.sum(axis=1) / tab.total


class Objective:
    """A fitness function bound to one histogram.

    Calling it with a single threshold vector returns a float; with an
    ``(M, N)`` integer matrix it returns ``M`` fitness values.
    """

    def __init__(
        self,
        hist: Histogram,
        kind: ObjectiveKind | str = ObjectiveKind.HYBRID,
        weights: ObjectiveWeights | None = None,
    ):
        self.hist = hist
        self.kind = ObjectiveKind(kind)
        self.weights = weights or ObjectiveWeights()
        self._tab = _tables(hist)
        self.evaluations = 0

    def batch(self, th: np.ndarray) -> np.ndarray:
        arr, _ = _as_matrix(th)
        self.evaluations += arr.shape[0]
        tab = self._tab
        if self.kind is ObjectiveKind.CROSS_ENTROPY:
            return _cross_entropy(tab, arr)
        if self.kind is ObjectiveKind.PEF:
            return _pef(tab, arr)
        if self.kind is ObjectiveKind.MSE:
            return _mse(tab, arr)
        w = self.weights
        stats = _class_stats(tab, arr)
        return w.alpha * _ce_terms(tab, stats) + w.beta * _pef_terms(tab, stats)

    def __call__(self, th) -> float | np.ndarray:
        arr, single = _as_matrix(th)
        out = self.batch(arr)
        return float(out[0]) if single else out


def cross_entropy_fitness(hist: Histogram, th: ThresholdVector | Sequence[int]) -> float:
    """Minimum cross-entropy ``sum i h ln i - sum_k W_k ln mu_k``."""
    return Objective(hist, ObjectiveKind.CROSS_ENTROPY)(th)


def pef_fitness(hist: Histogram, th: ThresholdVector | Sequence[int]) -> float:
    return Objective(hist, ObjectiveKind.PEF)(th)


def hybrid_fitness(
    hist: Histogram,
    th: ThresholdVector | Sequence[int],
    w: ObjectiveWeights | None = None,
) -> float:
    """``alpha * cross-entropy + beta * proposed entropy``."""
    return Objective(hist, ObjectiveKind.HYBRID, w)(th)


def mse_fitness(hist: Histogram, th: ThresholdVector | Sequence[int]) -> float:
    """Mean squared error of the rounded-class-mean reconstruction.

    Equals the pixel-space MSE between an image with this histogram and its
    :func:`~hawkthresh.imagery.apply_thresholds` output.
    """
    return Objective(hist, ObjectiveKind.MSE)(th)
