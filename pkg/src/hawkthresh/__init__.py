"""Multilevel image thresholding with a chaotic, altruistic Harris hawks optimiser."""

__version__ = "0.1.0"

from .chaos import ChaoticMapKind, init_population
from .hho import HHOParams, RunResult, run
from .imagery import (
    GrayImage,
    Histogram,
    ThresholdVector,
    apply_thresholds,
    compute_histogram,
    load_image,
    save_image,
)
from .metrics import MetricReport, evaluate
from .objectives import Objective, ObjectiveKind, ObjectiveWeights
from .oracle import AblationFlags, baseline_run, exhaustive_search

__all__ = [
    "AblationFlags",
    "ChaoticMapKind",
    "GrayImage",
    "HHOParams",
    "Histogram",
    "MetricReport",
    "Objective",
    "ObjectiveKind",
    "ObjectiveWeights",
    "RunResult",
    "ThresholdVector",
    "apply_thresholds",
    "baseline_run",
    "compute_histogram",
    "evaluate",
    "exhaustive_search",
    "init_population",
    "load_image",
    "run",
    "save_image",
]
