"""JSON reports and CSV tables for segmentation runs."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

from .hho import RunResult
from .imagery import INDEX_CONVENTION, Histogram
from .metrics import CSV_HEADER, MetricReport
from .objectives import OBJECTIVE_CONVENTION

# fields that depend on the machine rather than the computation
TIMING_FIELDS = ("time_s", "metrics_time_s")


def run_report(
    image: str,
    result: RunResult,
    metrics: MetricReport,
    time_s: float,
    metrics_time_s: float = 0.0,
) -> dict:
    """Everything needed to reproduce one (image, N) cell."""
    out = result.to_dict()
    out.pop("time_s")
    out.update(
        image=image,
        metrics=metrics.to_dict(),
        index_convention=INDEX_CONVENTION,
        objective_convention=OBJECTIVE_CONVENTION,
        time_s=time_s,
        metrics_time_s=metrics_time_s,
    )
    return out


def strip_timing(report: dict) -> dict:
    return {k: v for k, v in report.items() if k not in TIMING_FIELDS}


def _clean(value):
    # JSON has no infinity; the psnr flag carries it instead
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def dumps(report: dict) -> str:
    return json.dumps(_clean(report), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(report: dict, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(dumps(report))
    return path


def write_metrics_csv(rows: Iterable[Sequence[str]], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        w.writerows(rows)
    return path


def write_histogram_csv(hist: Histogram, path: str | Path) -> Path:
    """256 rows of ``level,pixel_value,count`` (gray level = pixel value + 1)."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("level", "pixel_value", "count"))
        for v, c in enumerate(hist.counts.tolist()):
            w.writerow((v + 1, v, c))
    return path


def write_threshold_sidecar(levels: Sequence[int], path: str | Path) -> Path:
    levels = [int(v) for v in levels]
    payload = {
        "thresholds_levels": levels,
        "thresholds_pixel": [v - 1 for v in levels],
        "index_convention": INDEX_CONVENTION,
    }
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2) + "\n")
    return path
