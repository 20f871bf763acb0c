"""Command line entry point: ``hawkthresh {run,oracle,metrics,hist}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import __version__
from .chaos import ChaoticMapKind
from .hho import HHOParams, run
from .imagery import (
    LEVELS,
    GrayImage,
    ImageError,
    ThresholdVector,
    apply_thresholds,
    compute_histogram,
    load_image,
    save_image,
)
from .metrics import evaluate
from .objectives import ObjectiveKind, ObjectiveWeights
from .oracle import DEFAULT_MAX_COMBOS, SearchBudgetExceeded, exhaustive_search
from .plotting import convergence_figure, histogram_figure
from .report import (
    dumps,
    run_report,
    write_histogram_csv,
    write_json,
    write_metrics_csv,
    write_threshold_sidecar,
)

log = logging.getLogger("hawkthresh")

IMAGE_SUFFIXES = {".png", ".pgm", ".pnm", ".ppm", ".tif", ".tiff", ".bmp", ".jpg", ".jpeg"}
THREADS_ENV = "HAWKTHRESH_THREADS"


@dataclass
class RunConfig:
    inputs: list[Path]
    n_thresholds: list[int] = field(default_factory=lambda: [2, 3, 4, 5])
    params: HHOParams = field(default_factory=HHOParams)
    objective: ObjectiveKind = ObjectiveKind.HYBRID
    out: Path = Path("hawkthresh-out")
    uiqi_windowed: bool = False
    figures: bool = True

    def __post_init__(self):
        for n in self.n_thresholds:
            if not 1 <= n <= LEVELS - 2:
                raise ValueError(f"threshold count {n} outside [1, {LEVELS - 2}]")


def _threshold_list(text: str) -> list[int]:
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def expand_inputs(paths: Sequence[str | Path]) -> list[Path]:
    out: list[Path] = []
    for p in map(Path, paths):
        if p.is_dir():
            out.extend(sorted(q for q in p.iterdir() if q.suffix.lower() in IMAGE_SUFFIXES))
        else:
            out.append(p)
    return out


def worker_count(cells: int) -> int:
    limit = os.cpu_count() or 1
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            limit = max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer %s=%r", THREADS_ENV, env)
    return max(1, min(limit, cells))


# --- run ------------------------------------------------------------------------


def _run_cell(path: Path, image: GrayImage, n: int, cfg: RunConfig) -> tuple[dict, list[str]]:
    hist = compute_histogram(image)
    start = time.perf_counter()
    result = run(hist, n, cfg.params, cfg.objective)
    segmented = apply_thresholds(image, result.best, hist)
    elapsed = time.perf_counter() - start
    t0 = time.perf_counter()
    metrics = evaluate(image, segmented, cfg.uiqi_windowed)
    report = run_report(path.name, result, metrics, elapsed, time.perf_counter() - t0)

    stem = f"{path.stem}_N{n}"
    save_image(segmented, cfg.out / f"{stem}_segmented.png")
    write_json(report, cfg.out / f"{stem}.json")
    write_threshold_sidecar(result.best.values, cfg.out / f"{stem}_thresholds.json")
    if cfg.figures:
        histogram_figure(hist, result.best.values, cfg.out / f"{stem}_hist.png", f"{path.name}, N={n}")
        convergence_figure(result.history, cfg.out / f"{stem}_convergence.png", f"{path.name}, N={n}")
    return report, metrics.csv_row(path.name, n, elapsed)


def _run_image(path: Path, cfg: RunConfig):
    image = load_image(path)
    write_histogram_csv(compute_histogram(image), cfg.out / f"{path.stem}_hist.csv")
    return [_run_cell(path, image, n, cfg) for n in cfg.n_thresholds]


def run_experiment(cfg: RunConfig) -> int:
    """Run every (image, N) cell; returns the process exit status."""
    cfg.out.mkdir(parents=True, exist_ok=True)
    if not cfg.inputs:
        log.error("no input images")
        return 2
    rows: dict[Path, list] = {}
    failed = 0
    workers = worker_count(len(cfg.inputs))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            futures = {p: pool.submit(_run_image, p, cfg) for p in cfg.inputs}
            items = [(p, f.result) for p, f in futures.items()]
    else:
        items = [(p, (lambda p=p: _run_image(p, cfg))) for p in cfg.inputs]
    for path, get in items:
        try:
            rows[path] = get()
        except (ImageError, ValueError, OSError) as exc:
            failed += 1
            log.error("%s: %s", path, exc)
            continue
        for report, _ in rows[path]:
            m = report["metrics"]
            psnr = "inf" if m["psnr"] is None else f"{m['psnr']:.4f}"
            log.info(
                "%s N=%d thresholds=%s psnr=%s ssim=%.4f",
                path.name, report["n_thresholds"], report["thresholds"], psnr, m["ssim"],
            )
    write_metrics_csv([row for p in cfg.inputs if p in rows for _, row in rows[p]], cfg.out / "metrics.csv")
    return 1 if failed else 0


# --- oracle -----------------------------------------------------------------------


def run_oracle(cfg: RunConfig, max_combos: int) -> int:
    cfg.out.mkdir(parents=True, exist_ok=True)
    failed = 0
    for path in cfg.inputs:
        try:
            image = load_image(path)
            hist = compute_histogram(image)
            for n in cfg.n_thresholds:
                start = time.perf_counter()
                best, fit = exhaustive_search(
                    hist, n, cfg.objective, cfg.params.weights,
                    lower=cfg.params.lower, upper=cfg.params.upper, max_combos=max_combos,
                )
                oracle_time = time.perf_counter() - start
                hho = run(hist, n, cfg.params, cfg.objective)
                metrics = evaluate(image, apply_thresholds(image, best, hist), cfg.uiqi_windowed)
                payload = {
                    "image": path.name,
                    "n_thresholds": n,
                    "objective": cfg.objective.value,
                    "oracle": {
                        "thresholds": list(best.pixel_values),
                        "thresholds_levels": list(best.values),
                        "fitness": fit,
                        "metrics": metrics.to_dict(),
                        "time_s": oracle_time,
                    },
                    "hho": {
                        "thresholds": list(hho.best.pixel_values),
                        "thresholds_levels": list(hho.best.values),
                        "fitness": hho.best_fitness,
                        "seed": hho.seed,
                        "gap": hho.best_fitness - fit,
                    },
                }
                write_json(payload, cfg.out / f"{path.stem}_N{n}_oracle.json")
                log.info(
                    "%s N=%d oracle=%s fitness=%.10g hho gap=%.3g",
                    path.name, n, list(best.pixel_values), fit, hho.best_fitness - fit,
                )
        except SearchBudgetExceeded as exc:
            failed += 1
            log.error("%s: %s (raise --max-combos to allow it)", path, exc)
        except (ImageError, ValueError, OSError) as exc:
            failed += 1
            log.error("%s: %s", path, exc)
    return 1 if failed else 0


# --- metrics / hist -----------------------------------------------------------------


def run_metrics(a: Path, b: Path, uiqi_windowed: bool, out: Path | None) -> int:
    try:
        report = evaluate(load_image(a), load_image(b), uiqi_windowed)
    except (ImageError, ValueError) as exc:
        log.error("%s", exc)
        return 1
    payload = {"reference": a.name, "test": b.name, "uiqi_windowed": uiqi_windowed, **report.to_dict()}
    text = dumps(payload)
    sys.stdout.write(text)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.json").write_text(text)
    return 0


def run_hist(path: Path, levels: list[int] | None, cfg: RunConfig) -> int:
    try:
        image = load_image(path)
    except ImageError as exc:
        log.error("%s", exc)
        return 1
    hist = compute_histogram(image)
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_histogram_csv(hist, cfg.out / f"{path.stem}_hist.csv")
    if levels is not None:
        try:
            th = ThresholdVector(tuple(levels))
        except ValueError as exc:
            log.error("%s", exc)
            return 1
        sets = {"given": th.values}
    else:
        sets = {f"N{n}": run(hist, n, cfg.params, cfg.objective).best.values for n in cfg.n_thresholds}
    for tag, values in sets.items():
        write_threshold_sidecar(values, cfg.out / f"{path.stem}_{tag}_thresholds.json")
        if cfg.figures:
            histogram_figure(hist, values, cfg.out / f"{path.stem}_{tag}_hist.png", path.name)
    return 0


# --- argument parsing -----------------------------------------------------------------


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--thresholds", type=_threshold_list, default=[2, 3, 4, 5],
                   help="comma-separated threshold counts (default 2,3,4,5)")
    p.add_argument("--pop", type=int, default=50, help="population size")
    p.add_argument("--iters", type=int, default=1000, help="maximum generations")
    p.add_argument("--alpha", type=float, default=0.35, help="cross-entropy weight")
    p.add_argument("--beta", type=float, default=0.65, help="entropy-function weight")
    p.add_argument("--chaos", choices=[k.value for k in ChaoticMapKind] + ["none"],
                   default="logistic", help="chaotic map for initialisation")
    p.add_argument("--altruism", type=int, default=4, help="altruistic hawks per generation")
    p.add_argument("--objective", choices=[k.value for k in ObjectiveKind], default="hybrid")
    p.add_argument("--seed", type=_seed, default=None, help="RNG seed (default: OS entropy)")
    p.add_argument("--levy-literal", action="store_true",
                   help="draw Lévy v1, v2 from U[0,1] instead of N(0,1)")
    p.add_argument("--patience", type=int, default=100,
                   help="stop after this many generations without improvement (0 disables)")
    p.add_argument("--uiqi-windowed", action="store_true", help="8x8 sliding-window UIQI")
    p.add_argument("--no-figures", action="store_true", help="skip PNG figures")
    p.add_argument("--out", type=Path, default=Path("hawkthresh-out"), help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hawkthresh", description="Multilevel image thresholding with Harris hawks optimisation."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-q", "--quiet", action="store_true", help="only log errors")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="segment images and write reports")
    p.add_argument("inputs", nargs="+", help="image files or directories")
    _add_run_flags(p)

    p = sub.add_parser("oracle", help="exhaustive optimum for small problems")
    p.add_argument("inputs", nargs="+", help="image files or directories")
    _add_run_flags(p)
    p.add_argument("--max-combos", type=int, default=DEFAULT_MAX_COMBOS,
                   help="refuse searches with more combinations than this")

    p = sub.add_parser("metrics", help="compare two images")
    p.add_argument("reference", type=Path)
    p.add_argument("test", type=Path)
    p.add_argument("--uiqi-windowed", action="store_true", help="8x8 sliding-window UIQI")
    p.add_argument("--out", type=Path, default=None, help="also write metrics.json here")

    p = sub.add_parser("hist", help="histogram CSV, threshold sidecar and figure")
    p.add_argument("image", type=Path)
    p.add_argument("--th", type=_threshold_list, default=None,
                   help="gray-level thresholds to mark (default: optimise)")
    _add_run_flags(p)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    params = HHOParams(
        pop_size=args.pop,
        max_iters=args.iters,
        altruism_count=args.altruism,
        weights=ObjectiveWeights(args.alpha, args.beta),
        chaos=None if args.chaos == "none" else ChaoticMapKind(args.chaos),
        seed=args.seed,
        levy_literal=args.levy_literal,
        patience=args.patience or None,
    )
    for n in args.thresholds:
        params.validate(n)
    inputs = expand_inputs(getattr(args, "inputs", []) or [args.image])
    return RunConfig(
        inputs=inputs,
        n_thresholds=list(args.thresholds),
        params=params,
        objective=ObjectiveKind(args.objective),
        out=args.out,
        uiqi_windowed=args.uiqi_windowed,
        figures=not args.no_figures,
    )


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.ERROR if args.quiet else logging.INFO,
        format="%(levelname)s %(message)s",
    )
    if args.command == "metrics":
        return run_metrics(args.reference, args.test, args.uiqi_windowed, args.out)
    try:
        cfg = config_from_args(args)
    except ValueError as exc:
        parser.error(str(exc))
    if args.command == "run":
        return run_experiment(cfg)
    if args.command == "oracle":
        return run_oracle(cfg, args.max_combos)
    return run_hist(args.image, args.th, cfg)


if __name__ == "__main__":
    sys.exit(main())
