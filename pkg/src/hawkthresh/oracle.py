"""Ground truth for small instances and ablation baselines.

:func:`exhaustive_search` enumerates every threshold vector in the same
domain the optimiser searches (``[lower + 1, upper]``), so its minimum is the
true optimum the optimiser can reach. :func:`baseline_run` switches the
chaotic initialisation and the altruism step on or off to reproduce plain
HHO and the objective ablations.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .hho import HHOParams, RunResult, run
from .imagery import LEVELS, Histogram, ThresholdVector
from .objectives import Objective, ObjectiveKind, ObjectiveWeights

DEFAULT_MAX_COMBOS = 10_000_000
_CHUNK = 65_536


class SearchBudgetExceeded(ValueError):
    def __init__(self, count: int, budget: int):
        super().__init__(
            f"combinatorial budget exceeded: {count} combinations > {budget}"
        )
        self.count = count
        self.budget = budget


def combination_count(n_thresholds: int, lower: int = 1, upper: int = LEVELS) -> int:
    return math.comb(upper - lower, n_thresholds)


def _combinations(n: int, lo: int, hi: int):
    it = itertools.combinations(range(lo, hi + 1), n)
    while True:
        block = list(itertools.islice(it, _CHUNK))
        if not block:
            return
        yield np.array(block, dtype=np.int64)


def exhaustive_search(
    hist: Histogram,
    n_thresholds: int,
    objective: ObjectiveKind | str | Objective = ObjectiveKind.HYBRID,
    weights: ObjectiveWeights | None = None,
    *,
    lower: int = 1,
    upper: int = LEVELS,
    max_combos: int = DEFAULT_MAX_COMBOS,
) -> tuple[ThresholdVector, float]:
    """Global minimum over all strictly increasing vectors in ``[lower + 1, upper]``.

    Combinations are visited in lexicographic order and only a strictly
    smaller fitness replaces the incumbent, so ties resolve to the
    lexicographically smallest vector. ``objective`` may be a ready
    :class:`~hawkthresh.objectives.Objective`, whose ``evaluations`` counter
    then reports how many candidates were scored.

    Raises:
        SearchBudgetExceeded: if ``C(upper - lower, N)`` exceeds ``max_combos``.
        ValueError: if ``N`` thresholds do not fit.
    """
    if n_thresholds < 1:
        raise ValueError("at least one threshold is required")
    if upper - lower < n_thresholds:
        raise ValueError(
            f"infeasible: {n_thresholds} distinct thresholds do not fit in "
            f"[{lower + 1}, {upper}]"
        )
    count = combination_count(n_thresholds, lower, upper)
    if count > max_combos:
        raise SearchBudgetExceeded(count, max_combos)

    fit = objective if isinstance(objective, Objective) else Objective(hist, objective, weights)
    best_val = math.inf
    best_vec = None
    for block in _combinations(n_thresholds, lower + 1, upper):
        vals = fit.batch(block)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val = float(vals[i])
            best_vec = block[i]
    return ThresholdVector(tuple(int(v) for v in best_vec), lower, upper), best_val


@dataclass(frozen=True)
class AblationFlags:
    chaos_enabled: bool = True
    altruism_enabled: bool = True
    objective: ObjectiveKind = ObjectiveKind.HYBRID

    def __post_init__(self):
        object.__setattr__(self, "objective", ObjectiveKind(self.objective))

    def apply(self, params: HHOParams) -> HHOParams:
        changes = {}
        if not self.chaos_enabled:
            changes["chaos"] = None
        if not self.altruism_enabled:
            changes["altruism_count"] = 0
        return dataclasses.replace(params, **changes)


PLAIN_HHO = AblationFlags(chaos_enabled=False, altruism_enabled=False)


def baseline_run(
    hist: Histogram,
    n_thresholds: int,
    flags: AblationFlags = PLAIN_HHO,
    params: HHOParams | None = None,
) -> RunResult:
    """Run the optimiser with features toggled by ``flags``.

    Chaos off means a uniform random start population; altruism off means
    no exchanges. Everything else, including the seed, is taken from
    ``params``.
    """
    params = flags.apply(params or HHOParams())
    return run(hist, n_thresholds, params, flags.objective)
