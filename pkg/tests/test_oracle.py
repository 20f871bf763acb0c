import itertools
import math

import numpy as np
import pytest

from conftest import sparse_histogram, two_spike
from hawkthresh.hho import HHOParams, run
from hawkthresh.imagery import Histogram
from hawkthresh.objectives import Objective, ObjectiveKind
from hawkthresh.oracle import (
    PLAIN_HHO,
    AblationFlags,
    SearchBudgetExceeded,
    baseline_run,
    combination_count,
    exhaustive_search,
)


def test_two_spike_plateau_smallest():
    hist = two_spike(49, 199)  # gray levels 50 and 200
    th, fit = exhaustive_search(hist, 1, ObjectiveKind.CROSS_ENTROPY)
    assert th.values == (51,)
    f = Objective(hist, ObjectiveKind.CROSS_ENTROPY)
    plateau = f.batch(np.arange(51, 201)[:, None])
    assert np.all(plateau == fit)
    assert f.batch(np.array([[50], [201]])).min() > fit


def test_forced_solution_separates_every_level():
    hist = Histogram.from_counts({10: 4, 60: 9, 130: 2, 250: 7})
    th, fit = exhaustive_search(hist, 3, ObjectiveKind.CROSS_ENTROPY)
    assert abs(fit) < 1e-9
    assert th.values == (12, 62, 132)


@pytest.mark.parametrize("kind", list(ObjectiveKind))
def test_random_32_bin_double_loop(kind):
    hist = sparse_histogram(31)
    f = Objective(hist, kind)
    best, best_vec = math.inf, None
    for a in range(2, 257):
        for b in range(a + 1, 257):
            v = f([a, b])
            if v < best:
                best, best_vec = v, (a, b)
    th, fit = exhaustive_search(hist, 2, kind)
    assert fit == best and th.values == best_vec


def test_enumeration_completeness():
    hist = sparse_histogram(1)
    f = Objective(hist)
    exhaustive_search(hist, 2, f)
    assert f.evaluations == combination_count(2) == math.comb(255, 2)
    f = Objective(hist)
    exhaustive_search(hist, 2, f, lower=10, upper=60)
    assert f.evaluations == math.comb(50, 2)


def test_budget_guard():
    with pytest.raises(SearchBudgetExceeded) as err:
        exhaustive_search(sparse_histogram(0), 4)
    assert err.value.count == math.comb(255, 4)
    assert str(math.comb(255, 4)) in str(err.value)
    with pytest.raises(SearchBudgetExceeded):
        exhaustive_search(sparse_histogram(0), 2, max_combos=100)


def test_infeasible():
    with pytest.raises(ValueError, match="infeasible"):
        exhaustive_search(sparse_histogram(0), 3, lower=1, upper=3)


@pytest.mark.parametrize("seed", range(6))
def test_oracle_dominance(seed):
    hist = sparse_histogram(100 + seed)
    _, fit = exhaustive_search(hist, 2)
    res = run(hist, 2, HHOParams(seed=seed, max_iters=100))
    assert fit <= res.best_fitness


def test_ablation_flags_map_to_params():
    p = PLAIN_HHO.apply(HHOParams(seed=1))
    assert p.chaos is None and p.altruism_count == 0
    p = AblationFlags(objective="ce").apply(HHOParams())
    assert p.chaos is not None and p.altruism_count == 4


def test_baseline_run_uses_objective():
    hist = sparse_histogram(4)
    res = baseline_run(hist, 2, AblationFlags(objective="mse"), HHOParams(seed=2, max_iters=50))
    assert res.objective is ObjectiveKind.MSE
    assert res.altruism_attempts > 0
    plain = baseline_run(hist, 2, PLAIN_HHO, HHOParams(seed=2, max_iters=50))
    assert plain.altruism_attempts == 0 and plain.params.chaos is None
