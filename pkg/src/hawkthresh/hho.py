"""Harris hawks optimisation for multilevel thresholds.

The optimiser follows the usual HHO structure: a decaying escaping energy
switches each hawk between exploration and four besiege modes, with Lévy
flight in the two rapid-dive modes. On top of that come chaotic
initialisation and an altruism step (Hamilton's rule ``r * B > C``) applied
to hawks that just performed a rapid dive.

Positions are integer threshold vectors. Every continuous update is rounded
half up, clamped and de-duplicated before it is evaluated (see
:func:`~hawkthresh.imagery.repair_thresholds`).

Within a generation all hawks read the same snapshot (prey, mean position,
random partner), so the per-hawk updates are computed as one batch. Random
numbers are drawn in a fixed order per generation: ``X0``, jump-strength
draws, escape likelihood ``t``, exploration coin ``r``, ``e1..e4``, random
partner index, dive vector ``R``, Lévy step; then altruism draws, only for
the hawks that take part.
"""

from __future__ import annotations

import dataclasses
import math
import secrets
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .chaos import ChaoticMapKind, init_population
from .imagery import LEVELS, Histogram, ThresholdVector, repair_batch, repair_thresholds
from .objectives import Objective, ObjectiveKind, ObjectiveWeights

EXPLORATION, SOFT, HARD, SOFT_DIVE, HARD_DIVE = range(5)
BRANCH_NAMES = ("exploration", "soft_besiege", "hard_besiege", "soft_dive", "hard_dive")


@dataclass(frozen=True)
class HHOParams:
    pop_size: int = 50
    max_iters: int = 1000
    lower: int = 1
    upper: int = LEVELS
    levy_beta: float = 1.5
    altruism_count: int = 4
    altruism_iters: int = 10
    weights: ObjectiveWeights = field(default_factory=ObjectiveWeights)
    chaos: ChaoticMapKind | None = ChaoticMapKind.LOGISTIC
    seed: int | None = None
    levy_literal: bool = False
    # early stop once the best fitness stalls for this many generations
    patience: int | None = 100
    tolerance: float = 1e-10
    chebyshev_order: int = 1

    def __post_init__(self):
        if self.chaos is not None:
            object.__setattr__(self, "chaos", ChaoticMapKind(self.chaos))

    def validate(self, n_thresholds: int) -> None:
        if self.pop_size < 2:
            raise ValueError("pop_size must be at least 2")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.lower < self.upper:
            raise ValueError("lower bound must be below upper bound")
        if self.lower < 1 or self.upper > LEVELS:
            raise ValueError(f"bounds must lie within gray levels 1..{LEVELS}")
        if not 0 <= self.altruism_count <= self.pop_size:
            raise ValueError("altruism_count must be within [0, pop_size]")
        if self.altruism_iters < 0:
            raise ValueError("altruism_iters must be non-negative")
        if not 0 < self.levy_beta <= 2:
            raise ValueError("levy_beta must be in (0, 2]")
        if self.seed is not None and not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if n_thresholds < 1:
            raise ValueError("at least one threshold is required")
        lo, hi = self.feasible
        if hi - lo + 1 < n_thresholds:
            raise ValueError(
                f"infeasible: {n_thresholds} distinct thresholds do not fit in [{lo}, {hi}]"
            )

    @property
    def feasible(self) -> tuple[int, int]:
        """Threshold domain ``[lower + 1, upper]``."""
        return self.lower + 1, self.upper

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["weights"] = {"alpha": self.weights.alpha, "beta": self.weights.beta}
        d["chaos"] = self.chaos.value if self.chaos is not None else "none"
        return d


@dataclass(frozen=True)
class Hawk:
    position: np.ndarray
    fitness: float

    def same_as(self, other: "Hawk") -> bool:
        return bool(np.array_equal(self.position, other.position)) and (
            self.fitness == other.fitness
        )


@dataclass
class Population:
    positions: np.ndarray
    fitness: np.ndarray
    generation: int = 0

    @property
    def best_index(self) -> int:
        # np.argmin keeps the lowest index among ties
        return int(np.argmin(self.fitness))

    @property
    def prey(self) -> np.ndarray:
        return self.positions[self.best_index]

    @property
    def mean(self) -> np.ndarray:
        return self.positions.mean(axis=0)

    def __len__(self) -> int:
        return self.positions.shape[0]

    def hawk(self, j: int) -> Hawk:
        return Hawk(self.positions[j].copy(), float(self.fitness[j]))


@dataclass
class RunResult:
    best: ThresholdVector
    best_fitness: float
    history: list[float]
    seed: int
    objective: ObjectiveKind
    n_thresholds: int
    params: HHOParams
    generations: int
    stopped_early: bool
    evaluations: int
    branch_counts: dict[str, int]
    altruism_attempts: int
    altruism_accepted: int
    wall_time: float

    def to_dict(self) -> dict:
        return {
            "thresholds": list(self.best.pixel_values),
            "thresholds_levels": list(self.best.values),
            "fitness": self.best_fitness,
            "objective": self.objective.value,
            "n_thresholds": self.n_thresholds,
            "seed": self.seed,
            "generations": self.generations,
            "stopped_early": self.stopped_early,
            "evaluations": self.evaluations,
            "branch_counts": dict(self.branch_counts),
            "altruism": {
                "attempts": self.altruism_attempts,
                "accepted": self.altruism_accepted,
            },
            "history": list(self.history),
            "params": self.params.to_dict(),
            "time_s": self.wall_time,
        }


# --- elementary update rules ------------------------------------------------


def escaping_energy(x0, g: int, g_max: int):
    """``X = 2 X0 (1 - g / g_max)``."""
    if g > g_max:
        raise ValueError("generation exceeds g_max")
    return 2.0 * x0 * (1.0 - g / g_max)


def jump_strength(e5):
    """``JS = 2 (1 - e5)`` for a uniform draw ``e5``."""
    return 2.0 * (1.0 - e5)


def dispatch(x, t):
    """Branch code per hawk from escaping energy ``x`` and escape chance ``t``."""
    a = np.abs(np.asarray(x, dtype=np.float64))
    t = np.asarray(t, dtype=np.float64)
    return np.select(
        [a >= 1.0, (t >= 0.5) & (a >= 0.5), t >= 0.5, a >= 0.5],
        [EXPLORATION, SOFT, HARD, SOFT_DIVE],
        default=HARD_DIVE,
    )


def explore(position, partner, prey, mean, r, e1, e2, e3, e4, lower, upper):
    """Exploration move (continuous, before repair)."""
    position = np.asarray(position, dtype=np.float64)
    r, e1, e2, e3, e4 = (np.asarray(v, dtype=np.float64) for v in (r, e1, e2, e3, e4))
    around_partner = partner - e1 * np.abs(partner - 2.0 * e2 * position)
    around_prey = (prey - mean) - e3 * (lower + e4 * (upper - lower))
    return np.where(r >= 0.5, around_partner, around_prey)


def soft_besiege(position, prey, x, js):
    """``(prey - P) - X |JS prey - P|``."""
    position = np.asarray(position, dtype=np.float64)
    return (prey - position) - x * np.abs(js * prey - position)


def hard_besiege(position, prey, x):
    """``prey - X |prey - P|``."""
    position = np.asarray(position, dtype=np.float64)
    return prey - x * np.abs(prey - position)


def dive_target(prey, reference, x, js):
    """``K = prey - X |JS prey - reference|``.

    The reference is the hawk itself for the soft dive and the population
    mean for the hard dive.
    """
    return prey - x * np.abs(js * prey - np.asarray(reference, dtype=np.float64))


def levy_sigma(beta: float) -> float:
    num = math.gamma(1 + beta) * math.sin(math.pi * beta / 2)
    den = math.gamma((1 + beta) / 2) * beta * 2 ** ((beta - 1) / 2)
    return (num / den) ** (1 / beta)


def levy_step(shape, beta: float, rng: np.random.Generator, literal: bool = False):
    """``0.01 * v1 * sigma / |v2|^(1/beta)`` per component.

    Mantegna sampling (``v1, v2 ~ N(0, 1)``) by default; ``literal=True``
    draws both from ``U[0, 1)`` instead. Zero ``v2`` draws are redrawn.
    """
    sigma = levy_sigma(beta)
    draw = rng.random if literal else rng.standard_normal
    v1 = draw(shape)
    v2 = draw(shape)
    zero = v2 == 0
    while np.any(zero):
        v2[zero] = draw(int(np.count_nonzero(zero)))
        zero = v2 == 0
    return 0.01 * v1 * sigma / np.abs(v2) ** (1.0 / beta)


# --- per-hawk operations (public, repaired) ---------------------------------


def _repaired(candidate, lower, upper):
    return repair_thresholds(candidate, lower + 1, upper)


def exploration_update(position, population: Population, rng, lower=1, upper=LEVELS):
    """Draw ``r, e1..e4`` and a partner, then return the repaired move.

    Returns ``None`` if the move cannot be repaired (the caller keeps the
    old position).
    """
    r, e1, e2, e3, e4 = rng.random(5)
    partner = population.positions[rng.integers(len(population))]
    cand = explore(position, partner, population.prey, population.mean, r, e1, e2, e3, e4, lower, upper)
    return _repaired(cand, lower, upper)


def soft_besiege_update(position, prey, x, js, lower=1, upper=LEVELS):
    return _repaired(soft_besiege(position, prey, x, js), lower, upper)


def hard_besiege_update(position, prey, x, lower=1, upper=LEVELS):
    return _repaired(hard_besiege(position, prey, x), lower, upper)


@dataclass
class DiveOutcome:
    """Result of one rapid dive for a batch of hawks."""

    positions: np.ndarray
    fitness: np.ndarray
    derived: np.ndarray  # candidate the altruism step treats as beneficiary
    derived_fitness: np.ndarray
    took_k: np.ndarray
    took_l: np.ndarray
    l_evaluated: np.ndarray


def _dive_batch(positions, fitness, k, r, levy, objective, lower, upper) -> DiveOutcome:
    feas_lo = lower + 1
    kr, _ = repair_batch(k, feas_lo, upper)
    fk = objective.batch(kr)
    took_k = fk < fitness
    new_pos = positions.copy()
    new_fit = fitness.copy()
    new_pos[took_k] = kr[took_k]
    new_fit[took_k] = fk[took_k]

    derived = kr.copy()
    derived_fit = fk.copy()
    need_l = ~took_k
    took_l = np.zeros_like(took_k)
    if np.any(need_l):
        l_cont = k[need_l] + r[need_l] * levy[need_l]
        lr, _ = repair_batch(l_cont, feas_lo, upper)
        fl = objective.batch(lr)
        better = fl < fitness[need_l]
        idx = np.flatnonzero(need_l)
        took_l[idx[better]] = True
        new_pos[idx[better]] = lr[better]
        new_fit[idx[better]] = fl[better]
        derived[idx] = lr
        derived_fit[idx] = fl
    return DiveOutcome(new_pos, new_fit, derived, derived_fit, took_k, took_l, need_l)


def _single_dive(position, fitness, k, objective, rng, beta, lower, upper, literal):
    n = np.asarray(position).shape[-1]
    r = rng.random((1, n))
    levy = levy_step((1, n), beta, rng, literal)
    out = _dive_batch(
        np.atleast_2d(np.asarray(position, dtype=np.int64)),
        np.array([fitness], dtype=np.float64),
        np.atleast_2d(k),
        r,
        levy,
        objective,
        lower,
        upper,
    )
    return out


def soft_besiege_dives(
    hawk: Hawk, prey, x, js, objective, rng, beta=1.5, lower=1, upper=LEVELS, literal=False
) -> DiveOutcome:
    """Soft besiege with rapid dives for one hawk.

    ``K`` is taken on strict improvement; otherwise ``L = K + R * levy`` is
    tried; otherwise the hawk keeps its position.
    """
    k = dive_target(prey, hawk.position, x, js)
    return _single_dive(hawk.position, hawk.fitness, k, objective, rng, beta, lower, upper, literal)


def hard_besiege_dives(
    hawk: Hawk, prey, mean, x, js, objective, rng, beta=1.5, lower=1, upper=LEVELS, literal=False
) -> DiveOutcome:
    k = dive_target(prey, mean, x, js)
    return _single_dive(hawk.position, hawk.fitness, k, objective, rng, beta, lower, upper, literal)


# --- altruism ----------------------------------------------------------------


@dataclass
class AltruismOutcome:
    altruist: Hawk
    beneficiary: Hawk
    accepted: bool
    attempts: int


def _hamilton(benefit, cost, relatedness):
    return (benefit > 0) & (relatedness * benefit > cost)


def exchange_once(
    altruist: Hawk, beneficiary: Hawk, delta, relatedness: float, objective, lower=1, upper=LEVELS
) -> tuple[Hawk, Hawk, bool]:
    """Move the altruist by ``-delta`` and the beneficiary by ``+delta``.

    Accepted iff ``relatedness * B > C`` and ``B > 0`` where ``B`` is the
    beneficiary's fitness decrease and ``C`` the altruist's fitness
    increase. On rejection the original hawks are returned untouched.
    """
    delta = np.asarray(delta, dtype=np.int64)
    a_new = _repaired(altruist.position - delta, lower, upper)
    b_new = _repaired(beneficiary.position + delta, lower, upper)
    if a_new is None or b_new is None:
        return altruist, beneficiary, False
    fa, fb = objective.batch(np.vstack([a_new, b_new]))
    if _hamilton(beneficiary.fitness - fb, fa - altruist.fitness, relatedness):
        return Hawk(a_new, float(fa)), Hawk(b_new, float(fb)), True
    return altruist, beneficiary, False


def altruism_step_limit(lower: int, upper: int) -> int:
    return max(1, (upper - lower) // 10)


def altruism_draws(n: int, attempts: int, rng: np.random.Generator, lower=1, upper=LEVELS):
    """Signed integer offsets ``(attempts, n)`` and relatedness values ``(attempts,)``.

    Magnitudes are uniform in ``[1, (upper - lower) // 10]`` with a random
    sign per component.
    """
    step = altruism_step_limit(lower, upper)
    magnitude = rng.integers(1, step + 1, size=(attempts, n))
    sign = rng.integers(0, 2, size=(attempts, n)) * 2 - 1
    return sign * magnitude, rng.random(attempts)


def altruism_exchange(
    altruist: Hawk,
    beneficiary: Hawk,
    objective,
    attempts: int,
    rng: np.random.Generator,
    lower: int = 1,
    upper: int = LEVELS,
) -> AltruismOutcome:
    """Up to ``attempts`` paired perturbations; the first accepted one wins.

    All attempts are drawn and evaluated as one batch, which gives the same
    outcome as trying them in turn and stopping at the first acceptance.
    """
    if attempts <= 0:
        return AltruismOutcome(altruist, beneficiary, False, 0)
    n = altruist.position.shape[0]
    delta, relatedness = altruism_draws(n, attempts, rng, lower, upper)
    a_rows, _ = repair_batch(altruist.position - delta, lower + 1, upper)
    b_rows, _ = repair_batch(beneficiary.position + delta, lower + 1, upper)
    fit = objective.batch(np.vstack([a_rows, b_rows]))
    fa, fb = fit[:attempts], fit[attempts:]
    ok = _hamilton(beneficiary.fitness - fb, fa - altruist.fitness, relatedness)
    if not np.any(ok):
        return AltruismOutcome(altruist, beneficiary, False, attempts)
    i = int(np.argmax(ok))
    return AltruismOutcome(
        Hawk(a_rows[i], float(fa[i])), Hawk(b_rows[i], float(fb[i])), True, i + 1
    )


# --- main loop ---------------------------------------------------------------


def resolve_seed(seed: int | None) -> int:
    return secrets.randbits(64) if seed is None else int(seed)


def run(
    hist: Histogram,
    n_thresholds: int,
    params: HHOParams | None = None,
    objective: ObjectiveKind | str = ObjectiveKind.HYBRID,
    callback: Callable[[int, Population], None] | None = None,
) -> RunResult:
    """Optimise ``n_thresholds`` thresholds for ``hist``.

    ``callback(g, population)`` is called after every generation, with
    ``g = 0`` for the initial population.
    """
    params = params or HHOParams()
    params.validate(n_thresholds)
    objective = ObjectiveKind(objective)
    start = time.perf_counter()

    seed = resolve_seed(params.seed)
    rng = np.random.Generator(np.random.PCG64(seed))
    fit_fn = Objective(hist, objective, params.weights)
    lower, upper = params.lower, params.upper
    m, n, g_max = params.pop_size, n_thresholds, params.max_iters

    positions = init_population(
        params.chaos, m, n, lower, upper, rng, params.chebyshev_order, params.feasible
    )
    pop = Population(positions, fit_fn.batch(positions), 0)
    best_idx = pop.best_index
    best_pos = pop.positions[best_idx].copy()
    best_fit = float(pop.fitness[best_idx])
    history: list[float] = []
    counts = dict.fromkeys(BRANCH_NAMES, 0)
    alt_attempts = alt_accepted = 0
    stall = 0
    stopped_early = False
    if callback:
        callback(0, pop)

    g = 0
    for g in range(1, g_max + 1):
        pos, fit = pop.positions, pop.fitness
        prey = pos[pop.best_index].astype(np.float64)
        mean = pop.mean

        x0 = rng.uniform(-1.0, 1.0, m)
        js = jump_strength(rng.random(m))
        t = rng.random(m)
        coin = rng.random(m)
        e = rng.random((m, 4))
        partner = rng.integers(0, m, m)
        r_dive = rng.random((m, n))
        levy = levy_step((m, n), params.levy_beta, rng, params.levy_literal)

        x = escaping_energy(x0, g, g_max)
        branch = dispatch(x, t)
        xc, jc = x[:, None], js[:, None]

        new_pos = pos.copy()
        new_fit = fit.copy()
        cand = np.empty((m, n))
        simple = branch <= HARD
        sel = branch == EXPLORATION
        cand[sel] = explore(
            pos[sel], pos[partner[sel]], prey, mean,
            coin[sel, None], e[sel, 0:1], e[sel, 1:2], e[sel, 2:3], e[sel, 3:4],
            lower, upper,
        )
        sel = branch == SOFT
        cand[sel] = soft_besiege(pos[sel], prey, xc[sel], jc[sel])
        sel = branch == HARD
        cand[sel] = hard_besiege(pos[sel], prey, xc[sel])
        if np.any(simple):
            rows, ok = repair_batch(cand[simple], lower + 1, upper)
            idx = np.flatnonzero(simple)[ok]
            new_pos[idx] = rows[ok]
            new_fit[idx] = fit_fn.batch(rows[ok])

        dive = branch >= SOFT_DIVE
        if np.any(dive):
            soft = branch[dive] == SOFT_DIVE
            ref = np.where(soft[:, None], pos[dive], mean[None, :])
            k = dive_target(prey, ref, xc[dive], jc[dive])
            out = _dive_batch(pos[dive], fit[dive], k, r_dive[dive], levy[dive], fit_fn, lower, upper)
            new_pos[dive] = out.positions
            new_fit[dive] = out.fitness

            dive_idx = np.flatnonzero(dive)
            for slot, j in enumerate(dive_idx[: params.altruism_count]):
                if params.altruism_iters == 0:
                    break
                res = altruism_exchange(
                    Hawk(pos[j].copy(), float(fit[j])),
                    Hawk(out.derived[slot].copy(), float(out.derived_fitness[slot])),
                    fit_fn,
                    params.altruism_iters,
                    rng,
                    lower,
                    upper,
                )
                alt_attempts += res.attempts
                if res.accepted:
                    alt_accepted += 1
                    for h in (res.altruist, res.beneficiary):
                        if h.fitness < new_fit[j]:
                            new_pos[j] = h.position
                            new_fit[j] = h.fitness

        for b in range(5):
            counts[BRANCH_NAMES[b]] += int(np.count_nonzero(branch == b))

        pop = Population(new_pos, new_fit, g)
        idx = pop.best_index
        if pop.fitness[idx] < best_fit:
            improved = best_fit - pop.fitness[idx] > params.tolerance
            best_fit = float(pop.fitness[idx])
            best_pos = pop.positions[idx].copy()
            stall = 0 if improved else stall + 1
        else:
            stall += 1
        history.append(best_fit)
        if callback:
            callback(g, pop)
        if params.patience is not None and stall >= params.patience:
            stopped_early = g < g_max
            break

    return RunResult(
        best=ThresholdVector(tuple(int(v) for v in best_pos), lower, upper),
        best_fitness=best_fit,
        history=history,
        seed=seed,
        objective=objective,
        n_thresholds=n,
        params=dataclasses.replace(params, seed=seed),
        generations=g,
        stopped_early=stopped_early,
        evaluations=fit_fn.evaluations,
        branch_counts=counts,
        altruism_attempts=alt_attempts,
        altruism_accepted=alt_accepted,
        wall_time=time.perf_counter() - start,
    )
