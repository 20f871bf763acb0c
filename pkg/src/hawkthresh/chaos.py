"""Chaotic maps and chaotic population initialisation.

Constants are used exactly as published. Two of them behave unexpectedly:

* the Chebyshev map ``cos(arccos f)`` is the identity. It is kept as
  printed; ``chebyshev_order`` selects the usual ``cos(k arccos f)``.
* Singer with ``mu = 1.07`` sends values within ~3e-4 of 1 slightly below
  zero, so its output is clamped to ``[0, 1]``.

Sine, Singer, Sinusoidal, Tent and Logistic iterate on ``[0, 1]``;
Chebyshev, Iterative and Gauss on ``[-1, 1]`` (Gauss stays inside
``[-0.58, 0.42]``).
"""

from __future__ import annotations

import enum

import numpy as np

from .imagery import repair_batch, round_half_up


class ChaoticMapKind(str, enum.Enum):
    SINE = "sine"
    SINGER = "singer"
    SINUSOIDAL = "sinusoidal"
    CHEBYSHEV = "chebyshev"
    TENT = "tent"
    LOGISTIC = "logistic"
    ITERATIVE = "iterative"
    GAUSS = "gauss"


class ChaosDomainError(ValueError):
    pass


SYMMETRIC_MAPS = frozenset(
    {ChaoticMapKind.CHEBYSHEV, ChaoticMapKind.ITERATIVE, ChaoticMapKind.GAUSS}
)

# Points (normalised to [0, 1]) whose orbit collapses within a step or two.
_DEGENERATE = {
    ChaoticMapKind.LOGISTIC: (0.0, 0.25, 0.5, 0.75, 1.0),
    ChaoticMapKind.TENT: (0.0, 0.7, 10.0 / 13.0, 1.0),
    ChaoticMapKind.SINE: (0.0, 0.5, 1.0),
    ChaoticMapKind.SINGER: (0.0, 1.0),
    ChaoticMapKind.SINUSOIDAL: (0.0, 1.0),
    ChaoticMapKind.ITERATIVE: (0.5,),
}
DEGENERATE_TOL = 1e-6
DEGENERATE_NUDGE = 1e-3


def domain(kind: ChaoticMapKind) -> tuple[float, float]:
    return (-1.0, 1.0) if ChaoticMapKind(kind) in SYMMETRIC_MAPS else (0.0, 1.0)


def next_value(kind: ChaoticMapKind | str, f, chebyshev_order: int = 1):
    """One step of the chosen map. Accepts a float or an array of floats."""
    kind = ChaoticMapKind(kind)
    x = np.asarray(f, dtype=np.float64)
    lo, hi = domain(kind)
    if np.any(~np.isfinite(x)) or np.any(x < lo) or np.any(x > hi):
        raise ChaosDomainError(f"chaotic domain violation: {kind.value} needs [{lo}, {hi}]")

    if kind is ChaoticMapKind.SINE:
        k = 4.0
        out = k / 4.0 * np.sin(np.pi * x)
    elif kind is ChaoticMapKind.SINGER:
        mu = 1.07
        out = mu * (7.86 * x - 23.31 * x**2 + 28.75 * x**3 - 13.302875 * x**4)
        out = np.clip(out, 0.0, 1.0)
    elif kind is ChaoticMapKind.SINUSOIDAL:
        out = 2.3 * x**2 * np.sin(np.pi * x)
    elif kind is ChaoticMapKind.CHEBYSHEV:
        out = np.cos(chebyshev_order * np.arccos(x))
    elif kind is ChaoticMapKind.TENT:
        out = np.where(x < 0.7, x / 0.7, (10.0 / 3.0) * (1.0 - x))
        out = np.clip(out, 0.0, 1.0)
    elif kind is ChaoticMapKind.LOGISTIC:
        out = 4.0 * x * (1.0 - x)
    elif kind is ChaoticMapKind.ITERATIVE:
        if np.any(x == 0.0):
            raise ChaosDomainError("chaotic domain violation: iterative map undefined at 0")
        out = np.sin(0.7 * np.pi / x)
    elif kind is ChaoticMapKind.GAUSS:
        out = np.exp(-4.90 * x**2) - 0.58
    else:  # pragma: no cover
        raise ValueError(kind)

    if np.ndim(f) == 0:
        return float(out)
    return out


def iterate(kind, f0: float, steps: int, chebyshev_order: int = 1) -> np.ndarray:
    """The orbit ``f1 .. f_steps`` starting from ``f0``."""
    out = np.empty(steps)
    f = f0
    for s in range(steps):
        f = next_value(kind, f, chebyshev_order)
        out[s] = f
    return out


def nudge_degenerate(kind: ChaoticMapKind, u: np.ndarray) -> np.ndarray:
    """Move normalised values that sit on a collapsing orbit by +1e-3 (mod 1)."""
    points = _DEGENERATE.get(ChaoticMapKind(kind), ())
    u = np.array(u, dtype=np.float64)
    for p in points:
        hit = np.abs(u - p) <= DEGENERATE_TOL
        u[hit] = u[hit] + DEGENERATE_NUDGE
    return np.where(u > 1.0, u - 1.0, u)


def _to_native(kind, u):
    return 2.0 * u - 1.0 if ChaoticMapKind(kind) in SYMMETRIC_MAPS else u


def _to_unit(kind, f):
    return (f + 1.0) / 2.0 if ChaoticMapKind(kind) in SYMMETRIC_MAPS else f


def chaotic_positions(
    kind: ChaoticMapKind | str | None,
    m: int,
    n: int,
    lower: int,
    upper: int,
    rng: np.random.Generator,
    chebyshev_order: int = 1,
) -> np.ndarray:
    """Unrepaired integer positions: a random first hawk, then a chaotic chain.

    Dimension ``d`` of hawk ``v + 1`` is the map applied to dimension ``d``
    of hawk ``v``; the chain runs on the unrounded map values, and each value
    is mapped affinely onto ``[lower, upper]`` and rounded half up. With
    ``kind=None`` every hawk is drawn uniformly instead.
    """
    if m < 1 or n < 1:
        raise ValueError("population and dimension must be positive")
    span = upper - lower
    first = rng.integers(lower, upper + 1, size=n)
    if kind is None:
        rest = rng.integers(lower, upper + 1, size=(m - 1, n))
        return np.vstack([first[None, :], rest]).astype(np.int64)

    kind = ChaoticMapKind(kind)
    out = np.empty((m, n), dtype=np.int64)
    out[0] = first
    u = (first - lower) / span if span > 0 else np.zeros(n)
    u = nudge_degenerate(kind, u)
    f = _to_native(kind, u)
    for v in range(1, m):
        f = next_value(kind, f, chebyshev_order)
        u = nudge_degenerate(kind, _to_unit(kind, f))
        f = _to_native(kind, u)
        out[v] = [lower + round_half_up(x * span) for x in u]
    return out


def init_population(
    kind: ChaoticMapKind | str | None,
    m: int,
    n: int,
    lower: int,
    upper: int,
    rng: np.random.Generator | int,
    chebyshev_order: int = 1,
    feasible: tuple[int, int] | None = None,
) -> np.ndarray:
    """Chaotic (or uniform, ``kind=None``) start population, shape ``(m, n)``.

    Every row is repaired into distinct sorted integers inside ``feasible``
    (default ``(lower + 1, upper)``, the domain the exhaustive search uses).
    """
    if m < 2:
        raise ValueError("population needs at least 2 hawks")
    lo, hi = feasible if feasible is not None else (lower + 1, upper)
    if hi - lo + 1 < n:
        raise ValueError(
            f"infeasible: {n} distinct thresholds do not fit in [{lo}, {hi}]"
        )
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    raw = chaotic_positions(kind, m, n, lower, upper, rng, chebyshev_order)
    out, _ = repair_batch(raw, lo, hi)
    return out


def diversity(values, resolution: float = 1e-9) -> int:
    """Number of distinct values at the given resolution."""
    v = np.asarray(values, dtype=np.float64)
    return len(np.unique(np.round(v / resolution)))
