"""Longevity of reference frames and its scaling with frame size.

Longevity is the largest number of uses ``n`` after which the error
probability ``1 - P(n)`` is still within ``epsilon``.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .directional import (
    _check_two_j,
    decay_factor,
    optimal_directional_state,
)
from .numerics import LineFit, fit_line
from .phase import Coherent, OptimalBounded, simulate_phase

__all__ = [
    "Directional",
    "LongevityResult",
    "ScalingResult",
    "decay_crossing_directional",
    "family_kind",
    "longevity_analytic_directional",
    "longevity_simulated",
    "mrfm_estimate",
    "scaling_experiment",
    "size_metric",
    "success_at",
]

SIMULATED = "simulated"
ANALYTIC_DIRECTIONAL = "analytic_directional"
DECAY_FORMULA = "decay_formula"

DEFAULT_MAX_STEPS = 10**7
DEFAULT_EPSILONS = (0.05, 0.1, 0.2, 0.3)


@dataclass(frozen=True)
class Directional:
    two_j: int

    def __post_init__(self):
        _check_two_j(self.two_j)

    @property
    def size_metric(self) -> float:
        return self.two_j / 2


def size_metric(kind) -> float:
    if isinstance(kind, Directional):
        return kind.size_metric
    return kind.mean_number


@dataclass(frozen=True)
class LongevityResult:
    rf_kind: object
    size_metric: float
    epsilon: float
    n_uses: int
    method: str
    censored: bool = False
    initial_error_exceeds: bool = False

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.n_uses < 0:
            raise ValueError("n_uses must be non-negative")


def _check_epsilon(epsilon: float) -> None:
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")


def _directional_errors(two_j: int, max_steps: int):
    """Yield ``1 - P(n)`` for n = 0, 1, ... by iterating the diagonal map."""
    d = two_j + 1
    j = two_j / 2
    x = np.arange(d, dtype=float)
    stay = (2 * j * j + 2 * j + 1 + 2 * (j - x) ** 2) / (d * d)
    hop = (x[1:] * (d - x[1:])) / (d * d)
    weight = (x + 0.5) / d
    p = optimal_directional_state(two_j).populations.copy()
    yield float(weight @ p)
    for _ in range(max_steps):
        new = stay * p
        new[1:] += hop * p[:-1]
        new[:-1] += hop * p[1:]
        p = new
        yield float(weight @ p)


def _crossing(errors, epsilon: float, max_steps: int) -> tuple[int, bool, bool]:
    last_ok = -1
    for n, err in enumerate(errors):
        if err > epsilon:
            break
        last_ok = n
    else:
        return max(last_ok, 0), True, False
    if last_ok < 0:
        return 0, False, True
    return last_ok, False, False


def longevity_simulated(kind, epsilon: float, max_steps: int = DEFAULT_MAX_STEPS) -> LongevityResult:
    """Largest ``n <= max_steps`` with ``1 - P(n) <= epsilon``, by stepping the update map.

    ``kind`` is :class:`Directional`, :class:`OptimalBounded` or
    :class:`Coherent`; the frame starts in the optimal (or the given coherent)
    state. ``censored`` is set when no crossing happens within ``max_steps``;
    ``initial_error_exceeds`` when even the unused frame is worse than
    ``epsilon`` (the longevity is then 0).
    """
    _check_epsilon(epsilon)
    if isinstance(kind, Directional):
        errors = _directional_errors(kind.two_j, max_steps)
    elif isinstance(kind, (OptimalBounded, Coherent)):
        probs = simulate_phase(kind.prepare(), max_steps, until_error=epsilon)
        errors = iter(1.0 - probs)
    else:
        raise TypeError(f"unknown frame kind {kind!r}")
    n_uses, censored, initial_bad = _crossing(errors, epsilon, max_steps)
    return LongevityResult(kind, size_metric(kind), epsilon, n_uses, SIMULATED, censored, initial_bad)


def decay_crossing_directional(two_j: int, epsilon: float, max_steps: int = DEFAULT_MAX_STEPS) -> LongevityResult:
    """Directional longevity read off the exact exponential decay of ``P(n)``.

    Same semantics as :func:`longevity_simulated` but O(1): solves
    ``j/(2j+1) r^n >= 1/2 - epsilon`` and nudges the integer to the boundary.
    """
    _check_epsilon(epsilon)
    kind = Directional(two_j)
    d = two_j + 1
    log_r = math.log(decay_factor(two_j))
    # error written as 1/(2d) + j/d (1 - r^n) so n = 0 matches the stepped value bit for bit
    ok = lambda n: 0.5 / d - (two_j / 2) / d * math.expm1(n * log_r) <= epsilon  # noqa: E731
    if not ok(0):
        return LongevityResult(kind, kind.size_metric, epsilon, 0, DECAY_FORMULA, False, True)
    j = two_j / 2
    target = (0.5 - epsilon) * (two_j + 1) / j
    if target <= 0:
        return LongevityResult(kind, kind.size_metric, epsilon, max_steps, DECAY_FORMULA, True)
    n = int(math.floor(math.log(target) / log_r))
    n = max(n, 0)
    while n > 0 and not ok(n):
        n -= 1
    while ok(n + 1):
        n += 1
    if n >= max_steps:
        return LongevityResult(kind, kind.size_metric, epsilon, max_steps, DECAY_FORMULA, True)
    return LongevityResult(kind, kind.size_metric, epsilon, n, DECAY_FORMULA)


def longevity_analytic_directional(two_j: int, epsilon: float) -> LongevityResult:
    """Linearised estimate ``epsilon * j**2`` (rounded to the nearest integer)."""
    _check_epsilon(epsilon)
    kind = Directional(two_j)
    j = two_j / 2
    return LongevityResult(kind, j, epsilon, int(math.floor(epsilon * j * j + 0.5)), ANALYTIC_DIRECTIONAL)


def mrfm_estimate(spin_count: int, epsilon: float, *, convention: str = "j=N") -> LongevityResult:
    """Longevity of a magnet modelled as ``spin_count`` parallel spin-1/2s.

    ``convention="j=N"`` (default) sets the frame spin to ``N``, which is what
    reproduces 10**8 uses for 10**6 spins at ``epsilon=1e-4``;
    ``"j=N/2"`` uses the total spin of N spin-1/2 particles.
    """
    if spin_count < 1:
        raise ValueError("spin_count must be at least 1")
    if convention == "j=N":
        two_j = 2 * spin_count
    elif convention == "j=N/2":
        two_j = spin_count
    else:
        raise ValueError(f"unknown convention {convention!r}")
    return longevity_analytic_directional(two_j, epsilon)


@dataclass(frozen=True)
class ScalingResult:
    epsilon: float
    sizes: np.ndarray
    longevities: np.ndarray
    loglog_fit: LineFit | None
    excluded_sizes: tuple = field(default=())


FAMILIES = ("direction", "phase-optimal", "phase-coherent")


def family_kind(family: str, size: float):
    """Frame of the given family whose size metric is ``size``.

    Directional size is ``j``; phase sizes are the mean photon number
    (``N = 2 * size`` for the bounded state, ``alpha = sqrt(size)``).
    """
    if family == "direction":
        two_j = 2 * size
        if two_j != int(two_j):
            raise ValueError(f"j must be a multiple of 1/2, got {size}")
        return Directional(int(two_j))
    if family == "phase-optimal":
        N = 2 * size
        if N != int(N):
            raise ValueError(f"mean number must be a multiple of 1/2, got {size}")
        return OptimalBounded(int(N))
    if family == "phase-coherent":
        return Coherent(math.sqrt(size))
    raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")


def _run_point(args) -> LongevityResult:
    family, size, epsilon, max_steps = args
    return longevity_simulated(family_kind(family, size), epsilon, max_steps)


def scaling_experiment(
    family: str,
    epsilons,
    sizes,
    *,
    max_steps: int = DEFAULT_MAX_STEPS,
    workers: int = 1,
) -> list[ScalingResult]:
    """Simulated longevity over a (epsilon, size) grid with a log-log fit per epsilon.

    Censored points and zero longevities cannot enter a log fit; they are
    left out with a warning and listed in ``excluded_sizes``.
    """
    sizes = np.asarray(sorted(float(s) for s in sizes))
    if np.any(np.diff(sizes) <= 0):
        raise ValueError("sizes must be distinct")
    epsilons = sorted(float(e) for e in epsilons)
    grid = [(family, s, e, max_steps) for e in epsilons for s in sizes]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_point, grid))
    else:
        results = [_run_point(g) for g in grid]

    out = []
    for i, eps in enumerate(epsilons):
        chunk = results[i * len(sizes) : (i + 1) * len(sizes)]
        longevities = np.array([r.n_uses for r in chunk], dtype=np.int64)
        usable = np.array([not r.censored and r.n_uses > 0 for r in chunk])
        excluded = tuple(float(s) for s in sizes[~usable])
        if excluded:
            warnings.warn(
                f"epsilon={eps}: sizes {excluded} censored or zero, left out of the fit",
                stacklevel=2,
            )
        fit = None
        if usable.sum() >= 2:
            fit = fit_line(np.log(sizes[usable]), np.log(longevities[usable]))
        out.append(ScalingResult(eps, sizes.copy(), longevities, fit, excluded))
    return out


def success_at(kind, n: int) -> float:
    """Success probability of the frame after ``n`` uses."""
    if isinstance(kind, Directional):
        errors = _directional_errors(kind.two_j, n)
        for err in errors:
            pass
        return 1.0 - err
    return float(simulate_phase(kind.prepare(), n)[-1])

