"""Multi-start, bound-constrained Hooke & Jeeves pattern search.

Direct search without derivatives: exploratory moves along each coordinate
followed by pattern moves repeating the last successful displacement, with
geometric step shrinking.  Objectives may return ``+inf`` to reject a point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import RejectedStartError, UnfittableDataError


@dataclass
class SearchConfig:
    """Settings for a bound-constrained pattern search.

    ``initial_step`` and ``min_step`` are fractions of the per-coordinate box
    width, so the same config works across differently scaled problems.
    """

    bounds: np.ndarray  # (D, 2) array of (lo, hi)
    n_starts: int = 6
    initial_step: float = 0.25
    step_shrink: float = 0.5
    min_step: float = 1e-4
    max_evaluations: int = 2000
    seed: int = 0

    def __post_init__(self):
        self.bounds = np.asarray(self.bounds, dtype=float)
        if self.bounds.ndim != 2 or self.bounds.shape[1] != 2:
            raise ValueError("bounds must be a (D, 2) array of (lo, hi) pairs")
        if np.any(self.bounds[:, 0] >= self.bounds[:, 1]):
            raise ValueError("every lower bound must be below its upper bound")
        if not 0.0 < self.step_shrink < 1.0:
            raise ValueError("step_shrink must lie in (0, 1)")
        if self.min_step >= self.initial_step:
            raise ValueError("min_step must be smaller than initial_step")
        if self.n_starts < 1 or self.max_evaluations < 1:
            raise ValueError("n_starts and max_evaluations must be positive")


@dataclass
class SearchResult:
    best_point: np.ndarray
    best_value: float
    evaluations_used: int
    start_index_of_best: int = 0


class _Budget:
    """Shared evaluation counter so a run can stop mid-sweep."""

    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def exhausted(self) -> bool:
        return self.used >= self.limit


def _clamp(point: np.ndarray, bounds: np.ndarray) -> np.ndarray:
    return np.clip(point, bounds[:, 0], bounds[:, 1])


def _explore(objective, base, f_base, steps, bounds, budget):
    """One exploratory sweep: probe +/- step along each coordinate.

    The first strictly improving probe per coordinate is accepted immediately.
    Returns the (possibly unchanged) point and value.
    """
    point = base.copy()
    value = f_base
    for k in range(point.size):
        for direction in (+1.0, -1.0):
            if budget.exhausted():
                return point, value
            trial = point.copy()
            trial[k] += direction * steps[k]
            trial = _clamp(trial, bounds)
            if trial[k] == point[k]:
                continue  # move was fully clipped away
            budget.used += 1
            f_trial = objective(trial)
            if f_trial < value:
                point = trial
                value = f_trial
                break
    return point, value


def hooke_jeeves(
    objective: Callable[[np.ndarray], float],
    start: np.ndarray,
    config: SearchConfig,
) -> SearchResult:
    """Minimize ``objective`` from ``start`` within ``config.bounds``.

    Raises
    ------
    RejectedStartError
        If the objective is ``+inf`` at the start and at every initial probe.
    """
    bounds = config.bounds
    widths = bounds[:, 1] - bounds[:, 0]
    steps = config.initial_step * widths
    min_steps = config.min_step * widths
    budget = _Budget(config.max_evaluations)

    base = _clamp(np.asarray(start, dtype=float), bounds)
    budget.used += 1
    f_base = objective(base)

    first_sweep = True
    while not budget.exhausted() and np.any(steps >= min_steps):
        new_point, f_new = _explore(objective, base, f_base, steps, bounds, budget)
        if first_sweep:
            if not np.isfinite(f_base) and not np.isfinite(f_new):
                raise RejectedStartError(
                    "objective infinite at the start point and at all probes"
                )
            first_sweep = False
        if f_new < f_base:
            # Pattern moves: keep repeating the successful displacement while
            # the exploratory sweep around the extrapolated point still wins.
            while f_new < f_base and not budget.exhausted():
                displacement = new_point - base
                base, f_base = new_point, f_new
                trial = _clamp(base + displacement, bounds)
                budget.used += 1
                f_trial = objective(trial)
                new_point, f_new = _explore(
                    objective, trial, f_trial, steps, bounds, budget
                )
                if f_new >= f_base:
                    break
        else:
            steps = steps * config.step_shrink

    if not np.isfinite(f_base):
        raise RejectedStartError("objective infinite at the start point")
    return SearchResult(best_point=base, best_value=f_base, evaluations_used=budget.used)


def multi_start(
    objective: Callable[[np.ndarray], float],
    config: SearchConfig,
) -> SearchResult:
    """Run :func:`hooke_jeeves` from several starts and keep the best result.

    The first start is the box center; the remaining ones are drawn uniformly
    from a generator seeded with ``config.seed``, so identical seeds give
    bitwise-identical results.
    """
    bounds = config.bounds
    rng = np.random.default_rng(config.seed)
    starts = [0.5 * (bounds[:, 0] + bounds[:, 1])]
    for _ in range(config.n_starts - 1):
        starts.append(bounds[:, 0] + rng.random(bounds.shape[0]) * (bounds[:, 1] - bounds[:, 0]))

    best: SearchResult | None = None
    total_evals = 0
    for index, start in enumerate(starts):
        try:
            result = hooke_jeeves(objective, start, config)
        except RejectedStartError:
            continue
        total_evals += result.evaluations_used
        if best is None or result.best_value < best.best_value:
            best = result
            best.start_index_of_best = index
    if best is None:
        raise UnfittableDataError("all pattern-search starts were rejected")
    best.evaluations_used = total_evals
    return best
