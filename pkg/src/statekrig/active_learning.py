"""Sequential enrichment of sparse Kriging models from a trajectory pool.

Each state-derivative component gets its own model.  Starting from a small
equidistant subset of the pool, the learner repeatedly scores every pool row
with a bias-plus-variance acquisition and enriches the training subset with
the worst row, until the worst normalized score drops below a threshold or a
hard cap is reached.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kriging
from .kriging import KrigingModel, TrainingPool
from .pattern_search import SearchConfig


@dataclass
class ActiveLearningConfig:
    """Convergence threshold, initial design size, and enrichment limits."""

    delta: float = 1e-6
    n_initial: int = 5
    max_selected: int = 1000
    refit_every: int = 1  # full hyper-parameter re-optimization cadence

    def __post_init__(self):
        if self.delta <= 0.0:
            raise ValueError("delta must be positive")
        if self.n_initial < 2:
            raise ValueError("n_initial must be at least 2")
        if self.max_selected < self.n_initial:
            raise ValueError("max_selected must be at least n_initial")
        if self.refit_every < 1:
            raise ValueError("refit_every must be at least 1")


@dataclass
class SelectionTrace:
    """Record of which pool rows a component retained and why it stopped."""

    selected_indices: list[int] = field(default_factory=list)
    acquisition_history: list[float] = field(default_factory=list)
    final_max_acquisition: float = np.nan
    converged: bool = False

    @property
    def n_selected(self) -> int:
        return len(self.selected_indices)

    def sparsity(self, pool_size: int) -> float:
        return self.n_selected / pool_size


def select_initial(pool_size: int, n_initial: int) -> np.ndarray:
    """Equidistant indices over [0, pool_size - 1], endpoints included."""
    if n_initial > pool_size:
        raise ValueError("n_initial cannot exceed the pool size")
    if n_initial < 1:
        raise ValueError("n_initial must be positive")
    idx = np.unique(np.rint(np.linspace(0, pool_size - 1, n_initial)).astype(int))
    return idx


def acquisition(model: KrigingModel, pool: TrainingPool, component: int) -> np.ndarray:
    """Squared predictive bias plus predictive variance at every pool row."""
    mean, var = model.predict(pool.inputs)
    bias = mean - pool.outputs[:, component]
    return bias * bias + var


def run_component(
    pool: TrainingPool,
    component: int,
    config: ActiveLearningConfig,
    search: SearchConfig | None = None,
) -> tuple[KrigingModel, SelectionTrace]:
    """Train one sparse component model by sequential enrichment.

    Stops when max over the pool of acquisition / var(component outputs)
    falls below ``config.delta``, or when ``config.max_selected`` rows have
    been retained.  Hyper-parameters are re-optimized every
    ``config.refit_every`` enrichments; in between, the cached length scales
    are reused and only the trend and variance are re-profiled.
    """
    y = pool.outputs[:, component]
    sigma_y2 = float(np.var(y))  # population variance over the full pool
    if sigma_y2 == 0.0:
        sigma_y2 = 1.0  # degenerate constant component; threshold on raw scale

    if search is None:
        search = kriging.default_search_config(pool.inputs.shape[1])

    selected = list(select_initial(pool.n_rows, config.n_initial))
    trace = SelectionTrace(selected_indices=list(selected))
    cached_theta = None
    steps_since_refit = 0

    while True:
        rows = np.asarray(selected)
        if cached_theta is None or steps_since_refit >= config.refit_every:
            model = kriging.fit(pool.inputs[rows], y[rows], search=search)
            cached_theta = model.hyper.theta
            steps_since_refit = 0
        else:
            model = kriging.fit(pool.inputs[rows], y[rows], theta=cached_theta)

        scores = acquisition(model, pool, component)
        max_score = float(scores.max())
        trace.acquisition_history.append(max_score)
        trace.final_max_acquisition = max_score

        if max_score / sigma_y2 < config.delta:
            trace.converged = True
            break
        if len(selected) >= config.max_selected:
            break

        best_row = int(np.argmax(scores))  # argmax ties resolve to lowest index
        if best_row in set(selected):
            # The worst row is already retained (pure interpolation residual
            # plus nugget noise); enriching it again cannot help.
            break
        selected.append(best_row)
        steps_since_refit += 1

    trace.selected_indices = list(selected)
    return model, trace
