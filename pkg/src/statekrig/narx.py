"""Polynomial NARX baseline with least-angle-regression term selection.

The response at each time step is regressed on lagged excitation and response
values through a monomial basis.  Least angle regression orders the candidate
terms; the path is truncated at the model minimizing leave-one-out error of
an ordinary-least-squares refit, which guards against overfitting without a
held-out set.  Prediction runs recursively, feeding predictions back into the
response lags (free run).
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.linear_model import lars_path

from .errors import DivergenceError

#: Divergence guard for free-run prediction, as a multiple of the training
#: response range.
FREE_RUN_LIMIT_FACTOR = 1e6


@dataclass
class NarxConfig:
    n_u: int = 2  # excitation lag count
    n_x: int = 2  # response lag count
    max_degree: int = 3
    max_terms: int = 60

    def __post_init__(self):
        if self.n_u < 1 or self.n_x < 1:
            raise ValueError("lag counts must be at least 1")
        if self.max_degree < 1:
            raise ValueError("max_degree must be at least 1")
        if self.max_terms < 1:
            raise ValueError("max_terms must be at least 1")

    @property
    def first_row(self) -> int:
        return max(self.n_u, self.n_x) + 1

    @property
    def n_regressors(self) -> int:
        return self.n_u + 1 + self.n_x


def build_regressors(
    u: np.ndarray, x: np.ndarray, config: NarxConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Lagged design matrix and one-step targets.

    Row j holds [u(t_j) .. u(t_{j-n_u}), x(t_{j-1}) .. x(t_{j-n_x})] with
    target x(t_j); rows start at max(n_u, n_x) + 1 so no lag indexes before
    the first sample.
    """
    u = np.asarray(u, dtype=float).ravel()
    x = np.asarray(x, dtype=float).ravel()
    if u.size != x.size:
        raise ValueError("excitation and response histories must be equally long")
    j0 = config.first_row
    if u.size <= j0:
        raise ValueError("history too short for the requested lags")
    rows = np.arange(j0, u.size)
    u_cols = np.column_stack([u[rows - lag] for lag in range(config.n_u + 1)])
    x_cols = np.column_stack([x[rows - lag] for lag in range(1, config.n_x + 1)])
    return np.column_stack([u_cols, x_cols]), x[rows]


def monomial_terms(n_regressors: int, max_degree: int) -> list[tuple[int, ...]]:
    """All monomial multi-indices (as sorted column tuples) up to max_degree.

    The empty tuple is the constant term.
    """
    terms: list[tuple[int, ...]] = [()]
    for degree in range(1, max_degree + 1):
        terms.extend(itertools.combinations_with_replacement(range(n_regressors), degree))
    return terms


def evaluate_terms(design: np.ndarray, terms: list[tuple[int, ...]]) -> np.ndarray:
    cols = np.empty((design.shape[0], len(terms)))
    for k, term in enumerate(terms):
        if term:
            cols[:, k] = np.prod(design[:, term], axis=1)
        else:
            cols[:, k] = 1.0
    return cols


@dataclass
class NarxModel:
    config: NarxConfig
    terms: list[tuple[int, ...]]  # selected basis terms, constant first
    coefficients: np.ndarray
    response_range: float = 1.0
    loo_path: np.ndarray = field(default_factory=lambda: np.empty(0))

    def predict_rows(self, design: np.ndarray) -> np.ndarray:
        return evaluate_terms(design, self.terms) @ self.coefficients


def _loo_mse(basis: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """OLS fit with closed-form leave-one-out mean squared error."""
    coef, _, rank, _ = np.linalg.lstsq(basis, y, rcond=None)
    resid = y - basis @ coef
    q, _ = np.linalg.qr(basis)
    leverage = np.minimum(np.sum(q * q, axis=1), 1.0 - 1e-12)
    loo = resid / (1.0 - leverage)
    return float(np.mean(loo * loo)), coef


def fit_lars(design: np.ndarray, targets: np.ndarray, config: NarxConfig) -> NarxModel:
    """Select and fit polynomial NARX terms.

    LARS (pure least-angle, no drops) orders the standardized basis columns;
    for every prefix of the path the terms are refit by OLS together with the
    constant, and the prefix with the lowest leave-one-out error wins.
    """
    if design.shape[0] < 2:
        raise ValueError("need at least two regressor rows")
    all_terms = monomial_terms(design.shape[1], config.max_degree)
    basis = evaluate_terms(design, all_terms)

    # Constant column handled as an always-present intercept.
    candidates = basis[:, 1:]
    scale = candidates.std(axis=0)
    usable = scale > 0.0
    cand_std = (candidates[:, usable] - candidates[:, usable].mean(axis=0)) / scale[usable]
    y_centered = targets - targets.mean()

    max_steps = min(config.max_terms, cand_std.shape[1])
    _, active, _ = lars_path(cand_std, y_centered, method="lar", max_iter=max_steps)
    usable_indices = np.flatnonzero(usable)
    entry_order = [int(usable_indices[a]) + 1 for a in active]  # +1: skip constant

    best_loo = np.inf
    best_k = 0
    best_coef = np.array([targets.mean()])
    kept: list[int] = []
    loo_values: list[float] = []
    for idx in entry_order:
        cols = [0] + kept + [idx]
        sub = basis[:, cols]
        if np.linalg.matrix_rank(sub) < sub.shape[1]:
            warnings.warn(f"dropping rank-deficient term {all_terms[idx]}")
            continue
        kept.append(idx)
        loo, coef = _loo_mse(sub, targets)
        loo_values.append(loo)
        if loo < best_loo:
            best_loo = loo
            best_k = len(kept)
            best_coef = coef
    loo_path = np.asarray(loo_values)

    selected = [all_terms[0]] + [all_terms[i] for i in kept[:best_k]]
    response_range = float(targets.max() - targets.min())
    return NarxModel(
        config=config,
        terms=selected,
        coefficients=best_coef,
        response_range=max(response_range, 1e-12),
        loo_path=loo_path[: len(entry_order)],
    )


def fit_from_histories(
    u_histories: list[np.ndarray], x_histories: list[np.ndarray], config: NarxConfig
) -> NarxModel:
    """Fit one NARX model on regressors pooled from several histories."""
    designs, targets = [], []
    for u, x in zip(u_histories, x_histories):
        d, t = build_regressors(u, x, config)
        designs.append(d)
        targets.append(t)
    return fit_lars(np.vstack(designs), np.concatenate(targets), config)


def free_run(
    model: NarxModel, u: np.ndarray, initial_response: np.ndarray
) -> np.ndarray:
    """Recursive prediction feeding predictions back into the response lags.

    ``initial_response`` supplies the ground-truth values for the first
    max(n_u, n_x) + 1 time steps.
    """
    config = model.config
    u = np.asarray(u, dtype=float).ravel()
    j0 = config.first_row
    initial_response = np.asarray(initial_response, dtype=float).ravel()
    if initial_response.size < j0:
        raise ValueError(f"need {j0} initial response values")
    limit = FREE_RUN_LIMIT_FACTOR * model.response_range
    x = np.empty(u.size)
    x[:j0] = initial_response[:j0]
    for j in range(j0, u.size):
        row = np.concatenate(
            [
                u[j - np.arange(config.n_u + 1)],
                x[j - np.arange(1, config.n_x + 1)],
            ]
        )
        value = float(model.predict_rows(row[None, :])[0])
        if not np.isfinite(value) or abs(value) > limit:
            raise DivergenceError(
                f"free-run prediction diverged at step {j}", time=float(j)
            )
        x[j] = value
    return x
