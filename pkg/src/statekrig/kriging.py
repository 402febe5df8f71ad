"""Scalar Gaussian-process (Kriging) regression with constant trend.

One model maps a D-dimensional input to a scalar output through a Matern-5/2
correlation kernel with anisotropic inverse-squared length scales.  The trend
constant and process variance are profiled analytically; the length scales are
found by multi-start pattern search on the reduced log-likelihood.  All linear
algebra goes through a single Cholesky factorization of the (nugget-inflated)
correlation matrix, which is reused for the likelihood, the predictive mean
and the predictive variance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, solve_triangular, LinAlgError

from .errors import IllConditionedKernelError
from .pattern_search import SearchConfig, multi_start

SQRT5 = np.sqrt(5.0)

#: Nugget escalation ladder: multiply by 10 on factorization failure.
DEFAULT_NUGGET = 1e-10
MAX_NUGGET = 1e-4

#: Floor applied to the profiled variance before taking its logarithm.
SIGMA2_FLOOR = 1e-300

#: Reject theta candidates whose nugget-induced interpolation error at the
#: training points exceeds this fraction of the (standardized) output scale.
#: The error at training point i is exactly nugget * |alpha_i|, so this guard
#: is one extra triangular solve.  Without it the likelihood search can drift
#: into the all-flat corner where R is numerically all-ones and the "fit"
#: no longer reproduces its own training data.
INTERPOLATION_GUARD = 1e-8

#: log10(theta) search box per coordinate, in standardized input space.  The
#: low end admits near-flat kernels, which interpolate smooth (in particular
#: linear) components almost exactly and keep the selected subsets sparse.
THETA_LOG10_BOUNDS = (-6.0, 3.0)


@dataclass
class TrainingPool:
    """Full candidate set of (state, excitation) inputs and derivative outputs.

    Rows are samples omega(t_j) = [x(t_j); u(t_j)] harvested from training
    trajectories; outputs hold the matching state derivatives.
    """

    inputs: np.ndarray  # (N, D)
    outputs: np.ndarray  # (N, n)
    source_history_id: np.ndarray  # (N,) int
    time_stamp: np.ndarray  # (N,) seconds

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=float)
        self.outputs = np.asarray(self.outputs, dtype=float)
        if self.outputs.ndim == 1:
            self.outputs = self.outputs[:, None]
        self.source_history_id = np.asarray(self.source_history_id, dtype=int)
        self.time_stamp = np.asarray(self.time_stamp, dtype=float)
        if self.inputs.shape[0] != self.outputs.shape[0]:
            raise ValueError("inputs and outputs must have the same row count")
        if self.inputs.shape[0] < 2:
            raise ValueError("a training pool needs at least two rows")
        if not (np.all(np.isfinite(self.inputs)) and np.all(np.isfinite(self.outputs))):
            raise ValueError("training pool contains non-finite entries")

    @property
    def n_rows(self) -> int:
        return self.inputs.shape[0]

    @property
    def n_components(self) -> int:
        return self.outputs.shape[1]


@dataclass
class Standardizer:
    """Affine map to zero-mean, unit-variance coordinates and back."""

    input_shift: np.ndarray
    input_scale: np.ndarray
    output_shift: float
    output_scale: float

    @classmethod
    def from_data(cls, inputs: np.ndarray, outputs: np.ndarray) -> "Standardizer":
        shift = inputs.mean(axis=0)
        scale = inputs.std(axis=0)
        scale[scale == 0.0] = 1.0  # constant coordinates pass through unscaled
        out_shift = float(outputs.mean())
        out_scale = float(outputs.std())
        if out_scale == 0.0:
            out_scale = 1.0
        return cls(shift, scale, out_shift, out_scale)

    def transform_inputs(self, x: np.ndarray) -> np.ndarray:
        return (x - self.input_shift) / self.input_scale

    def inverse_inputs(self, z: np.ndarray) -> np.ndarray:
        return z * self.input_scale + self.input_shift

    def transform_output(self, y):
        return (y - self.output_shift) / self.output_scale

    def inverse_output(self, y_std):
        return y_std * self.output_scale + self.output_shift


@dataclass
class KrigingHyperParams:
    theta: np.ndarray  # (D,) inverse-squared-length-scale diagonal
    beta: float
    sigma2: float

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        if not np.all(np.isfinite(self.theta)) or np.any(self.theta <= 0.0):
            raise ValueError("theta must be finite and strictly positive")
        if self.sigma2 < 0.0:
            raise ValueError("sigma2 must be nonnegative")


def matern52(a: np.ndarray, b: np.ndarray, theta: np.ndarray) -> float:
    """Matern-5/2 correlation between two points.

    r is the anisotropic distance sqrt(sum theta_d (a_d - b_d)^2); the kernel
    value is (1 + sqrt5 r + 5/3 r^2) exp(-sqrt5 r), in (0, 1], equal to one
    iff a == b.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("kernel inputs must be finite")
    if np.any(theta <= 0.0) or not np.all(np.isfinite(theta)):
        raise ValueError("theta must be finite and strictly positive")
    r = np.sqrt(np.sum(theta * (a - b) ** 2))
    return float((1.0 + SQRT5 * r + (5.0 / 3.0) * r**2) * np.exp(-SQRT5 * r))


def _correlation_from_sqdist(sq: np.ndarray) -> np.ndarray:
    r = np.sqrt(np.maximum(sq, 0.0))
    return (1.0 + SQRT5 * r + (5.0 / 3.0) * sq) * np.exp(-SQRT5 * r)


def correlation_matrix(a: np.ndarray, b: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Dense Matern-5/2 cross-correlation matrix of shape (len(a), len(b))."""
    diff = a[:, None, :] - b[None, :, :]
    sq = np.einsum("ijk,k->ij", diff * diff, theta)
    return _correlation_from_sqdist(sq)


def build_factorized_correlation(
    inputs: np.ndarray, theta: np.ndarray, nugget: float = DEFAULT_NUGGET
) -> tuple[np.ndarray, float]:
    """Lower-triangular factor L with L L' = R + nugget I.

    The nugget is escalated by factors of 10 up to :data:`MAX_NUGGET` when the
    factorization fails; the value actually used is returned alongside L.
    """
    if inputs.shape[0] < 2:
        raise ValueError("need at least two rows to build a correlation matrix")
    R = correlation_matrix(inputs, inputs, np.asarray(theta, dtype=float))
    current = float(nugget)
    while True:
        try:
            L = cholesky(R + current * np.eye(R.shape[0]), lower=True)
            return L, current
        except LinAlgError:
            if current >= MAX_NUGGET:
                raise IllConditionedKernelError(
                    f"correlation matrix not factorizable at nugget {current:g}"
                )
            current *= 10.0


def profile_trend_and_variance(factor: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Analytically profiled trend constant and process variance.

    beta = (F' R^-1 F)^-1 F' R^-1 y and sigma2 = (y - beta F)' R^-1 (y - beta F) / N,
    both through triangular solves against the Cholesky factor.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    ones = np.ones(n)
    z_f = solve_triangular(factor, ones, lower=True)
    z_y = solve_triangular(factor, y, lower=True)
    f_rinv_f = float(z_f @ z_f)
    beta = float(z_f @ z_y) / f_rinv_f
    resid = z_y - beta * z_f
    sigma2 = float(resid @ resid) / n
    return beta, sigma2


def reduced_likelihood_objective(
    theta: np.ndarray, inputs: np.ndarray, y: np.ndarray, nugget: float = DEFAULT_NUGGET
) -> float:
    """Profile negative log-likelihood: N ln sigma2(theta) + ln det R(theta).

    Returns +inf when the correlation matrix cannot be factorized, so a
    derivative-free optimizer simply rejects the point.
    """
    try:
        factor, used_nugget = build_factorized_correlation(inputs, theta, nugget)
    except IllConditionedKernelError:
        return np.inf
    n = y.size
    ones = np.ones(n)
    z_f = solve_triangular(factor, ones, lower=True)
    z_y = solve_triangular(factor, y, lower=True)
    beta = float(z_f @ z_y) / float(z_f @ z_f)
    resid = z_y - beta * z_f
    sigma2 = max(float(resid @ resid) / n, SIGMA2_FLOOR)
    alpha = solve_triangular(factor, resid, lower=True, trans="T")
    guard = INTERPOLATION_GUARD * max(1.0, float(np.max(np.abs(y))))
    if used_nugget * float(np.max(np.abs(alpha))) > guard:
        return np.inf
    log_det = 2.0 * float(np.sum(np.log(np.diag(factor))))
    return n * float(np.log(sigma2)) + log_det


@dataclass
class KrigingModel:
    """A trained scalar Kriging model plus everything needed to predict.

    ``retained_inputs`` are stored in standardized coordinates; predictions
    accept and return physical units through the attached standardizer.
    """

    hyper: KrigingHyperParams
    retained_inputs: np.ndarray  # (N_s, D), standardized
    cholesky_factor: np.ndarray  # (N_s, N_s) lower triangular
    alpha: np.ndarray  # (N_s,) = R^-1 (y - beta F)
    rinv_f: np.ndarray  # (N_s,) = R^-1 F
    f_rinv_f: float
    standardizer: Standardizer
    nugget: float

    @property
    def n_samples(self) -> int:
        return self.retained_inputs.shape[0]

    @property
    def input_dim(self) -> int:
        return self.retained_inputs.shape[1]

    def _cross_correlation(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if not np.all(np.isfinite(pts)):
            raise ValueError("prediction points must be finite")
        z = self.standardizer.transform_inputs(pts)
        return correlation_matrix(self.retained_inputs, z, self.hyper.theta)

    def predict_mean(self, points: np.ndarray):
        """Predictive mean beta + r' R^-1 (y - beta F), in physical units."""
        scalar = np.ndim(points) == 1
        r = self._cross_correlation(points)  # (N_s, M)
        mean_std = self.hyper.beta + r.T @ self.alpha
        mean = self.standardizer.inverse_output(mean_std)
        return float(mean[0]) if scalar else mean

    def predict_variance(self, points: np.ndarray):
        """Predictive variance, clamped at zero, in physical units squared."""
        scalar = np.ndim(points) == 1
        r = self._cross_correlation(points)  # (N_s, M)
        w = solve_triangular(self.cholesky_factor, r, lower=True)
        r_rinv_r = np.sum(w * w, axis=0)
        u = 1.0 - self.rinv_f @ r
        s2_std = self.hyper.sigma2 * (1.0 - r_rinv_r + u * u / self.f_rinv_f)
        s2 = np.maximum(s2_std, 0.0) * self.standardizer.output_scale**2
        return float(s2[0]) if scalar else s2

    def predict(self, points: np.ndarray):
        """Mean and variance in one pass, sharing the cross-correlation."""
        scalar = np.ndim(points) == 1
        r = self._cross_correlation(points)
        mean_std = self.hyper.beta + r.T @ self.alpha
        mean = self.standardizer.inverse_output(mean_std)
        w = solve_triangular(self.cholesky_factor, r, lower=True)
        r_rinv_r = np.sum(w * w, axis=0)
        u = 1.0 - self.rinv_f @ r
        s2_std = self.hyper.sigma2 * (1.0 - r_rinv_r + u * u / self.f_rinv_f)
        s2 = np.maximum(s2_std, 0.0) * self.standardizer.output_scale**2
        if scalar:
            return float(mean[0]), float(s2[0])
        return mean, s2


def default_search_config(dim: int, seed: int = 0, **overrides) -> SearchConfig:
    """Pattern-search config over log10(theta) in the standard box."""
    lo, hi = THETA_LOG10_BOUNDS
    bounds = np.tile([lo, hi], (dim, 1)).astype(float)
    return SearchConfig(bounds=bounds, seed=seed, **overrides)


def _assemble(inputs_std, y_std, theta, nugget, standardizer) -> KrigingModel:
    factor, used_nugget = build_factorized_correlation(inputs_std, theta, nugget)
    beta, sigma2 = profile_trend_and_variance(factor, y_std)
    ones = np.ones(y_std.size)
    z_f = solve_triangular(factor, ones, lower=True)
    z_y = solve_triangular(factor, y_std, lower=True)
    alpha = solve_triangular(factor, z_y - beta * z_f, lower=True, trans="T")
    rinv_f = solve_triangular(factor, z_f, lower=True, trans="T")
    hyper = KrigingHyperParams(theta=theta, beta=beta, sigma2=sigma2)
    return KrigingModel(
        hyper=hyper,
        retained_inputs=inputs_std,
        cholesky_factor=factor,
        alpha=alpha,
        rinv_f=rinv_f,
        f_rinv_f=float(z_f @ z_f),
        standardizer=standardizer,
        nugget=used_nugget,
    )


def fit(
    inputs: np.ndarray,
    outputs: np.ndarray,
    search: SearchConfig | None = None,
    theta: np.ndarray | None = None,
    nugget: float = DEFAULT_NUGGET,
) -> KrigingModel:
    """Fit one scalar Kriging model by maximum likelihood.

    Inputs and outputs are standardized internally; the length-scale search
    runs over log10(theta) in standardized space.  Passing ``theta`` skips the
    optimization and only re-profiles the trend and variance (used by the
    active learner between full refits).
    """
    inputs = np.asarray(inputs, dtype=float)
    outputs = np.asarray(outputs, dtype=float).ravel()
    if inputs.shape[0] != outputs.size:
        raise ValueError("inputs and outputs must have matching row counts")
    if inputs.shape[0] < 2:
        raise ValueError("need at least two samples to fit")

    standardizer = Standardizer.from_data(inputs, outputs)
    x_std = standardizer.transform_inputs(inputs)
    y_std = standardizer.transform_output(outputs)

    if theta is None:
        if search is None:
            search = default_search_config(inputs.shape[1])

        def objective(log10_theta: np.ndarray) -> float:
            return reduced_likelihood_objective(10.0**log10_theta, x_std, y_std, nugget)

        result = multi_start(objective, search)
        theta = 10.0**result.best_point
    else:
        theta = np.asarray(theta, dtype=float)

    return _assemble(x_std, y_std, theta, nugget, standardizer)
