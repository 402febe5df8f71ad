"""Assembles per-component Kriging models into a state-space surrogate.

The surrogate right-hand side stacks the n scalar predictive means (or
Gaussian draws) at omega = [x; u]; trajectories come from classic fixed-step
RK4 with the excitation evaluated exactly at stage times.  Uncertainty is
propagated by Monte Carlo over sampled-mode emulations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .benchmarks import Trajectory, _time_grid
from .errors import DivergenceError, EnsembleFailureError
from .kriging import (
    KrigingHyperParams,
    KrigingModel,
    Standardizer,
    TrainingPool,
)

#: A state is declared divergent when it exceeds this multiple of the range
#: its component covered in the training pool.
DIVERGENCE_FACTOR = 1e6


@dataclass
class StateSpaceSurrogate:
    """Bundle of n independent scalar Kriging models mapping (x, u) -> x'."""

    components: list[KrigingModel]
    n: int
    m: int = 1
    state_range: np.ndarray | None = None  # (n,) pool range per state
    manifest: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1 or len(self.components) != self.n:
            raise ValueError("need one component model per state dimension")
        for comp in self.components:
            if comp.input_dim != self.n + self.m:
                raise ValueError("component input dimension must equal n + m")
        if self.state_range is not None:
            self.state_range = np.asarray(self.state_range, dtype=float)

    def divergence_limit(self) -> np.ndarray:
        if self.state_range is None:
            return np.full(self.n, np.inf)
        return DIVERGENCE_FACTOR * np.maximum(self.state_range, 1e-12)

    def rhs(
        self,
        t: float,
        x: np.ndarray,
        u_value: float,
        mode: str = "mean",
        rng: np.random.Generator | None = None,
    ) -> np.ndarray:
        """Surrogate state derivative at one point.

        ``mode='mean'`` returns the stacked predictive means; ``mode='sampled'``
        adds independent Gaussian noise per component per call.
        """
        if not np.all(np.isfinite(x)):
            raise DivergenceError(f"non-finite state at t = {t:.6g}", time=t)
        point = np.concatenate([x, [u_value]])
        if mode == "mean":
            return np.array([comp.predict_mean(point) for comp in self.components])
        if mode == "sampled":
            if rng is None:
                raise ValueError("sampled mode requires an rng")
            out = np.empty(self.n)
            for i, comp in enumerate(self.components):
                mean, var = comp.predict(point)
                out[i] = mean + np.sqrt(var) * rng.standard_normal()
            return out
        raise ValueError("mode must be 'mean' or 'sampled'")

    def mean_derivatives(self, states: np.ndarray, u_values: np.ndarray) -> np.ndarray:
        """Vectorized mean-mode rhs at many (state, excitation) rows."""
        points = np.column_stack([states, u_values])
        return np.column_stack([comp.predict_mean(points) for comp in self.components])


def emulate(
    model: StateSpaceSurrogate,
    excitation,
    x0: np.ndarray,
    dt: float,
    T: float,
    mode: str = "mean",
    rng: np.random.Generator | None = None,
) -> Trajectory:
    """Integrate the surrogate with fixed-step RK4 on the uniform grid.

    Raises :class:`DivergenceError` when the trajectory blows out of the
    region the surrogate was trained on (extrapolation failure).
    """
    times = _time_grid(dt, T)
    limit = model.divergence_limit()
    states = np.empty((times.size, model.n))
    x = np.asarray(x0, dtype=float).copy()
    states[0] = x
    for j in range(times.size - 1):
        t = times[j]
        half = t + 0.5 * dt
        k1 = model.rhs(t, x, excitation(t), mode, rng)
        k2 = model.rhs(half, x + 0.5 * dt * k1, excitation(half), mode, rng)
        k3 = model.rhs(half, x + 0.5 * dt * k2, excitation(half), mode, rng)
        k4 = model.rhs(t + dt, x + dt * k3, excitation(t + dt), mode, rng)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)) or np.any(np.abs(x) > limit):
            raise DivergenceError(
                f"surrogate trajectory diverged at t = {times[j + 1]:.6g}",
                time=float(times[j + 1]),
            )
        states[j + 1] = x
    u_values = np.asarray(excitation(times), dtype=float)
    derivatives = model.mean_derivatives(states, u_values)
    return Trajectory(
        times=times,
        states=states,
        derivatives=derivatives,
        excitation_values=u_values,
        excitation_manifest=excitation.to_manifest() if hasattr(excitation, "to_manifest") else {},
    )


@dataclass
class EnsemblePrediction:
    """Monte Carlo predictive ensemble with an empirical 95% band."""

    trajectories: np.ndarray  # (N_kept, N_t, n)
    times: np.ndarray
    mean: np.ndarray  # (N_t, n)
    lower: np.ndarray  # 2.5% quantile
    upper: np.ndarray  # 97.5% quantile
    divergent_count: int = 0

    def to_summary(self) -> dict:
        return {
            "times": self.times.tolist(),
            "mean": self.mean.tolist(),
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
            "n_replicates": int(self.trajectories.shape[0]),
            "divergent_count": self.divergent_count,
        }


def ensemble(
    model: StateSpaceSurrogate,
    excitation,
    x0: np.ndarray,
    dt: float,
    T: float,
    n_mc: int,
    seed: int = 0,
) -> EnsemblePrediction:
    """N_MC independent sampled-mode emulations with empirical quantiles.

    Divergent replicates are dropped and counted; more than half divergent is
    an ensemble failure.
    """
    if n_mc < 1:
        raise ValueError("need at least one replicate")
    streams = np.random.SeedSequence(seed).spawn(n_mc)
    kept = []
    divergent = 0
    for stream in streams:
        rng = np.random.default_rng(stream)
        try:
            traj = emulate(model, excitation, x0, dt, T, mode="sampled", rng=rng)
        except DivergenceError:
            divergent += 1
            continue
        kept.append(traj.states)
    if divergent > n_mc // 2:
        raise EnsembleFailureError(
            f"{divergent} of {n_mc} Monte Carlo replicates diverged"
        )
    stack = np.stack(kept)
    times = _time_grid(dt, T)
    return EnsemblePrediction(
        trajectories=stack,
        times=times,
        mean=stack.mean(axis=0),
        lower=np.quantile(stack, 0.025, axis=0),
        upper=np.quantile(stack, 0.975, axis=0),
        divergent_count=divergent,
    )


# --- persistence -----------------------------------------------------------


def save_surrogate(model: StateSpaceSurrogate, path: str) -> None:
    """Serialize a surrogate to a single .npz archive."""
    arrays = {
        "n": np.array(model.n),
        "m": np.array(model.m),
        "manifest": np.frombuffer(
            json.dumps(model.manifest).encode("utf-8"), dtype=np.uint8
        ),
    }
    if model.state_range is not None:
        arrays["state_range"] = model.state_range
    for i, comp in enumerate(model.components):
        p = f"c{i}_"
        arrays[p + "theta"] = comp.hyper.theta
        arrays[p + "beta_sigma2_nugget"] = np.array(
            [comp.hyper.beta, comp.hyper.sigma2, comp.nugget]
        )
        arrays[p + "retained_inputs"] = comp.retained_inputs
        arrays[p + "cholesky"] = comp.cholesky_factor
        arrays[p + "alpha"] = comp.alpha
        arrays[p + "rinv_f"] = comp.rinv_f
        arrays[p + "f_rinv_f"] = np.array(comp.f_rinv_f)
        arrays[p + "std_in"] = np.vstack(
            [comp.standardizer.input_shift, comp.standardizer.input_scale]
        )
        arrays[p + "std_out"] = np.array(
            [comp.standardizer.output_shift, comp.standardizer.output_scale]
        )
    np.savez(path, **arrays)


def load_surrogate(path: str) -> StateSpaceSurrogate:
    data = np.load(path)
    n = int(data["n"])
    m = int(data["m"])
    manifest = json.loads(bytes(data["manifest"]).decode("utf-8"))
    state_range = data["state_range"] if "state_range" in data else None
    components = []
    for i in range(n):
        p = f"c{i}_"
        beta, sigma2, nugget = data[p + "beta_sigma2_nugget"]
        std_in = data[p + "std_in"]
        std_out = data[p + "std_out"]
        components.append(
            KrigingModel(
                hyper=KrigingHyperParams(
                    theta=data[p + "theta"], beta=float(beta), sigma2=float(sigma2)
                ),
                retained_inputs=data[p + "retained_inputs"],
                cholesky_factor=data[p + "cholesky"],
                alpha=data[p + "alpha"],
                rinv_f=data[p + "rinv_f"],
                f_rinv_f=float(data[p + "f_rinv_f"]),
                standardizer=Standardizer(
                    input_shift=std_in[0],
                    input_scale=std_in[1],
                    output_shift=float(std_out[0]),
                    output_scale=float(std_out[1]),
                ),
                nugget=float(nugget),
            )
        )
    return StateSpaceSurrogate(
        components=components, n=n, m=m, state_range=state_range, manifest=manifest
    )


def pool_state_range(pool: TrainingPool, n: int) -> np.ndarray:
    """Per-state span of the pool, used for the divergence guard."""
    states = pool.inputs[:, :n]
    return states.max(axis=0) - states.min(axis=0)
