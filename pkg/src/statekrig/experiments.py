"""End-to-end experiment orchestration and accuracy metrics.

Ties the pieces together: sample training excitations under a magnification
policy, harvest the candidate pool, train one sparse component model per
state derivative, emulate unmagnified test histories, and score them against
the reference solution.  Every run is reproducible from its JSON manifest.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import active_learning, benchmarks, emulator, excitation, kriging, narx
from .active_learning import ActiveLearningConfig, SelectionTrace
from .benchmarks import Trajectory
from .errors import DivergenceError, UndefinedDenominatorError

#: Environment variable capping worker threads for per-component training and
#: per-test-history emulation.
MAX_WORKERS_ENV = "STATEKRIG_MAX_WORKERS"


def _max_workers() -> int:
    try:
        return max(1, int(os.environ.get(MAX_WORKERS_ENV, "1")))
    except ValueError:
        return 1


def relative_error(truth: np.ndarray, prediction: np.ndarray) -> float:
    """Normalized squared trajectory error sum((x - xhat)^2) / sum((x - xbar)^2)."""
    truth = np.asarray(truth, dtype=float).ravel()
    prediction = np.asarray(prediction, dtype=float).ravel()
    if truth.size != prediction.size or truth.size < 2:
        raise ValueError("histories must have equal length of at least 2")
    denom = float(np.sum((truth - truth.mean()) ** 2))
    if denom == 0.0:
        raise UndefinedDenominatorError("truth history is constant")
    return float(np.sum((truth - prediction) ** 2)) / denom


# --- benchmark registry ----------------------------------------------------


@dataclass(frozen=True)
class BenchmarkDefaults:
    system_factory: object
    excitation_kind: str  # "harmonic" or "spectral"
    spectral_intensity: float | None
    dt: float
    T: float
    delta: float
    narx: narx.NarxConfig


BENCHMARKS: dict[str, BenchmarkDefaults] = {
    "quarter-car": BenchmarkDefaults(
        benchmarks.quarter_car, "harmonic", None, 0.002, 10.0, 1e-6,
        narx.NarxConfig(n_u=4, n_x=4, max_degree=3),
    ),
    "duffing": BenchmarkDefaults(
        benchmarks.duffing, "spectral", 0.1, 0.002, 10.0, 1e-6,
        narx.NarxConfig(n_u=2, n_x=2, max_degree=3),
    ),
    "bouc-wen": BenchmarkDefaults(
        benchmarks.bouc_wen, "spectral", 0.05, 0.002, 8.0, 1e-4,
        narx.NarxConfig(n_u=2, n_x=2, max_degree=5),
    ),
    "two-story": BenchmarkDefaults(
        benchmarks.two_story, "spectral", 0.05, 0.01, 10.0, 5e-4,
        narx.NarxConfig(n_u=4, n_x=4, max_degree=3),
    ),
}

SPECTRAL_D = 150


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one experiment exactly."""

    benchmark: str
    n_train: int = 1
    sigma: float | str = 1.0  # fixed magnification factor or "mixture"
    delta: float | None = None
    dt: float | None = None
    T: float | None = None
    n_initial: int = 5
    seed: int = 0
    n_test: int = 100
    n_mc: int = 50
    max_selected: int = 1000
    refit_every: int = 1
    n_starts: int = 6
    max_evaluations: int = 2000

    def __post_init__(self):
        if self.benchmark not in BENCHMARKS:
            raise ValueError(
                f"unknown benchmark {self.benchmark!r}; choose from {sorted(BENCHMARKS)}"
            )
        if self.n_test < 1:
            raise ValueError("n_test must be at least 1")
        if self.n_train < 1:
            raise ValueError("n_train must be at least 1")
        defaults = BENCHMARKS[self.benchmark]
        if self.delta is None:
            self.delta = defaults.delta
        if self.dt is None:
            self.dt = defaults.dt
        if self.T is None:
            self.T = defaults.T
        if defaults.excitation_kind == "harmonic":
            if self.sigma == "mixture" or float(self.sigma) != 1.0:
                raise ValueError(
                    "the harmonic excitation has no magnification rule; use sigma = 1"
                )

    def sigma_schedule(self) -> np.ndarray:
        if self.sigma == "mixture":
            return excitation.magnification_schedule(self.n_train)
        return np.full(self.n_train, float(self.sigma))

    def to_manifest(self) -> dict:
        d = asdict(self)
        d["version"] = 1
        return d

    @classmethod
    def from_manifest(cls, manifest: dict) -> "ExperimentConfig":
        d = dict(manifest)
        d.pop("version", None)
        return cls(**d)


@dataclass
class MetricsReport:
    """Per-history relative errors plus sparsity and timing bookkeeping."""

    benchmark: str
    errors: np.ndarray  # (n_test, n); +inf rows mark divergent emulations
    mean_errors: np.ndarray  # (n,) over non-divergent histories
    sample_sizes: list[int]
    sparsity: list[float]
    divergent_count: int
    timings: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "benchmark": self.benchmark,
            "errors": self.errors.tolist(),
            "mean_errors": self.mean_errors.tolist(),
            "sample_sizes": self.sample_sizes,
            "sparsity": self.sparsity,
            "divergent_count": self.divergent_count,
            "timings": self.timings,
            "config": self.config,
        }


# --- excitation sampling ---------------------------------------------------


def sample_excitations(
    benchmark: str, sigmas: np.ndarray, seed_sequence: np.random.SeedSequence
) -> list:
    defaults = BENCHMARKS[benchmark]
    streams = seed_sequence.spawn(len(sigmas))
    realizations = []
    for sigma, stream in zip(sigmas, streams):
        rng = np.random.default_rng(stream)
        if defaults.excitation_kind == "harmonic":
            realizations.append(excitation.sample_harmonic(rng))
        else:
            realizations.append(
                excitation.sample_spectral(defaults.spectral_intensity, SPECTRAL_D, float(sigma), rng)
            )
    return realizations


# --- training --------------------------------------------------------------


def train_surrogate(config: ExperimentConfig):
    """Build the pool and train all component models.

    Returns (surrogate, pool, training trajectories, traces).
    """
    defaults = BENCHMARKS[config.benchmark]
    system = defaults.system_factory()
    master = np.random.SeedSequence(config.seed)
    train_seq, _test_seq, search_seq = master.spawn(3)

    train_excitations = sample_excitations(config.benchmark, config.sigma_schedule(), train_seq)
    pool, trajectories = benchmarks.generate_training_pool(
        system, train_excitations, config.dt, config.T
    )

    al_config = ActiveLearningConfig(
        delta=config.delta,
        n_initial=config.n_initial,
        max_selected=min(config.max_selected, pool.n_rows),
        refit_every=config.refit_every,
    )
    component_seeds = [int(s.generate_state(1)[0]) for s in search_seq.spawn(system.n)]

    def train_one(i: int):
        search = kriging.default_search_config(
            system.n + system.m,
            seed=component_seeds[i],
            n_starts=config.n_starts,
            max_evaluations=config.max_evaluations,
        )
        return active_learning.run_component(pool, i, al_config, search)

    workers = _max_workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool_exec:
            results = list(pool_exec.map(train_one, range(system.n)))
    else:
        results = [train_one(i) for i in range(system.n)]

    components = [model for model, _ in results]
    traces = [trace for _, trace in results]
    surrogate = emulator.StateSpaceSurrogate(
        components=components,
        n=system.n,
        m=system.m,
        state_range=emulator.pool_state_range(pool, system.n),
        manifest={
            "config": config.to_manifest(),
            "train_excitations": [exc.to_manifest() for exc in train_excitations],
        },
    )
    return surrogate, pool, trajectories, traces


# --- evaluation ------------------------------------------------------------


def _test_excitations(config: ExperimentConfig) -> list:
    master = np.random.SeedSequence(config.seed)
    _train_seq, test_seq, _search_seq = master.spawn(3)
    # Test histories are always unmagnified.
    return sample_excitations(config.benchmark, np.ones(config.n_test), test_seq)


def evaluate_surrogate(
    surrogate: emulator.StateSpaceSurrogate,
    config: ExperimentConfig,
    return_trajectories: bool = False,
):
    """Emulate every test history in mean mode and score it against reference."""
    defaults = BENCHMARKS[config.benchmark]
    system = defaults.system_factory()
    test_excitations = _test_excitations(config)
    x0 = np.zeros(system.n)

    def score_one(exc):
        reference = benchmarks.reference_integrate(system, exc, x0, config.dt, config.T)
        try:
            predicted = emulator.emulate(surrogate, exc, x0, config.dt, config.T)
        except DivergenceError:
            return np.full(system.n, np.inf), reference, None
        errs = np.array(
            [
                relative_error(reference.states[:, i], predicted.states[:, i])
                for i in range(system.n)
            ]
        )
        return errs, reference, predicted

    workers = _max_workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool_exec:
            scored = list(pool_exec.map(score_one, test_excitations))
    else:
        scored = [score_one(exc) for exc in test_excitations]

    errors = np.vstack([s[0] for s in scored])
    finite = np.all(np.isfinite(errors), axis=1)
    divergent = int(np.sum(~finite))
    if np.any(finite):
        mean_errors = errors[finite].mean(axis=0)
    else:
        mean_errors = np.full(system.n, np.inf)
    if return_trajectories:
        return errors, mean_errors, divergent, scored
    return errors, mean_errors, divergent


def run_experiment(config: ExperimentConfig, out_dir: str | Path | None = None) -> MetricsReport:
    """Full pipeline: train, emulate tests, score, and optionally write artifacts."""
    t0 = time.perf_counter()
    surrogate, pool, train_trajectories, traces = train_surrogate(config)
    t_train = time.perf_counter() - t0

    t1 = time.perf_counter()
    errors, mean_errors, divergent, scored = evaluate_surrogate(
        surrogate, config, return_trajectories=True
    )
    t_eval = time.perf_counter() - t1

    report = MetricsReport(
        benchmark=config.benchmark,
        errors=errors,
        mean_errors=mean_errors,
        sample_sizes=[t.n_selected for t in traces],
        sparsity=[t.sparsity(pool.n_rows) for t in traces],
        divergent_count=divergent,
        timings={"train_s": t_train, "evaluate_s": t_eval},
        config=config.to_manifest(),
    )

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_manifest(out / "manifest.json", config)
        (out / "metrics.json").write_text(json.dumps(report.to_dict(), indent=2))
        for k, traj in enumerate(train_trajectories):
            write_trajectory_csv(out / f"train_{k:03d}.csv", traj)
        for k, (_, reference, predicted) in enumerate(scored):
            write_trajectory_csv(out / f"test_{k:03d}_reference.csv", reference)
            if predicted is not None:
                write_trajectory_csv(out / f"test_{k:03d}_emulated.csv", predicted)
        emulator.save_surrogate(surrogate, str(out / "surrogate.npz"))
    return report


def compare_narx(config: ExperimentConfig, out_dir: str | Path | None = None) -> dict:
    """Train the surrogate and the NARX baseline on identical draws.

    NARX models the first state only (the reported quantity); its free-run
    divergence is recorded as an infinite error, never an abort.
    """
    if config.benchmark == "two-story":
        raise ValueError("the NARX baseline is not run on the two-story benchmark")
    defaults = BENCHMARKS[config.benchmark]
    system = defaults.system_factory()

    surrogate, pool, train_trajectories, traces = train_surrogate(config)
    narx_model = narx.fit_from_histories(
        [tr.excitation_values for tr in train_trajectories],
        [tr.states[:, 0] for tr in train_trajectories],
        defaults.narx,
    )

    test_excitations = _test_excitations(config)
    x0 = np.zeros(system.n)
    j0 = defaults.narx.first_row
    surrogate_errors, narx_errors = [], []
    for exc in test_excitations:
        reference = benchmarks.reference_integrate(system, exc, x0, config.dt, config.T)
        try:
            predicted = emulator.emulate(surrogate, exc, x0, config.dt, config.T)
            surrogate_errors.append(
                relative_error(reference.states[:, 0], predicted.states[:, 0])
            )
        except DivergenceError:
            surrogate_errors.append(np.inf)
        try:
            narx_pred = narx.free_run(
                narx_model, reference.excitation_values, reference.states[:j0, 0]
            )
            narx_errors.append(relative_error(reference.states[:, 0], narx_pred))
        except DivergenceError:
            narx_errors.append(np.inf)

    result = {
        "benchmark": config.benchmark,
        "config": config.to_manifest(),
        "surrogate_errors": surrogate_errors,
        "narx_errors": narx_errors,
        "surrogate_sample_sizes": [t.n_selected for t in traces],
        "narx_terms": len(narx_model.terms),
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        serializable = dict(result)
        serializable["surrogate_errors"] = [_json_float(e) for e in surrogate_errors]
        serializable["narx_errors"] = [_json_float(e) for e in narx_errors]
        (out / "comparison.json").write_text(json.dumps(serializable, indent=2))
    return result


def repeat_experiment(
    config: ExperimentConfig, n_repetitions: int, out_dir: str | Path | None = None
) -> list[MetricsReport]:
    """Independent repetitions with derived seeds, for boxplot-style summaries."""
    if n_repetitions < 1:
        raise ValueError("need at least one repetition")
    rep_seeds = [
        int(s.generate_state(1)[0]) % (2**31)
        for s in np.random.SeedSequence(config.seed).spawn(n_repetitions)
    ]
    reports = []
    for rep, seed in enumerate(rep_seeds):
        rep_config = ExperimentConfig.from_manifest({**config.to_manifest(), "seed": seed})
        rep_out = None if out_dir is None else Path(out_dir) / f"rep_{rep:02d}"
        reports.append(run_experiment(rep_config, rep_out))
    if out_dir is not None:
        summary = {
            "config": config.to_manifest(),
            "per_run_mean_errors": [r.mean_errors.tolist() for r in reports],
        }
        Path(out_dir, "repetitions.json").write_text(json.dumps(summary, indent=2))
    return reports


# --- artifacts -------------------------------------------------------------


def _json_float(x: float):
    return x if np.isfinite(x) else "inf"


def write_manifest(path: str | Path, config: ExperimentConfig) -> None:
    Path(path).write_text(json.dumps(config.to_manifest(), indent=2, sort_keys=True))


def read_manifest(path: str | Path) -> ExperimentConfig:
    return ExperimentConfig.from_manifest(json.loads(Path(path).read_text()))


def write_trajectory_csv(path: str | Path, trajectory: Trajectory) -> None:
    """CSV with header t, u, x_1..x_n, y_1..y_n at full double precision."""
    n = trajectory.states.shape[1]
    header = ["t", "u"] + [f"x_{i + 1}" for i in range(n)] + [f"y_{i + 1}" for i in range(n)]
    with open(path, "w", newline="") as handle:
        handle.write(",".join(header) + "\n")
        for j in range(trajectory.n_steps):
            row = (
                [trajectory.times[j], trajectory.excitation_values[j]]
                + list(trajectory.states[j])
                + list(trajectory.derivatives[j])
            )
            handle.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_trajectory_csv(path: str | Path) -> Trajectory:
    data = np.genfromtxt(path, delimiter=",", names=True)
    names = data.dtype.names
    n = (len(names) - 2) // 2
    times = np.asarray(data["t"], dtype=float)
    u = np.asarray(data["u"], dtype=float)
    states = np.column_stack([data[f"x_{i + 1}"] for i in range(n)])
    derivs = np.column_stack([data[f"y_{i + 1}"] for i in range(n)])
    return Trajectory(
        times=times, states=states, derivatives=derivs, excitation_values=u
    )
