import numpy as np
import pytest

from statekrig import benchmarks, emulator, kriging
from statekrig.benchmarks import generate_training_pool
from statekrig.emulator import (
    StateSpaceSurrogate,
    emulate,
    ensemble,
    load_surrogate,
    pool_state_range,
    save_surrogate,
)
from statekrig.errors import DivergenceError, EnsembleFailureError
from statekrig.excitation import RandomHarmonic


class ZeroExcitation:
    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        return float(out) if t.ndim == 0 else out

    def to_manifest(self):
        return {"kind": "zero"}


class LinearComponent:
    """Exact affine derivative model: w @ [x; u] + c, optional variance."""

    def __init__(self, weights, offset=0.0, variance=0.0):
        self.weights = np.asarray(weights, dtype=float)
        self.offset = float(offset)
        self.variance = float(variance)
        self.input_dim = self.weights.size

    def predict_mean(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        values = points @ self.weights + self.offset
        return values if values.size > 1 else float(values[0])

    def predict_variance(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.full(points.shape[0], self.variance)
        return out if out.size > 1 else float(out[0])

    def predict(self, points):
        return self.predict_mean(points), self.predict_variance(points)


def decay_surrogate(rate=1.0, variance=0.0):
    # 1-D system x' = -rate * x + u, exactly representable by the stub.
    comp = LinearComponent([-rate, 1.0], variance=variance)
    return StateSpaceSurrogate(components=[comp], n=1, state_range=np.array([2.0]))


# --- RK4 integration -------------------------------------------------------


def test_rk4_exponential_decay():
    traj = emulate(decay_surrogate(), ZeroExcitation(), np.array([1.0]), 0.01, 1.0)
    assert traj.states[-1, 0] == pytest.approx(np.exp(-1.0), abs=1e-4)
    assert traj.times.size == 101
    assert traj.states[0, 0] == 1.0


def test_rk4_is_fourth_order():
    def end_error(dt):
        traj = emulate(decay_surrogate(), ZeroExcitation(), np.array([1.0]), dt, 1.0)
        return abs(traj.states[-1, 0] - np.exp(-1.0))

    ratio = end_error(0.02) / end_error(0.01)
    assert ratio == pytest.approx(16.0, rel=0.2)


def test_rk4_uses_excitation_at_stage_times():
    # x' = u with u = sin(t): RK4 of a pure quadrature problem must hit the
    # Simpson-rule accuracy of the stage evaluations, not an Euler-like rate.
    comp = LinearComponent([0.0, 1.0])
    model = StateSpaceSurrogate(components=[comp], n=1, state_range=np.array([5.0]))

    class SinDrive:
        def __call__(self, t):
            t = np.asarray(t, dtype=float)
            out = np.sin(t)
            return float(out) if t.ndim == 0 else out

    traj = emulate(model, SinDrive(), np.array([0.0]), 0.01, 3.0)
    assert traj.states[-1, 0] == pytest.approx(1.0 - np.cos(3.0), abs=1e-8)


def test_derivative_columns_are_mean_rhs():
    traj = emulate(decay_surrogate(rate=0.5), ZeroExcitation(), np.array([1.0]), 0.01, 0.5)
    expected = -0.5 * traj.states[:, 0]
    assert np.allclose(traj.derivatives[:, 0], expected)


def test_unstable_surrogate_raises_divergence():
    comp = LinearComponent([40.0, 0.0])  # x' = 40 x explodes fast
    model = StateSpaceSurrogate(components=[comp], n=1, state_range=np.array([1e-6]))
    with pytest.raises(DivergenceError) as err:
        emulate(model, ZeroExcitation(), np.array([1.0]), 0.01, 10.0)
    assert err.value.time is not None
    assert 0.0 < err.value.time <= 10.0


def test_missing_state_range_disables_guard():
    comp = LinearComponent([1.0, 0.0])
    model = StateSpaceSurrogate(components=[comp], n=1)
    traj = emulate(model, ZeroExcitation(), np.array([1.0]), 0.01, 3.0)
    assert traj.states[-1, 0] == pytest.approx(np.exp(3.0), rel=1e-6)


def test_sampled_mode_requires_rng():
    model = decay_surrogate(variance=0.01)
    with pytest.raises(ValueError):
        model.rhs(0.0, np.array([1.0]), 0.0, mode="sampled")
    with pytest.raises(ValueError):
        model.rhs(0.0, np.array([1.0]), 0.0, mode="median")


def test_sampled_mode_reduces_to_mean_at_zero_variance():
    rng = np.random.default_rng(0)
    a = emulate(decay_surrogate(variance=0.0), ZeroExcitation(), np.array([1.0]), 0.01, 1.0)
    b = emulate(
        decay_surrogate(variance=0.0),
        ZeroExcitation(),
        np.array([1.0]),
        0.01,
        1.0,
        mode="sampled",
        rng=rng,
    )
    assert np.array_equal(a.states, b.states)


# --- ensembles -------------------------------------------------------------


def test_ensemble_band_covers_truth_for_noisy_model():
    pred = ensemble(
        decay_surrogate(variance=1e-4), ZeroExcitation(), np.array([1.0]), 0.01, 1.0, n_mc=40, seed=1
    )
    truth = np.exp(-pred.times)
    assert pred.trajectories.shape == (40, 101, 1)
    assert pred.divergent_count == 0
    inside = (pred.lower[:, 0] <= truth) & (truth <= pred.upper[:, 0])
    assert inside[1:].mean() > 0.8
    assert np.max(np.abs(pred.mean[:, 0] - truth)) < 0.05
    assert np.all(pred.lower <= pred.upper)


def test_ensemble_is_seed_deterministic():
    a = ensemble(decay_surrogate(variance=1e-4), ZeroExcitation(), np.array([1.0]), 0.01, 0.5, 10, seed=7)
    b = ensemble(decay_surrogate(variance=1e-4), ZeroExcitation(), np.array([1.0]), 0.01, 0.5, 10, seed=7)
    c = ensemble(decay_surrogate(variance=1e-4), ZeroExcitation(), np.array([1.0]), 0.01, 0.5, 10, seed=8)
    assert np.array_equal(a.trajectories, b.trajectories)
    assert not np.array_equal(a.trajectories, c.trajectories)


def test_ensemble_majority_divergence_fails():
    comp = LinearComponent([40.0, 0.0], variance=1e-6)
    model = StateSpaceSurrogate(components=[comp], n=1, state_range=np.array([1e-6]))
    with pytest.raises(EnsembleFailureError):
        ensemble(model, ZeroExcitation(), np.array([1.0]), 0.01, 5.0, n_mc=8, seed=0)


def test_ensemble_summary_shape():
    pred = ensemble(decay_surrogate(variance=1e-5), ZeroExcitation(), np.array([1.0]), 0.01, 0.2, 6, seed=3)
    summary = pred.to_summary()
    assert summary["n_replicates"] == 6
    assert len(summary["times"]) == 21
    assert len(summary["mean"]) == 21


# --- persistence and pool helpers ------------------------------------------


def fitted_surrogate():
    u = RandomHarmonic(A=0.0964, b=6.5248)
    pool, _ = generate_training_pool(benchmarks.duffing(), [u], 0.01, 2.0)
    rows = np.arange(0, pool.n_rows, 10)
    comps = [
        kriging.fit(pool.inputs[rows], pool.outputs[rows, i]) for i in range(2)
    ]
    return (
        StateSpaceSurrogate(
            components=comps,
            n=2,
            state_range=pool_state_range(pool, 2),
            manifest={"benchmark": "duffing", "dt": 0.01},
        ),
        pool,
        u,
    )


def test_save_load_round_trip(tmp_path):
    model, pool, u = fitted_surrogate()
    path = str(tmp_path / "surrogate.npz")
    save_surrogate(model, path)
    loaded = load_surrogate(path)
    assert loaded.n == 2 and loaded.m == 1
    assert loaded.manifest == {"benchmark": "duffing", "dt": 0.01}
    assert np.array_equal(loaded.state_range, model.state_range)
    query = pool.inputs[::97]
    for orig, back in zip(model.components, loaded.components):
        assert np.array_equal(orig.predict_mean(query), back.predict_mean(query))
        assert np.array_equal(orig.predict_variance(query), back.predict_variance(query))


def test_loaded_surrogate_emulates_identically(tmp_path):
    model, pool, u = fitted_surrogate()
    path = str(tmp_path / "surrogate.npz")
    save_surrogate(model, path)
    loaded = load_surrogate(path)
    a = emulate(model, u, np.zeros(2), 0.01, 1.0)
    b = emulate(loaded, u, np.zeros(2), 0.01, 1.0)
    assert np.array_equal(a.states, b.states)


def test_pool_state_range():
    inputs = np.array([[0.0, -1.0, 9.9], [2.0, 3.0, 9.9], [1.0, 1.0, 9.9]])
    pool_like = type("P", (), {"inputs": inputs})()
    assert np.allclose(pool_state_range(pool_like, 2), [2.0, 4.0])


def test_surrogate_validation():
    comp = LinearComponent([1.0, 0.0])
    with pytest.raises(ValueError):
        StateSpaceSurrogate(components=[comp], n=2)
    bad = LinearComponent([1.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        StateSpaceSurrogate(components=[bad], n=1)
