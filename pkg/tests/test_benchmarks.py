import numpy as np
import pytest

from statekrig import benchmarks
from statekrig.benchmarks import (
    DynamicalSystem,
    bouc_wen_rhs,
    duffing_rhs,
    generate_training_pool,
    quarter_car_rhs,
    reference_integrate,
    two_story_matrices,
    two_story_rhs,
)
from statekrig.excitation import RandomHarmonic, SpectralWhiteNoise, sample_spectral


class ConstantExcitation:
    def __init__(self, value=0.0):
        self.value = value

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full_like(t, self.value, dtype=float)
        return float(out) if t.ndim == 0 else out

    def to_manifest(self):
        return {"kind": "constant", "value": self.value}


# --- right-hand sides ------------------------------------------------------


def test_quarter_car_equilibrium():
    assert np.allclose(quarter_car_rhs(0.0, np.zeros(4), 0.0), 0.0)


def test_quarter_car_spring_terms():
    y = quarter_car_rhs(0.0, np.array([0.1, 0.0, 0.0, 0.0]), 0.0)
    assert y[1] == pytest.approx(-1897.02 * 0.001 / 22.7)
    assert y[3] == pytest.approx(1897.02 * 0.001 / 42.0)


def test_quarter_car_road_input():
    y = quarter_car_rhs(0.0, np.zeros(4), 0.1)
    assert y[3] == pytest.approx(1771.4 * 0.1 / 42.0)
    assert np.allclose(y[:3], 0.0)


def test_duffing_values():
    assert np.allclose(duffing_rhs(0.0, np.zeros(2), 0.0), 0.0)
    y = duffing_rhs(0.0, np.array([0.01, 0.0]), 0.0)
    assert y[1] == pytest.approx(-100.0 * 0.01 - 2000.0 * 1e-6)
    y = duffing_rhs(0.0, np.array([0.0, 1.0]), 0.0)
    assert y[1] == pytest.approx(-1.0)


def test_bouc_wen_values():
    assert np.allclose(bouc_wen_rhs(0.0, np.zeros(3), 0.0), 0.0)
    y = bouc_wen_rhs(0.0, np.array([0.0, 1.0, 0.0]), 0.0)
    assert y[2] == pytest.approx(25.0)
    assert y[1] == pytest.approx(-2.0 * 0.05 * np.sqrt(5e6 / 6e4))


def test_two_story_equilibrium_and_frozen_velocity():
    assert np.allclose(two_story_rhs(0.0, np.zeros(8), 0.0), 0.0)
    # Zero drift rates freeze z and the dissipated energy regardless of z, e.
    state = np.array([0.01, 0.02, 0.0, 0.0, 0.004, -0.002, 0.001, 0.003])
    y = two_story_rhs(0.0, state, 0.0)
    assert np.allclose(y[4:8], 0.0)


def test_two_story_restoring_force_assembly():
    state = np.zeros(8)
    state[0] = 0.001
    state[1] = 0.001  # equal displacements: drift 2 = 0
    y = two_story_rhs(0.0, state, 0.0)
    force_1 = 0.04 * 1e8 * 0.001
    assert y[2] == pytest.approx(-force_1 / 2.6e5)
    assert y[3] == pytest.approx(0.0)


def test_two_story_rayleigh_calibration():
    M, K0, C = two_story_matrices()
    from scipy.linalg import eigh

    eigvals, vectors = eigh(K0, M)
    omega = np.sqrt(eigvals)
    for k in range(2):
        v = vectors[:, k]
        zeta = (v @ C @ v) / (2.0 * omega[k] * (v @ M @ v))
        assert zeta == pytest.approx(0.05, abs=1e-10)


# --- reference integration -------------------------------------------------


def test_exponential_decay():
    system = DynamicalSystem("decay", 1, lambda t, x, u: -x)
    traj = reference_integrate(system, ConstantExcitation(), np.array([1.0]), 0.01, 1.0)
    assert traj.states[-1, 0] == pytest.approx(np.exp(-1.0), abs=1e-9)


def test_forced_integral():
    system = DynamicalSystem("drive", 1, lambda t, x, u: np.array([u]))

    class SinDrive:
        def __call__(self, t):
            t = np.asarray(t, dtype=float)
            out = np.sin(t)
            return float(out) if t.ndim == 0 else out

    traj = reference_integrate(system, SinDrive(), np.array([0.0]), 0.01, 3.0)
    assert traj.states[-1, 0] == pytest.approx(1.0 - np.cos(3.0), abs=1e-9)


def test_linear_oscillator_energy_drift():
    def rhs(t, x, u):
        return np.array([x[1], -x[0]])

    system = DynamicalSystem("oscillator", 2, rhs)
    traj = reference_integrate(system, ConstantExcitation(), np.array([1.0, 0.0]), 0.01, 10.0)
    energy = 0.5 * (traj.states[:, 0] ** 2 + traj.states[:, 1] ** 2)
    assert np.max(np.abs(energy - energy[0])) / energy[0] < 1e-8


def test_tolerance_convergence():
    rng = np.random.default_rng(1)
    exc = sample_spectral(0.05, 150, 1.0, rng)
    system = benchmarks.bouc_wen()
    a = reference_integrate(system, exc, np.zeros(3), 0.01, 2.0)
    b = reference_integrate(system, exc, np.zeros(3), 0.01, 2.0, rtol=5e-11, atol=5e-13)
    scale = np.max(np.abs(a.states), axis=0) + 1e-12
    assert np.max(np.abs(a.states - b.states) / scale) < 1e-8


def test_derivatives_are_exact_rhs_images():
    rng = np.random.default_rng(2)
    exc = sample_spectral(0.1, 150, 1.0, rng)
    system = benchmarks.duffing()
    traj = reference_integrate(system, exc, np.zeros(2), 0.002, 0.5)
    for j in (0, 100, 250):
        expected = system.rhs(traj.times[j], traj.states[j], traj.excitation_values[j])
        assert np.array_equal(traj.derivatives[j], expected)


def test_grid_validation():
    system = DynamicalSystem("decay", 1, lambda t, x, u: -x)
    with pytest.raises(ValueError):
        reference_integrate(system, ConstantExcitation(), np.array([1.0]), 0.3, 1.0)
    with pytest.raises(ValueError):
        reference_integrate(system, ConstantExcitation(), np.array([1.0]), -0.1, 1.0)


# --- training pool ---------------------------------------------------------


def test_pool_row_counts_single_history():
    u = RandomHarmonic(A=0.0964, b=6.5248)
    pool, trajectories = generate_training_pool(benchmarks.quarter_car(), [u], 0.002, 10.0)
    assert pool.n_rows == 5001
    assert trajectories[0].n_steps == 5001
    assert pool.inputs.shape == (5001, 5)
    assert pool.outputs.shape == (5001, 4)


def test_pool_concatenates_histories():
    u1 = RandomHarmonic(A=0.095, b=6.0)
    u2 = RandomHarmonic(A=0.105, b=6.8)
    pool, _ = generate_training_pool(benchmarks.quarter_car(), [u1, u2], 0.002, 10.0)
    assert pool.n_rows == 10002
    assert set(pool.source_history_id) == {0, 1}


def test_bouc_wen_pool_length():
    exc = SpectralWhiteNoise(S=0.05, d=150, coefficients=np.zeros(150))
    pool, _ = generate_training_pool(benchmarks.bouc_wen(), [exc], 0.002, 8.0)
    assert pool.n_rows == 4001


def test_pool_requires_excitations():
    with pytest.raises(ValueError):
        generate_training_pool(benchmarks.duffing(), [], 0.002, 1.0)
