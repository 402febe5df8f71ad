"""Benchmark dynamical systems and the high-order reference integrator.

Four nonlinear systems under scalar stochastic excitation: a quarter car with
a cubic suspension spring, a Duffing oscillator, a Bouc-Wen hysteretic
oscillator, and a two-story hysteretic shear frame with degradation and
pinching.  Each is exposed as an explicit state-space right-hand side; ground
truth comes from an adaptive 8th-order Runge-Kutta pair at tight tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eigh

from .errors import StiffnessError
from .kriging import TrainingPool

REFERENCE_RTOL = 1e-10
REFERENCE_ATOL = 1e-12


@dataclass
class DynamicalSystem:
    """A stateless right-hand side x' = f(t, x, u) with scalar excitation."""

    name: str
    n: int
    rhs: Callable[[float, np.ndarray, float], np.ndarray]
    params: dict = field(default_factory=dict)
    m: int = 1


@dataclass
class Trajectory:
    """Equidistantly sampled states and exact derivative images of the rhs."""

    times: np.ndarray  # (N_t,)
    states: np.ndarray  # (N_t, n)
    derivatives: np.ndarray  # (N_t, n)
    excitation_values: np.ndarray  # (N_t,)
    excitation_manifest: dict = field(default_factory=dict)

    @property
    def n_steps(self) -> int:
        return self.times.size

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


# --- quarter car -----------------------------------------------------------

QUARTER_CAR_PARAMS = dict(m_s=22.7, m_u=42.0, k_s=1897.02, c=601.8, k_u=1771.4)


def quarter_car_rhs(t: float, x: np.ndarray, u: float) -> np.ndarray:
    """Two-mass quarter car with cubic spring; state [x1, x1', x2, x2'].

    The damper term carries the same sign in both momentum equations (see the
    module notes on sign conventions).
    """
    p = QUARTER_CAR_PARAMS
    spring = p["k_s"] * (x[0] - x[2]) ** 3
    damper = p["c"] * (x[1] - x[3])
    return np.array(
        [
            x[1],
            (-spring - damper) / p["m_s"],
            x[3],
            (spring - damper + p["k_u"] * (u - x[2])) / p["m_u"],
        ]
    )


def quarter_car() -> DynamicalSystem:
    return DynamicalSystem("quarter_car", 4, quarter_car_rhs, dict(QUARTER_CAR_PARAMS))


# --- Duffing oscillator ----------------------------------------------------

DUFFING_PARAMS = dict(zeta=0.05, omega_n=10.0, beta=2000.0)


def duffing_rhs(t: float, x: np.ndarray, u: float) -> np.ndarray:
    """Duffing oscillator x'' + 2 zeta w x' + w^2 x + beta x^3 = u."""
    p = DUFFING_PARAMS
    return np.array(
        [
            x[1],
            u
            - 2.0 * p["zeta"] * p["omega_n"] * x[1]
            - p["omega_n"] ** 2 * x[0]
            - p["beta"] * x[0] ** 3,
        ]
    )


def duffing() -> DynamicalSystem:
    return DynamicalSystem("duffing", 2, duffing_rhs, dict(DUFFING_PARAMS))


# --- Bouc-Wen oscillator ---------------------------------------------------

BOUC_WEN_PARAMS = dict(
    m=6e4, k=5e6, zeta=0.05, alpha=0.5, x_y=0.04, beta=0.5, gamma=0.5, A=1.0, d=3
)


def bouc_wen_rhs(t: float, x: np.ndarray, u: float) -> np.ndarray:
    """Bouc-Wen hysteretic oscillator; state [x, x', z]."""
    p = BOUC_WEN_PARAMS
    c_over_m = 2.0 * p["zeta"] * np.sqrt(p["k"] / p["m"])
    disp, vel, z = x
    abs_z = abs(z)
    z_dot = (
        p["A"] * vel
        - p["beta"] * abs(vel) * abs_z ** (p["d"] - 1) * z
        - p["gamma"] * vel * abs_z ** p["d"]
    ) / p["x_y"]
    accel = (
        -c_over_m * vel
        - (p["k"] / p["m"]) * (p["alpha"] * disp + (1.0 - p["alpha"]) * p["x_y"] * z)
        + u
    )
    return np.array([vel, accel, z_dot])


def bouc_wen() -> DynamicalSystem:
    return DynamicalSystem("bouc_wen", 3, bouc_wen_rhs, dict(BOUC_WEN_PARAMS))


# --- two-story hysteretic frame -------------------------------------------

TWO_STORY_PARAMS = dict(
    M_j=2.6e5,
    K_j=1e8,
    alpha=0.04,
    beta=15.0,
    gamma=150.0,
    d_nu=1000.0,
    d_eta=1000.0,
    p=1000.0,
    q=0.25,
    d_psi=5.0,
    lam=0.5,
    zeta_s=0.99,
    psi=0.05,
    zeta_modal=0.05,
)


def two_story_matrices() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Lumped mass, initial elastic stiffness, and Rayleigh damping matrices.

    The Rayleigh coefficients are calibrated so that the first two modes of
    the undamped initial-stiffness system both have the target modal damping
    ratio.
    """
    p = TWO_STORY_PARAMS
    M = np.diag([p["M_j"], p["M_j"]])
    k = p["K_j"]
    K0 = np.array([[2.0 * k, -k], [-k, k]])
    eigvals = eigh(K0, M, eigvals_only=True)
    omega = np.sqrt(eigvals)  # ascending modal frequencies
    zeta = p["zeta_modal"]
    w1, w2 = omega[0], omega[1]
    a0 = 2.0 * zeta * w1 * w2 / (w1 + w2)
    a1 = 2.0 * zeta / (w1 + w2)
    C = a0 * M + a1 * K0
    return M, K0, C


_TWO_STORY_M, _TWO_STORY_K0, _TWO_STORY_C = two_story_matrices()


def _bouc_wen_extended_zdot(drift_rate: float, z: float, energy: float) -> float:
    """Auxiliary hysteretic displacement rate with degradation and pinching."""
    p = TWO_STORY_PARAMS
    kappa = 1.0 + p["d_nu"] * energy
    varpi = drift_rate - kappa * (
        p["beta"] * abs(drift_rate) * z + p["gamma"] * drift_rate * abs(z)
    )
    xi = p["zeta_s"] * (1.0 - np.exp(-p["p"] * energy))
    pinch_num = z * np.sign(drift_rate) - p["q"] / ((p["beta"] + p["gamma"]) * kappa)
    pinch_den = (p["psi"] + p["d_psi"] * energy) * (p["lam"] + p["zeta_s"] * xi)
    pinch = xi * np.exp(-((pinch_num / pinch_den) ** 2))
    return varpi / (1.0 + p["d_eta"] * energy) * (1.0 - pinch)


def two_story_rhs(t: float, x: np.ndarray, u: float) -> np.ndarray:
    """Two-story shear frame; state [x1, x2, x1', x2', z1, z2, e1, e2].

    Inter-story restoring forces follow the extended Bouc-Wen law per story;
    the nodal restoring vector assembles as [G1 - G2, G2].
    """
    p = TWO_STORY_PARAMS
    disp = x[0:2]
    vel = x[2:4]
    z = x[4:6]
    energy = x[6:8]

    drifts = np.array([disp[0], disp[1] - disp[0]])
    drift_rates = np.array([vel[0], vel[1] - vel[0]])
    story_force = p["alpha"] * p["K_j"] * drifts + (1.0 - p["alpha"]) * p["K_j"] * z
    G = np.array([story_force[0] - story_force[1], story_force[1]])

    accel = -u - np.linalg.solve(_TWO_STORY_M, _TWO_STORY_C @ vel + G)
    z_dot = np.array(
        [
            _bouc_wen_extended_zdot(drift_rates[0], z[0], energy[0]),
            _bouc_wen_extended_zdot(drift_rates[1], z[1], energy[1]),
        ]
    )
    energy_dot = drift_rates * z
    return np.concatenate([vel, accel, z_dot, energy_dot])


def two_story() -> DynamicalSystem:
    return DynamicalSystem("two_story", 8, two_story_rhs, dict(TWO_STORY_PARAMS))


REGISTRY: dict[str, Callable[[], DynamicalSystem]] = {
    "quarter-car": quarter_car,
    "duffing": duffing,
    "bouc-wen": bouc_wen,
    "two-story": two_story,
}


# --- reference integration -------------------------------------------------


def _time_grid(dt: float, T: float) -> np.ndarray:
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    n_steps = round(T / dt)
    if abs(n_steps * dt - T) > 1e-9 * max(1.0, T):
        raise ValueError("T must be an integer multiple of dt")
    return dt * np.arange(n_steps + 1)


def reference_integrate(
    system: DynamicalSystem,
    excitation,
    x0: np.ndarray,
    dt: float,
    T: float,
    rtol: float = REFERENCE_RTOL,
    atol: float = REFERENCE_ATOL,
) -> Trajectory:
    """Integrate the true system with DOP853 and sample on the uniform grid.

    Stored derivatives are exact images of the rhs at the sampled states, not
    finite differences.
    """
    times = _time_grid(dt, T)
    x0 = np.asarray(x0, dtype=float)

    def fun(t, x):
        return system.rhs(t, x, excitation(t))

    sol = solve_ivp(
        fun,
        (0.0, T),
        x0,
        method="DOP853",
        t_eval=times,
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise StiffnessError(
            f"reference integration of {system.name} failed near t = {sol.t[-1] if sol.t.size else 0.0:.6g}: {sol.message}",
            time=float(sol.t[-1]) if sol.t.size else 0.0,
        )
    states = sol.y.T
    u_values = np.asarray(excitation(times), dtype=float)
    derivatives = np.empty_like(states)
    for j, t in enumerate(times):
        derivatives[j] = system.rhs(t, states[j], u_values[j])
    return Trajectory(
        times=times,
        states=states,
        derivatives=derivatives,
        excitation_values=u_values,
        excitation_manifest=excitation.to_manifest() if hasattr(excitation, "to_manifest") else {},
    )


def generate_training_pool(
    system: DynamicalSystem,
    excitations: list,
    dt: float,
    T: float,
    x0: np.ndarray | None = None,
) -> tuple[TrainingPool, list[Trajectory]]:
    """Concatenate reference trajectories into one candidate pool.

    Pool rows are [x(t_j); u(t_j)] with the matching derivative as output and
    the originating history index recorded per row.
    """
    if not excitations:
        raise ValueError("need at least one excitation realization")
    if x0 is None:
        x0 = np.zeros(system.n)
    trajectories = [reference_integrate(system, exc, x0, dt, T) for exc in excitations]
    inputs = np.vstack(
        [np.column_stack([tr.states, tr.excitation_values]) for tr in trajectories]
    )
    outputs = np.vstack([tr.derivatives for tr in trajectories])
    ids = np.concatenate(
        [np.full(tr.n_steps, k, dtype=int) for k, tr in enumerate(trajectories)]
    )
    stamps = np.concatenate([tr.times for tr in trajectories])
    pool = TrainingPool(inputs=inputs, outputs=outputs, source_history_id=ids, time_stamp=stamps)
    return pool, trajectories
