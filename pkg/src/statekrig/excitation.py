"""Stochastic excitation models with closed-form evaluation.

Two processes are provided: a band-limited spectral representation of white
noise ground acceleration, and a random-amplitude random-frequency harmonic
load.  Both are analytic in t, so integrators can evaluate them exactly at
arbitrary stage times.  Realizations serialize to plain dicts for manifests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class SpectralWhiteNoise:
    """u(t) = sqrt(2 S dw) * sum_i [v_i cos(w_i t) + v_{d/2+i} sin(w_i t)].

    The frequency grid is w_i = i * dw with dw = 30 pi / d for i = 1..d/2, so
    the process is band-limited to (d/2) dw = 15 pi rad/s.  The coefficient
    vector holds d independent normal draws whose standard deviation is the
    variability magnification factor.
    """

    S: float
    d: int
    coefficients: np.ndarray  # (d,)
    sigma_magnification: float = 1.0

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if self.S < 0.0:
            raise ValueError("spectral intensity must be nonnegative")
        if self.d % 2 != 0 or self.d <= 0:
            raise ValueError("d must be an even positive integer")
        if self.coefficients.shape != (self.d,):
            raise ValueError("coefficient vector must have length d")
        if self.sigma_magnification <= 0.0:
            raise ValueError("magnification factor must be positive")

    @property
    def delta_omega(self) -> float:
        return 30.0 * np.pi / self.d

    @property
    def frequencies(self) -> np.ndarray:
        return self.delta_omega * np.arange(1, self.d // 2 + 1)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        phase = np.multiply.outer(t, self.frequencies)  # (..., d/2)
        half = self.d // 2
        amp = np.sqrt(2.0 * self.S * self.delta_omega)
        u = amp * (
            np.cos(phase) @ self.coefficients[:half]
            + np.sin(phase) @ self.coefficients[half:]
        )
        return float(u) if t.ndim == 0 else u

    def to_manifest(self) -> dict:
        return {
            "kind": "spectral_white_noise",
            "S": self.S,
            "d": self.d,
            "sigma_magnification": self.sigma_magnification,
            "coefficients": self.coefficients.tolist(),
        }


@dataclass
class RandomHarmonic:
    """u(t) = A sin(b t) with A ~ U(0.09, 0.11) m, b ~ U(1.8 pi, 2.2 pi) rad/s."""

    A: float
    b: float

    AMPLITUDE_SUPPORT = (0.09, 0.11)
    FREQUENCY_SUPPORT = (1.8 * np.pi, 2.2 * np.pi)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        u = self.A * np.sin(self.b * t)
        return float(u) if t.ndim == 0 else u

    def to_manifest(self) -> dict:
        return {"kind": "random_harmonic", "A": self.A, "b": self.b}


def sample_spectral(
    S: float, d: int, sigma: float, rng: np.random.Generator
) -> SpectralWhiteNoise:
    """Draw a spectral realization with coefficient std ``sigma``."""
    if S <= 0.0 or d <= 0 or d % 2 != 0 or sigma <= 0.0:
        raise ValueError("require S > 0, even positive d, sigma > 0")
    coefficients = rng.normal(0.0, sigma, size=d)
    return SpectralWhiteNoise(S=S, d=d, coefficients=coefficients, sigma_magnification=sigma)


def sample_harmonic(rng: np.random.Generator) -> RandomHarmonic:
    a_lo, a_hi = RandomHarmonic.AMPLITUDE_SUPPORT
    b_lo, b_hi = RandomHarmonic.FREQUENCY_SUPPORT
    return RandomHarmonic(A=float(rng.uniform(a_lo, a_hi)), b=float(rng.uniform(b_lo, b_hi)))


def from_manifest(entry: dict):
    """Rebuild a realization from its manifest dict."""
    kind = entry["kind"]
    if kind == "spectral_white_noise":
        return SpectralWhiteNoise(
            S=entry["S"],
            d=entry["d"],
            coefficients=np.asarray(entry["coefficients"], dtype=float),
            sigma_magnification=entry["sigma_magnification"],
        )
    if kind == "random_harmonic":
        return RandomHarmonic(A=entry["A"], b=entry["b"])
    raise ValueError(f"unknown excitation kind: {kind!r}")


def magnification_schedule(n_t: int, single_sigma: float = 1.5) -> np.ndarray:
    """Per-history magnification factors sigma_k = 1 + (k-1)/(n_t-1).

    With a single history the mixture formula degenerates, so the supplied
    standalone factor (default 1.5) is returned instead.
    """
    if n_t < 1:
        raise ValueError("need at least one training history")
    if n_t == 1:
        return np.array([single_sigma])
    k = np.arange(1, n_t + 1, dtype=float)
    return 1.0 + (k - 1.0) / (n_t - 1.0)
