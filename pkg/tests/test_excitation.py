import numpy as np
import pytest

from statekrig import excitation


def test_zero_coefficients_give_zero_signal():
    process = excitation.SpectralWhiteNoise(S=0.1, d=150, coefficients=np.zeros(150))
    t = np.linspace(0.0, 10.0, 101)
    assert np.all(process(t) == 0.0)


def test_band_limit():
    process = excitation.SpectralWhiteNoise(S=0.1, d=150, coefficients=np.zeros(150))
    assert process.frequencies.max() == pytest.approx(15.0 * np.pi)
    assert process.delta_omega == pytest.approx(30.0 * np.pi / 150)


def test_pointwise_variance_matches_theory():
    # Var u(t) = 2 S dw * (d/2) * sigma^2 = S dw d = 30 pi S.
    rng = np.random.default_rng(123)
    draws = np.array(
        [excitation.sample_spectral(0.1, 150, 1.0, rng)(1.234) for _ in range(10_000)]
    )
    assert np.var(draws) == pytest.approx(3.0 * np.pi, rel=0.05)
    assert abs(np.mean(draws)) < 0.1


def test_magnification_scales_variance_quadratically():
    rng1 = np.random.default_rng(5)
    rng2 = np.random.default_rng(5)
    base = np.array([excitation.sample_spectral(0.1, 150, 1.0, rng1)(0.7) for _ in range(4000)])
    magnified = np.array(
        [excitation.sample_spectral(0.1, 150, 2.0, rng2)(0.7) for _ in range(4000)]
    )
    assert np.var(magnified) / np.var(base) == pytest.approx(4.0, rel=1e-12)


def test_spectral_rejects_bad_parameters():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        excitation.sample_spectral(-1.0, 150, 1.0, rng)
    with pytest.raises(ValueError):
        excitation.sample_spectral(0.1, 151, 1.0, rng)
    with pytest.raises(ValueError):
        excitation.sample_spectral(0.1, 150, 0.0, rng)


def test_harmonic_zero_at_origin_and_bounded():
    rng = np.random.default_rng(99)
    for _ in range(20):
        u = excitation.sample_harmonic(rng)
        assert u(0.0) == 0.0
        t = np.linspace(0.0, 10.0, 2001)
        assert np.max(np.abs(u(t))) <= 0.11
        assert 0.09 <= u.A <= 0.11
        assert 1.8 * np.pi <= u.b <= 2.2 * np.pi


def test_paper_harmonic_draw_evaluates():
    u = excitation.RandomHarmonic(A=0.0964, b=6.5248)
    assert u(0.25) == pytest.approx(0.0964 * np.sin(6.5248 * 0.25))


def test_same_seed_reproduces_realization():
    a = excitation.sample_spectral(0.1, 150, 1.5, np.random.default_rng(77))
    b = excitation.sample_spectral(0.1, 150, 1.5, np.random.default_rng(77))
    c = excitation.sample_spectral(0.1, 150, 1.5, np.random.default_rng(78))
    assert np.array_equal(a.coefficients, b.coefficients)
    assert not np.array_equal(a.coefficients, c.coefficients)


def test_manifest_round_trip():
    rng = np.random.default_rng(3)
    for sample in (
        excitation.sample_spectral(0.05, 150, 2.0, rng),
        excitation.sample_harmonic(rng),
    ):
        rebuilt = excitation.from_manifest(sample.to_manifest())
        t = np.linspace(0.0, 8.0, 57)
        assert np.array_equal(rebuilt(t), sample(t))


@pytest.mark.parametrize(
    "n_t,expected",
    [
        (3, [1.0, 1.5, 2.0]),
        (2, [1.0, 2.0]),
        (5, [1.0, 1.25, 1.5, 1.75, 2.0]),
    ],
)
def test_magnification_schedule(n_t, expected):
    assert np.allclose(excitation.magnification_schedule(n_t), expected)


def test_single_history_uses_standalone_factor():
    assert np.array_equal(excitation.magnification_schedule(1), [1.5])
    assert np.array_equal(excitation.magnification_schedule(1, single_sigma=2.0), [2.0])
    with pytest.raises(ValueError):
        excitation.magnification_schedule(0)
