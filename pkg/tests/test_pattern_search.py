import numpy as np
import pytest

from statekrig.errors import RejectedStartError, UnfittableDataError
from statekrig.pattern_search import SearchConfig, hooke_jeeves, multi_start


def quadratic(x):
    return (x[0] - 2.0) ** 2 + (x[1] + 1.0) ** 2


def box(lo, hi, dim=2):
    return np.tile([lo, hi], (dim, 1)).astype(float)


def test_finds_quadratic_minimum():
    config = SearchConfig(bounds=box(-5, 5))
    result = hooke_jeeves(quadratic, np.zeros(2), config)
    width = 10.0
    assert np.all(np.abs(result.best_point - [2.0, -1.0]) <= config.min_step * width * 4)


def test_start_at_minimizer_never_worsens():
    config = SearchConfig(bounds=box(-5, 5))
    result = hooke_jeeves(quadratic, np.array([2.0, -1.0]), config)
    assert result.best_value <= quadratic(np.array([2.0, -1.0]))


def test_constant_objective_returns_start():
    config = SearchConfig(bounds=box(-1, 1))
    start = np.array([0.3, -0.2])
    result = hooke_jeeves(lambda x: 7.0, start, config)
    assert result.best_value == 7.0
    assert np.allclose(result.best_point, start)


def test_result_respects_bounds():
    config = SearchConfig(bounds=box(-1, 1))
    # Unconstrained minimizer lies outside the box.
    result = hooke_jeeves(lambda x: np.sum((x - 3.0) ** 2), np.zeros(2), config)
    assert np.all(result.best_point <= 1.0)
    assert np.all(result.best_point >= -1.0)
    assert np.allclose(result.best_point, [1.0, 1.0])


def test_evaluation_budget_respected():
    calls = []

    def counting(x):
        calls.append(1)
        return np.sum(x * x)

    config = SearchConfig(bounds=box(-5, 5), max_evaluations=50)
    hooke_jeeves(counting, np.array([4.0, 4.0]), config)
    assert len(calls) <= 50 + (2 * 2 + 1)


def test_rejected_start_raises():
    config = SearchConfig(bounds=box(-1, 1))
    with pytest.raises(RejectedStartError):
        hooke_jeeves(lambda x: np.inf, np.zeros(2), config)


def test_multistart_beats_or_matches_single_start():
    rng = np.random.default_rng(7)

    def rastrigin_like(x):
        return np.sum(x * x - 2.0 * np.cos(3.0 * x)) + 4.0

    config = SearchConfig(bounds=box(-4, 4), n_starts=8, seed=3)
    multi = multi_start(rastrigin_like, config)
    single = hooke_jeeves(rastrigin_like, np.zeros(2), config)
    assert multi.best_value <= single.best_value + 1e-12


def test_single_start_degenerates_to_center_run():
    config = SearchConfig(bounds=box(-5, 5), n_starts=1)
    multi = multi_start(quadratic, config)
    center = hooke_jeeves(quadratic, np.zeros(2), config)
    assert multi.best_value == center.best_value
    assert np.array_equal(multi.best_point, center.best_point)


def test_same_seed_is_bitwise_identical():
    def bumpy(x):
        return np.sin(5 * x[0]) + x[1] ** 2 + 0.1 * x[0]

    config = SearchConfig(bounds=box(-3, 3), n_starts=5, seed=11)
    a = multi_start(bumpy, config)
    b = multi_start(bumpy, config)
    assert np.array_equal(a.best_point, b.best_point)
    assert a.best_value == b.best_value


def test_all_starts_rejected_raises():
    config = SearchConfig(bounds=box(-1, 1), n_starts=3)
    with pytest.raises(UnfittableDataError):
        multi_start(lambda x: np.inf, config)


def test_accepted_moves_strictly_decrease():
    seen = []

    def tracking(x):
        value = quadratic(x)
        seen.append(value)
        return value

    config = SearchConfig(bounds=box(-5, 5))
    result = hooke_jeeves(tracking, np.zeros(2), config)
    assert result.best_value <= min(seen)


def test_invalid_config_rejected():
    with pytest.raises(ValueError):
        SearchConfig(bounds=np.array([[1.0, -1.0]]))
    with pytest.raises(ValueError):
        SearchConfig(bounds=box(-1, 1), step_shrink=1.5)
    with pytest.raises(ValueError):
        SearchConfig(bounds=box(-1, 1), min_step=0.5, initial_step=0.25)
