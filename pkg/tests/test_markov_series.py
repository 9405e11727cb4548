from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from app.services.markov_series import (
    MarkovSeriesError,
    markov_expectation,
    power_length,
    transition_probabilities,
)


LENGTH = power_length([10.0, 10.0, 4.0 / 3.0])


def test_transition_probabilities_are_exact() -> None:
    assert transition_probabilities([1, 0, 0]) == (Fraction(1, 2), Fraction(1, 4), Fraction(1, 4))
    assert transition_probabilities([0, 0, 0]) == (Fraction(1, 3),) * 3
    assert sum(transition_probabilities([4, 0, 7, 2])) == 1


@pytest.mark.parametrize("state", [[], [1, -1, 0]])
def test_invalid_state(state: list[int]) -> None:
    with pytest.raises(MarkovSeriesError) as exc:
        transition_probabilities(state)

    assert exc.value.code == "invalid_state"


def test_power_length() -> None:
    states = np.array([[0, 0, 0], [1, 0, 0], [0, 0, 8]])

    assert np.allclose(LENGTH(states), [1.0, 0.5, 1.0 / 17.0])


def test_first_step_is_deterministic() -> None:
    report = markov_expectation(3, LENGTH, 0.4, paths=64, horizons=[1], seed=1)

    row = report.horizons[0]
    assert row.mean == pytest.approx(1.0 + 0.5**0.4)
    assert row.std_error == pytest.approx(0.0, abs=1e-15)
    assert report.deltas == []


def test_running_means_grow_and_repeat_for_a_seed() -> None:
    first = markov_expectation(3, LENGTH, 0.4, paths=300, horizons=[10, 50, 200], seed=9, batch_paths=128)
    second = markov_expectation(3, LENGTH, 0.4, paths=300, horizons=[200, 10, 50], seed=9, batch_paths=128)

    means = [row.mean for row in first.horizons]
    assert [row.horizon for row in first.horizons] == [10, 50, 200]
    assert means == [row.mean for row in second.horizons]
    assert means[0] < means[1] < means[2] <= 201.0
    for row in first.horizons:
        assert row.band[0] <= row.mean <= row.band[1]
    assert len(first.deltas) == 2
    assert first.paths == 300 and first.seed == 9


def test_different_seeds_differ() -> None:
    a = markov_expectation(2, power_length([3.0, 3.0]), 0.5, paths=200, horizons=[40], seed=1)
    b = markov_expectation(2, power_length([3.0, 3.0]), 0.5, paths=200, horizons=[40], seed=2)

    assert a.horizons[0].mean != b.horizons[0].mean


@pytest.mark.parametrize(
    "kwargs, code",
    [
        ({"d": 0}, "invalid_dimension"),
        ({"alpha": 0.0}, "invalid_alpha"),
        ({"paths": 1}, "invalid_paths"),
        ({"horizons": [0, 5]}, "invalid_horizons"),
    ],
)
def test_invalid_arguments(kwargs: dict, code: str) -> None:
    args = {"d": 3, "length_fn": LENGTH, "alpha": 0.4, "paths": 10, "horizons": [5]}
    args.update(kwargs)

    with pytest.raises(MarkovSeriesError) as exc:
        markov_expectation(**args)

    assert exc.value.code == code


def test_three_dimensional_series_settles() -> None:
    report = markov_expectation(3, LENGTH, 0.4, paths=4000, horizons=[100, 1000, 10000], seed=20240611)

    means = [row.mean for row in report.horizons]
    assert means == pytest.approx([3.1289] * 3, abs=0.03)
    assert means[0] <= means[1] <= means[2]
    assert report.deltas[1] <= report.deltas[0]
    assert report.cauchy
