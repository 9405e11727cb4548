from __future__ import annotations

import pytest

from app.schemas.params import ParamSet
from app.services.interval_system import build_family
from app.services.realization import FaultInjection, Realization, build_action
from app.services.verification import (
    EXACT_SUITES,
    run_suites,
    suite_c1,
    suite_permutation,
    suite_pt,
    suite_relations,
)


PARAMS = ParamSet(alpha=0.4, p=10.0, q=10.0, r=4.0 / 3.0)


@pytest.fixture(scope="module")
def realization() -> Realization:
    return build_action(build_family(PARAMS, 3))


def test_exact_suites_need_no_realization() -> None:
    results = run_suites(EXACT_SUITES, group_samples=200, lattice_samples=500, seed=3)

    assert [result.name for result in results] == ["group", "lattice"]
    assert all(result.passed for result in results)
    assert results[1].metrics["homomorphism_interval"] == 0


def test_realization_is_built_once_and_only_when_needed(realization: Realization) -> None:
    calls = []

    def build() -> Realization:
        calls.append(1)
        return realization

    results = run_suites(["group", "c1", "permutation"], build, group_samples=50)

    assert len(calls) == 1
    assert all(result.passed for result in results)


def test_action_suites_pass(realization: Realization) -> None:
    assert suite_permutation(realization).passed
    assert suite_c1(realization).passed

    relations = suite_relations(realization, points=20, seed=1)
    assert relations.passed
    assert relations.metrics["max_drift"] < 1e-8


def test_pt_suite_passes() -> None:
    result = suite_pt(samples=50, seed=2)

    assert result.passed, result.failures
    assert result.metrics["affine"] < 1e-12


def test_c1_suite_catches_a_perturbed_length() -> None:
    faulty = build_action(build_family(PARAMS, 3), fault=FaultInjection("f", (0, 0, 1)))

    result = suite_c1(faulty)

    assert not result.passed
    assert result.failures[0].startswith("C1 mismatch")


def test_unknown_suite() -> None:
    with pytest.raises(ValueError):
        run_suites(["holder"])


def test_action_suite_without_realization() -> None:
    with pytest.raises(ValueError):
        run_suites(["c1"])
