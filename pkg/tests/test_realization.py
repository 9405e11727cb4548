from __future__ import annotations

import math

import numpy as np
import pytest

from app.schemas.params import ParamSet
from app.services.group_core import format_word, parse_word
from app.services.interval_system import build_family
from app.services.lattice_action import LatticePoint
from app.services.realization import (
    FaultInjection,
    Realization,
    UnsafeEvaluationError,
    as_word,
    build_action,
    check_c1_matching,
    expand_commutators,
    induced_permutation_check,
)


PARAMS = ParamSet(alpha=0.4, p=10.0, q=10.0, r=4.0 / 3.0)


@pytest.fixture(scope="module")
def realization() -> Realization:
    return build_action(build_family(PARAMS, 3))


def test_commutator_letters_expand_to_generator_words() -> None:
    assert format_word(expand_commutators(parse_word("a"))) == "f e f^-1 e^-1"
    assert format_word(as_word("b^-1")) == "f d f^-1 d^-1"
    assert len(as_word("c")) == 10
    assert as_word("c").letters() == {"d", "e", "f"}


def test_maps_exist_only_where_predecessors_do(realization: Realization) -> None:
    assert realization.is_safe("e", 1, (0, 0, 0))
    assert not realization.is_safe("e", 1, (3, 0, 0))
    assert not realization.is_safe("d", -1, (0, -3, 1))
    assert not realization.is_safe("f", 1, (0, 0, -3))
    assert not realization.is_safe("f", 1, (1, 1, 3))


def test_index_paths_follow_the_interval_convention(realization: Realization) -> None:
    assert realization.index_path("e", (0, 0, 0)) == [(0, 0, 0), (1, 0, 0)]
    assert realization.index_path("a", (1, 1, 0))[-1] == LatticePoint(1, 1, 1)
    assert realization.index_path("c", (0, 0, 1))[-1] == LatticePoint(0, 0, 0)
    assert realization.index_path("e", (3, 0, 0)) is None


def test_unsafe_prefix_is_reported(realization: Realization) -> None:
    with pytest.raises(UnsafeEvaluationError) as exc:
        realization.eval_local("e", (3, 1, 0), [0.5])

    assert exc.value.code == "unsafe_prefix"
    assert exc.value.prefix == "e"
    assert exc.value.index == (3, 1, 0)


def test_c1_matching_is_exact(realization: Realization) -> None:
    report = check_c1_matching(realization)

    assert report.endpoints_checked > 0
    assert report.max_mismatch == 0.0
    assert report.worst is None
    assert report.max_limit_mismatch < 1e-4
    assert report.max_closed_form_gap < 1e-4


def test_injected_fault_breaks_c1_matching() -> None:
    family = build_family(PARAMS, 3)
    faulty = build_action(family, fault=FaultInjection("f", (0, 0, 1)))

    report = check_c1_matching(faulty)

    assert report.max_mismatch == pytest.approx(math.log(1.01))
    assert report.worst.startswith("f between (0,0,0)")
    assert report.max_limit_mismatch == pytest.approx(math.log(1.01), abs=1e-4)
    assert report.max_closed_form_gap < 1e-4


def test_induced_permutation_matches_lattice_action(realization: Realization) -> None:
    report = induced_permutation_check(realization)

    assert report.checked > 0
    assert report.mismatches == 0

    sampled = induced_permutation_check(realization, sample=25, seed=2)
    assert sampled.checked == 25
    assert sampled.mismatches == 0


def test_inverse_words_undo_each_other(realization: Realization) -> None:
    u = np.array([0.0, 0.05, 0.5, 0.93, 1.0])
    for word in ("e", "d", "f", "e^2 d^-1"):
        idx, v = realization.eval_local(word, (0, 0, 0), u)
        back_idx, back = realization.eval_local(as_word(word).inverse(), idx, v)
        assert back_idx == (0, 0, 0)
        assert np.max(np.abs(back - u)) < 1e-12


def test_relations_hold_pointwise(realization: Realization) -> None:
    family = realization.family
    for word in ("e d e^-1 d^-1", "e f e^-1 a f^-1", "c f c^-1 f^-1"):
        near = [idx for idx in realization.safe_indices(word) if max(map(abs, idx)) <= 1]
        assert near
        for idx in near[:6]:
            x = family.to_global(idx, 0.37)
            assert realization.eval(word, x) == pytest.approx(x, abs=1e-12)


def test_derivative_along_a_word_multiplies(realization: Realization) -> None:
    family = realization.family
    x = family.to_global((0, 0, 0), 0.3)
    y = realization.eval("d", x)

    chained = realization.derivative("d", x) * realization.derivative("e", y)

    assert realization.derivative("e d", x) == pytest.approx(chained, rel=1e-10)
    assert realization.derivative("f", family.to_global((0, 0, 0), 0.6)) == pytest.approx(1.0)


def test_center_of_each_interval_maps_to_a_center(realization: Realization) -> None:
    family = realization.family
    idx, v = realization.eval_local("f", (1, 2, 0), [0.5])

    assert idx == (1, 2, 2)
    assert float(v[0]) == pytest.approx(0.5, abs=1e-12)
    assert realization.eval("f", family.midpoint((1, 2, 0))) == pytest.approx(family.midpoint((1, 2, 2)), abs=1e-14)


def test_induced_permutation_on_a_wider_box() -> None:
    wide = build_action(build_family(PARAMS, 8))

    report = induced_permutation_check(wide)

    assert report.checked == 20528
    assert report.mismatches == 0
    assert report.examples == []
