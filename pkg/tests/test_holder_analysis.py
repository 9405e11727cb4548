from __future__ import annotations

import math

import numpy as np
import pytest

from app.schemas.params import ParamSet
from app.services.holder_analysis import (
    REGIMES,
    HolderPlan,
    block_tail_mass,
    endpoint_holder_profile,
    holder_constant,
    holder_sweep,
    pair_labels,
    pair_regime,
    reevaluate,
    regime_of,
)
from app.services.interval_system import IntervalLayoutError, build_family
from app.services.realization import Realization, build_action


PARAMS = ParamSet(alpha=0.4, p=10.0, q=10.0, r=4.0 / 3.0)
GRID_ONLY = HolderPlan(grid_points=9, jitter_points=0, block_points=3)


@pytest.fixture(scope="module")
def small() -> Realization:
    return build_action(build_family(PARAMS, 4))


def test_regime_labels() -> None:
    assert regime_of(0, 2, 100.0, 4.0 / 3.0) == "near"
    assert regime_of(4, 2, 100.0, 4.0 / 3.0) == "near"
    assert regime_of(5, 2, 100.0, 4.0 / 3.0) == "middle"
    assert regime_of(40, 2, 100.0, 4.0 / 3.0) == "far"
    assert pair_regime(-3, 3, 0, 100.0, 4.0 / 3.0) == "mixed"
    assert pair_regime(5, 20, 2, 100.0, 4.0 / 3.0) == "middle"
    assert pair_regime(1, 20, 2, 100.0, 4.0 / 3.0) == "mixed"


def test_pair_label_matrix_agrees_with_pair_regime() -> None:
    ks = np.arange(-6, 25)
    for ij, s in [(0, 1.0), (2, 100.0), (-3, 1026.0)]:
        labels = pair_labels(ks, ij, s, 4.0 / 3.0)
        for a, k in enumerate(ks):
            for b, k2 in enumerate(ks):
                assert REGIMES[labels[a, b]] == pair_regime(int(k), int(k2), ij, s, 4.0 / 3.0)


def test_trivial_word_has_zero_constant(small: Realization) -> None:
    report = holder_constant(small, "e e^-1", 0.4)

    assert report.constant == 0.0
    assert report.generator == "1"
    assert report.samples == 0


def test_identity_on_a_block_contributes_nothing(small: Realization) -> None:
    report = holder_constant(small, "f", 0.4, plan=GRID_ONLY)

    assert report.argmax is not None
    assert report.argmax.index_x[0] * report.argmax.index_x[1] != 0


def test_report_structure(small: Realization) -> None:
    report = holder_constant(small, "f", 0.4, seed=11)

    assert report.truncation == 4
    assert report.samples > 0
    assert set(report.strata) == {"within", "cross", "endpoint"}
    assert set(report.regimes) == set(REGIMES)
    assert report.constant == pytest.approx(max(report.strata.values()))
    assert 0.0 <= report.argmax.u_x <= 1.0


def test_argmax_is_reproducible(small: Realization) -> None:
    for generator in ("e", "d", "f"):
        report = holder_constant(small, generator, 0.4, seed=3)
        assert reevaluate(small, report) == pytest.approx(report.constant, rel=1e-9)


def test_same_seed_same_constant(small: Realization) -> None:
    first = holder_constant(small, "d", 0.4, seed=5)
    second = holder_constant(small, "d", 0.4, seed=5)

    assert first.constant == second.constant


def test_larger_exponent_gives_larger_quotients(small: Realization) -> None:
    low, high = holder_sweep(small, "f", [0.3, 0.6], plan=GRID_ONLY)

    assert low.alpha == 0.3 and high.alpha == 0.6
    assert high.constant >= low.constant


def test_invalid_alpha_is_rejected(small: Realization) -> None:
    with pytest.raises(IntervalLayoutError) as exc:
        holder_sweep(small, "f", [1.2])

    assert exc.value.code == "invalid_params"


def test_f_constant_stabilizes_at_the_admissible_exponent() -> None:
    constants = {}
    for n in (8, 12):
        realization = build_action(build_family(PARAMS, n))
        constants[n] = holder_constant(realization, "f", 0.4, plan=GRID_ONLY).constant

    assert constants[8] > 0.0
    assert constants[12] / constants[8] < 1.10


def test_block_tail_mass_matches_a_long_partial_sum() -> None:
    s = 2.0
    partial = sum(1.0 / (s + k ** PARAMS.r) for k in range(1, 200_001))

    total = block_tail_mass(PARAMS, s)

    # tail beyond 200000 is about 3 * 200000^(-1/3)
    assert total > partial
    assert total - partial == pytest.approx(3.0 * 200_000 ** (-1.0 / 3.0), rel=1e-3)


def test_endpoint_profile_bounded_at_threshold() -> None:
    report = endpoint_holder_profile(PARAMS, "e", 0.4, radius=32)

    assert report.threshold == pytest.approx(0.4)
    assert report.expected_bounded
    assert len(report.rows) == 32
    assert report.sup_up_to(32) / report.sup_up_to(8) < 1.10
    assert report.exponent_agrees()


def test_endpoint_profile_grows_above_threshold() -> None:
    report = endpoint_holder_profile(PARAMS, "d", 0.6, radius=32)

    assert report.sup_up_to(32) / report.sup_up_to(4) > 2.0
    assert report.rows[-1].quotient > report.rows[15].quotient
    assert not report.expected_bounded


@pytest.mark.parametrize("alpha, slope", [(0.45, 0.125), (0.6, 0.5)])
def test_endpoint_profile_slope_matches_prediction(alpha: float, slope: float) -> None:
    report = endpoint_holder_profile(PARAMS, "e", alpha, radius=32)

    assert report.growth_exponent == pytest.approx(slope)
    assert report.observed_exponent == pytest.approx(slope, abs=0.1)
    assert report.exponent_agrees()


def test_exponent_agreement_flags_a_wrong_slope() -> None:
    report = endpoint_holder_profile(PARAMS, "d", 0.6, radius=32)
    shifted = report.model_copy(update={"observed_exponent": report.growth_exponent + 0.5})

    assert report.exponent_agrees()
    assert not shifted.exponent_agrees()


def test_endpoint_profile_of_f_decays() -> None:
    report = endpoint_holder_profile(PARAMS, "f", 0.6, radius=32)

    # r (P - 2r) / (P (r - 1)) with P = 10, r = 4/3
    assert report.threshold == pytest.approx(44.0 / 15.0)
    assert report.expected_bounded
    assert report.rows[0].log_derivative == pytest.approx(math.log(3.0 / 4.0))
    assert report.sup_up_to(32) == report.sup_up_to(1)
    assert report.rows[-1].quotient < report.rows[7].quotient < report.rows[0].quotient
    assert report.observed_exponent == pytest.approx(report.growth_exponent, abs=0.1)


def test_endpoint_profile_rejects_commutator_letters() -> None:
    with pytest.raises(IntervalLayoutError) as exc:
        endpoint_holder_profile(PARAMS, "a", 0.4, radius=4)

    assert exc.value.code == "unknown_generator"


def test_truncated_f_constant_above_one_half_grows_slowly() -> None:
    constants = {}
    for n in (4, 8, 12):
        realization = build_action(build_family(PARAMS, n))
        constants[n] = holder_constant(realization, "f", 0.6).constant

    # box-limited growth with shrinking increments, not the endpoint blow-up of e and d
    assert 1.1 < constants[12] / constants[4] < 1.5
    assert constants[12] - constants[8] < constants[8] - constants[4]
