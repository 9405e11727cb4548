from __future__ import annotations

import numpy as np
import pytest

from app.schemas.params import ParamSet
from app.services.estimate_chain import (
    case1_bound,
    case2_regime_bound,
    default_monomials,
    isla_check,
    monomial_bound,
    second_increment,
    second_increment_check,
    second_increment_slack,
)
from app.services.holder_analysis import REGIMES
from app.services.interval_system import G, G2, IntervalLayoutError


PARAMS = ParamSet(alpha=0.4, p=10.0, q=10.0, r=4.0 / 3.0)


def test_case1_bound_is_stable_in_the_truncation() -> None:
    small = case1_bound(PARAMS, 8)
    large = case1_bound(PARAMS, 16)

    assert small.name == "case1"
    assert 0.0 < small.value < 10.0
    assert large.value / small.value <= 1.01
    i, j, _ = small.argmax
    assert i * j != 0


def test_case1_bound_at_block_one_one() -> None:
    report = case1_bound(PARAMS, 1)

    # |log(|I_0|^2 / (|I_1| |I_-1|))| * 3^alpha at (1, 1, 0)
    assert report.value >= 3.0**0.4 * 2.0 * 0.28768207245178085 * (1.0 - 1e-9)


def test_isla_ratio_is_bounded() -> None:
    report = isla_check(PARAMS, 4)

    assert report.name == "isla"
    assert 1.0 < report.value <= 4.0 * 2.0**PARAMS.r
    assert isla_check(PARAMS, 1, points=65).value >= 2.0 * (1.0 - 1e-12)


def test_second_increment_matches_direct_difference() -> None:
    i, j, k, a, b = 1, 2, 3, 2, -4
    direct = G(PARAMS, i, j, k + a + b) - G(PARAMS, i, j, k + a) - G(PARAMS, i, j, k + b) + G(PARAMS, i, j, k)

    assert second_increment(PARAMS, i, j, k, a, b) == pytest.approx(float(direct), abs=1e-13)
    assert second_increment(PARAMS, i, j, k, 0, 5) == 0.0


def test_second_increment_bound_holds() -> None:
    report = second_increment_check(PARAMS, 6, samples=300, seed=4)

    assert report.samples == 300
    assert report.violations == 0
    assert report.worst_slack >= -1e-9


def test_isla_ratio_is_stable_in_the_truncation() -> None:
    small = isla_check(PARAMS, 8)
    large = isla_check(PARAMS, 16)

    assert small.value <= large.value <= 1.05 * small.value


def test_second_increment_bound_holds_on_a_wider_box() -> None:
    report = second_increment_check(PARAMS, 16)

    assert report.samples == 1000
    assert report.violations == 0


def test_second_increment_bound_at_the_case1_shift() -> None:
    i, j, k = 2, 3, 5
    a, b = -1, i * j

    increment = second_increment(PARAMS, i, j, k, a, b)
    slack = second_increment_slack(PARAMS, i, j, k, a, b)

    dense = np.linspace(k + a, k + b, 20_001)
    bound = abs(a * b) * float(np.max(np.abs(G2(PARAMS, i, j, dense))))
    assert increment != 0.0
    assert slack > 0.0
    assert abs(increment) + slack == pytest.approx(bound, rel=1e-6)


def test_default_monomials_are_admissible() -> None:
    for a1, a2, a3, b in default_monomials(PARAMS):
        assert a1 / PARAMS.p + a2 / PARAMS.q + a3 / PARAMS.r <= b + 1e-12


def test_monomial_bound_is_stable() -> None:
    small = monomial_bound(PARAMS, 8)
    large = monomial_bound(PARAMS, 16)

    assert len(small.rows) == 7
    assert small.rows[0].value < 1.0
    assert small.rows[2].value <= 0.5
    for lo, hi in zip(small.rows, large.rows):
        assert hi.value <= lo.value * 1.01 + 1e-15


def test_inadmissible_monomial_is_rejected() -> None:
    with pytest.raises(IntervalLayoutError) as exc:
        monomial_bound(PARAMS, 4, [(PARAMS.p + 1.0, 0.0, 0.0, 1.0)])

    assert exc.value.code == "inadmissible_monomial"


def test_case2_regimes() -> None:
    report = case2_regime_bound(PARAMS, 4)

    assert set(report.regimes) == set(REGIMES)
    assert report.regimes["near"] > 0.0
    assert all(value >= 0.0 for value in report.regimes.values())


def test_case2_regimes_level_off() -> None:
    reports = {n: case2_regime_bound(PARAMS, n).regimes for n in (8, 16, 32)}

    for name in REGIMES:
        assert reports[8][name] <= reports[16][name] <= reports[32][name]
    far = [reports[n]["far"] for n in (8, 16, 32)]
    middle = [reports[n]["middle"] for n in (8, 16, 32)]
    # far pairs start in blocks with S = 3; middle pairs in blocks with S = 1026 and 2049
    assert far[0] == pytest.approx(0.1765, abs=1e-3)
    assert far[2] / far[1] < min(1.15, far[1] / far[0])
    assert middle[2] / middle[1] < middle[1] / middle[0]
    assert middle[2] < 0.03


def test_invalid_truncation() -> None:
    for check in (case1_bound, isla_check, case2_regime_bound):
        with pytest.raises(IntervalLayoutError) as exc:
            check(PARAMS, 0)
        assert exc.value.code == "invalid_truncation"
