from __future__ import annotations

import json
from pathlib import Path

import pytest

from app.schemas.config import RunConfig
from app.tasks.cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, UsageError, load_config, parse_args, run


@pytest.fixture
def small_config(tmp_path: Path) -> Path:
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"truncation": 3, "verify": {"group_samples": 100, "lattice_samples": 200}}))
    return path


def test_check_params_feasible_candidate() -> None:
    assert run(["check-params", "--alpha", "0.4", "--auto"]) == EXIT_OK


def test_check_params_at_one_half_is_infeasible(capsys: pytest.CaptureFixture[str]) -> None:
    assert run(["check-params", "--alpha", "0.5", "--auto"]) == EXIT_FAILED

    out = capsys.readouterr().out
    assert "(vi) FAIL" in out
    assert out.strip().endswith("infeasible")


def test_negative_exponent_is_a_usage_error() -> None:
    assert run(["check-params", "--alpha", "0.4", "--p", "-1", "--q", "10", "--r", "1.5"]) == EXIT_USAGE


def test_explicit_exponents_need_all_three() -> None:
    assert run(["check-params", "--alpha", "0.4", "--p", "10"]) == EXIT_USAGE


def test_flags_override_config_file(small_config: Path) -> None:
    args = parse_args(["verify", "--config", str(small_config), "--N", "2", "--suite", "group-only"])

    config = load_config(args)

    assert config.truncation == 2
    assert config.verify.group_samples == 100
    assert config.verify.suites == ["group", "lattice"]
    assert config.params.auto


def test_unknown_suite_is_rejected() -> None:
    with pytest.raises(UsageError):
        load_config(parse_args(["verify", "--suite", "holder"]))

    assert run(["verify", "--suite", "holder"]) == EXIT_USAGE


def test_group_only_verification_passes(small_config: Path) -> None:
    assert run(["verify", "--config", str(small_config), "--suite", "group-only"]) == EXIT_OK


def test_injected_fault_fails_verification(small_config: Path, capsys: pytest.CaptureFixture[str]) -> None:
    code = run(["verify", "--config", str(small_config), "--suite", "c1", "--inject-fault"])

    assert code == EXIT_FAILED
    lines = capsys.readouterr().out.splitlines()
    assert any(line.startswith("c1") and line.rstrip().endswith("FAIL") for line in lines)


def test_reports_are_reproducible(tmp_path: Path) -> None:
    out = tmp_path / "report.json"
    argv = ["check-params", "--alpha", "0.4", "--auto", "--json-out", str(out)]

    assert run(argv) == EXIT_OK
    first = out.read_bytes()
    assert run(argv) == EXIT_OK

    assert out.read_bytes() == first
    report = json.loads(first)
    assert report["command"] == "check-params"
    assert report["passed"] is True
    assert report["payload"]["feasible"] is True
    assert report["config"]["params"]["alpha"] == 0.4


def test_export_layout_needs_an_output_path() -> None:
    assert run(["export-layout", "--N", "2"]) == EXIT_USAGE


def test_export_layout_writes_csv(tmp_path: Path) -> None:
    out = tmp_path / "layout.csv"

    assert run(["export-layout", "--N", "2", "--csv-out", str(out)]) == EXIT_OK
    assert len(out.read_text().splitlines()) == 1 + 125


@pytest.mark.parametrize("name", ["default", "holder_sweep", "markov", "obstruction"])
def test_archived_configs_validate(name: str) -> None:
    path = Path(__file__).resolve().parents[1] / "data" / "configs" / f"{name}.json"

    config = RunConfig.model_validate(json.loads(path.read_text()))

    assert config.params.alpha == 0.4


def test_auto_mode_report_embeds_resolved_exponents(tmp_path: Path) -> None:
    out = tmp_path / "params.json"

    assert run(["check-params", "--alpha", "0.4", "--auto", "--json-out", str(out)]) == EXIT_OK

    report = json.loads(out.read_text())
    assert report["config"]["params"]["auto"] is True
    assert report["config"]["params"]["p"] is None
    assert report["params"]["p"] == pytest.approx(10.0)
    assert report["params"]["q"] == pytest.approx(10.0)
    assert report["params"]["r"] == pytest.approx(4.0 / 3.0)


def test_holder_reports_endpoint_classification(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    out = tmp_path / "holder.json"
    argv = ["holder", "--alpha", "0.4", "--auto", "--alpha-list", "0.4,0.6", "--N-list", "2,3", "--json-out", str(out)]

    assert run(argv) == EXIT_OK

    report = json.loads(out.read_text())
    assert report["passed"] is True
    assert report["params"]["p"] == pytest.approx(10.0)
    profiles = {(p["generator"], p["alpha"]): p for p in report["payload"]["endpoint_profiles"]}
    assert set(profiles) == {(g, a) for g in ("e", "d", "f") for a in (0.4, 0.6)}
    assert profiles[("e", 0.6)]["growth_exponent"] == pytest.approx(0.5)
    assert profiles[("f", 0.6)]["growth_exponent"] < 0.0
    assert {row["to"] for row in report["payload"]["growth"]} == {3}
    assert "endpoint e alpha=0.600: grows" in capsys.readouterr().out
