"""Command-line front end: build the action, verify it and export reports."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Sequence

from pydantic import ValidationError

from app.core.config import settings
from app.schemas.config import RunConfig
from app.schemas.reports import RunReport
from app.services.chart_family import ChartDomainError, chart_table, default_profile
from app.services.group_core import GroupArithmeticError
from app.services.holder_analysis import HolderPlan, endpoint_holder_profile, holder_sweep
from app.services.interval_system import (
    IntervalFamily,
    IntervalLayoutError,
    build_family,
    candidate_params,
    check_conditions,
    export_layout,
    resolve_params,
)
from app.services.lattice_action import LatticeActionError
from app.services.markov_series import MarkovSeriesError, markov_expectation, power_length
from app.services.obstruction import (
    OrbitHorizonError,
    heisenberg_move_check,
    lemma_main_certificate,
    lex_family_check,
    translation_number,
)
from app.services.realization import FaultInjection, Realization, UnsafeEvaluationError, build_action
from app.services.verification import EXACT_SUITES, SUITES, run_suites


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

HOLDER_COLUMNS = ("N", "alpha", "generator", "constant", "argmax_x", "argmax_y")
CHART_COLUMNS = ("u", "h", "dh")
EVAL_COLUMNS = ("x", "gx", "dgx")

USAGE_ERRORS = (
    ValidationError,
    IntervalLayoutError,
    ChartDomainError,
    GroupArithmeticError,
    LatticeActionError,
    MarkovSeriesError,
    UnsafeEvaluationError,
    ValueError,
)


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _ints(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--alpha", type=float)
    common.add_argument("--p", type=float)
    common.add_argument("--q", type=float)
    common.add_argument("--r", type=float)
    common.add_argument("--auto", action="store_true", help="Pick p, q, r from alpha")
    common.add_argument("--N", dest="truncation", type=int, help="Truncation radius of the index box")
    common.add_argument("--seed", type=int)
    common.add_argument("--json-out", type=Path)
    common.add_argument("--csv-out", type=Path)
    common.add_argument(
        "--log-level",
        default=settings.log_level,
        help="Logging level (DEBUG, INFO, WARNING, ERROR)",
    )

    parser = argparse.ArgumentParser(prog="nilflow", description="C^(1+alpha) action of N4 on [0, 1]")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("check-params", parents=[common], help="Evaluate conditions (i)-(viii)")
    sub.add_parser("build", parents=[common], help="Build the interval family and the action")

    p_eval = sub.add_parser("eval", parents=[common], help="Evaluate a word and its derivative")
    p_eval.add_argument("--word")
    p_eval.add_argument("--points", type=_floats, help="Comma-separated points of [0, 1]")

    p_verify = sub.add_parser("verify", parents=[common], help="Run verification suites")
    p_verify.add_argument(
        "--suite",
        action="append",
        help=f"Suite name ({', '.join(SUITES)}), 'group-only' or 'all'; repeatable",
    )
    p_verify.add_argument("--inject-fault", action="store_true", help="Perturb one stored length of f")

    p_holder = sub.add_parser("holder", parents=[common], help="Hölder constant sweep")
    p_holder.add_argument("--alpha-list", type=_floats)
    p_holder.add_argument("--N-list", dest="n_list", type=_ints)
    p_holder.add_argument("--generators", type=lambda s: [g.strip() for g in s.split(",") if g.strip()])

    p_markov = sub.add_parser("markov", parents=[common], help="Monte Carlo estimate of E[S]")
    p_markov.add_argument("--d", dest="dimension", type=int)
    p_markov.add_argument("--paths", type=int)
    p_markov.add_argument("--horizons", type=_ints)

    p_obs = sub.add_parser("obstruction", parents=[common], help="Orbit-hull certificates")
    p_obs.add_argument("--base", type=_ints, help="Base index i,j,k")
    p_obs.add_argument("--radius", type=int)

    sub.add_parser("export-layout", parents=[common], help="Write the interval layout as CSV")

    p_chart = sub.add_parser("chart-table", parents=[common], help="Tabulate one chart")
    p_chart.add_argument("--ratio", type=float, default=1.0)
    p_chart.add_argument("--points", type=int, default=65)

    return parser.parse_args(argv)


def _set(data: dict[str, Any], path: str, value: Any) -> None:
    if value is None:
        return
    node = data
    *parents, leaf = path.split(".")
    for key in parents:
        node = node.setdefault(key, {})
    node[leaf] = value


def load_config(args: argparse.Namespace) -> RunConfig:
    """Config file first, flags on top, validated before anything is computed."""
    data: dict[str, Any] = {}
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc

    params = data.setdefault("params", {})
    explicit = any(v is not None for v in (args.p, args.q, args.r))
    if args.auto:
        for key in ("p", "q", "r"):
            params.pop(key, None)
        params["auto"] = True
    elif explicit:
        params["auto"] = False
    _set(data, "params.alpha", args.alpha)
    _set(data, "params.p", args.p)
    _set(data, "params.q", args.q)
    _set(data, "params.r", args.r)
    if not params:
        data.pop("params")
    elif "alpha" not in params:
        params["alpha"] = settings.default_alpha
        params.setdefault("auto", not explicit)
    _set(data, "truncation", args.truncation)
    _set(data, "seed", args.seed)
    _set(data, "output.json_path", args.json_out and str(args.json_out))
    _set(data, "output.csv_path", args.csv_out and str(args.csv_out))

    command = args.command
    if command == "eval":
        _set(data, "eval.word", args.word)
        _set(data, "eval.points", args.points)
    elif command == "verify":
        if args.suite:
            suites: list[str] = []
            for name in args.suite:
                if name == "group-only":
                    suites.extend(EXACT_SUITES)
                elif name == "all":
                    suites.extend(SUITES)
                else:
                    suites.append(name)
            data.setdefault("verify", {})["suites"] = list(dict.fromkeys(suites))
        if args.inject_fault:
            data.setdefault("verify", {})["inject_fault"] = True
    elif command == "holder":
        _set(data, "holder.alphas", args.alpha_list)
        _set(data, "holder.truncations", args.n_list)
        _set(data, "holder.generators", args.generators)
    elif command == "markov":
        _set(data, "markov.dimension", args.dimension)
        _set(data, "markov.alpha", args.alpha)
        _set(data, "markov.paths", args.paths)
        _set(data, "markov.horizons", args.horizons)
    elif command == "obstruction":
        _set(data, "obstruction.base", args.base)
        _set(data, "obstruction.lex_radius", args.radius)

    config = RunConfig.model_validate(data)
    unknown = [name for name in config.verify.suites if name not in SUITES]
    if unknown:
        raise UsageError(f"unknown suites {unknown}; choose from {', '.join(SUITES)}")
    return config


def _build(config: RunConfig, truncation: int | None = None) -> tuple[IntervalFamily, Realization]:
    params = resolve_params(config.params)
    family = build_family(params, truncation or config.truncation)
    return family, build_action(family)


def _write_csv(path: Path | None, columns: Sequence[str], rows: list[Sequence[Any]]) -> None:
    if path is None:
        return
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        writer.writerows(rows)
    logger.info("wrote %d rows to %s", len(rows), path)


def cmd_check_params(config: RunConfig, args: argparse.Namespace) -> tuple[bool, dict[str, Any]]:
    report = check_conditions(candidate_params(config.params))
    for label, ok in report.conditions.items():
        print(f"({label}) {'ok' if ok else 'FAIL'}  slack={report.slack[label]:+.6g}")
    print("feasible" if report.feasible else "infeasible")
    return report.feasible, report.model_dump(mode="json")


def cmd_build(config: RunConfig, args: argparse.Namespace) -> tuple[bool, dict[str, Any]]:
    family, realization = _build(config)
    summary = family.summary()
    print(
        f"N={family.N}: {summary.interval_count} intervals, raw mass {summary.total_raw_mass:.12g}, "
        f"normalized error {summary.normalized_mass_error:.3g}"
    )
    maps = {f"{letter}{'+' if sign > 0 else '-'}": len(table) for (letter, sign), table in realization.maps.items()}
    return True, {"layout": summary.model_dump(mode="json"), "maps": maps}


def cmd_eval(config: RunConfig, args: argparse.Namespace) -> tuple[bool, dict[str, Any]]:
    _, realization = _build(config)
    options = config.eval
    points = options.points
    if points is None:
        points = [(n + 0.5) / options.grid for n in range(options.grid)]
    rows, unsafe = [], []
    for x in points:
        try:
            rows.append((x, realization.eval(options.word, x), realization.derivative(options.word, x)))
        except UnsafeEvaluationError as exc:
            unsafe.append({"x": x, "prefix": exc.prefix, "detail": exc.detail})
    for x, gx, dgx in rows:
        print(f"{x:.12g}  {gx:.12g}  {dgx:.12g}")
    _write_csv(config.output.csv_path, EVAL_COLUMNS, rows)
    return True, {"word": options.word, "rows": [list(row) for row in rows], "unsafe": unsafe}


def cmd_verify(config: RunConfig, args: argparse.Namespace) -> tuple[bool, dict[str, Any]]:
    options = config.verify

    def realization() -> Realization:
        params = resolve_params(config.params)
        family = build_family(params, config.truncation)
        fault = FaultInjection(generator="f", index=(0, 0, 1)) if options.inject_fault else None
        return build_action(family, fault=fault)

    results = run_suites(
        options.suites,
        realization,
        group_samples=options.group_samples,
        lattice_samples=options.lattice_samples,
        pt_samples=options.pt_samples,
        seed=config.seed,
    )
    for result in results:
        print(f"{result.name:12s} {'pass' if result.passed else 'FAIL'}")
        for failure in result.failures:
            print(f"    {failure}")
    passed = all(result.passed for result in results)
    return passed, {"suites": [result.model_dump(mode="json") for result in results]}


def cmd_holder(config: RunConfig, args: argparse.Namespace) -> tuple[bool, dict[str, Any]]:
    options = config.holder
    plan = HolderPlan(
        grid_points=options.grid_points, jitter_points=options.jitter_points, block_points=options.block_points
    )
    params = resolve_params(config.params)
    rows, reports = [], []
    constants: dict[tuple[str, float], dict[int, float]] = {}
    for N in options.truncations:
        realization = build_action(build_family(params, N))
        for generator in options.generators:
            for report in holder_sweep(realization, generator, options.alphas, plan, config.seed):
                x = report.argmax.x if report.argmax else ""
                y = report.argmax.y if report.argmax else ""
                rows.append((N, report.alpha, report.generator, report.constant, x, y))
                reports.append(report.model_dump(mode="json"))
                constants.setdefault((report.generator, report.alpha), {})[N] = report.constant
                print(f"N={N:3d} alpha={report.alpha:.3f} {report.generator}: C={report.constant:.6g}")

    growth = []
    for (generator, alpha), by_n in constants.items():
        first, last = min(by_n), max(by_n)
        ratio = by_n[last] / by_n[first] if by_n[first] > 0.0 else None
        growth.append({"generator": generator, "alpha": alpha, "from": first, "to": last, "ratio": ratio})

    profiles = [
        endpoint_holder_profile(params, generator, alpha, options.profile_radius)
        for generator in ("e", "d", "f")
        for alpha in options.alphas
    ]
    passed = True
    for profile in profiles:
        agrees = profile.exponent_agrees()
        passed = passed and agrees
        label = "bounded" if profile.expected_bounded else "grows"
        print(
            f"endpoint {profile.generator} alpha={profile.alpha:.3f}: {label}, slope {profile.growth_exponent:+.3f}"
            f" (fitted {_format_slope(profile.observed_exponent)}) {'ok' if agrees else 'FAIL'}"
        )
    _write_csv(config.output.csv_path, HOLDER_COLUMNS, rows)
    return passed, {
        "reports": reports,
        "growth": growth,
        "endpoint_profiles": [profile.model_dump(mode="json") for profile in profiles],
    }


def _format_slope(value: float | None) -> str:
    return "n/a" if value is None else f"{value:+.3f}"


def cmd_markov(config: RunConfig, args: argparse.Namespace) -> tuple[bool, dict[str, Any]]:
    options = config.markov
    exponents = options.exponents
    if exponents is None:
        params = candidate_params(config.params)
        base = [params.p, params.q, params.r]
        exponents = (base + [params.r] * options.dimension)[: options.dimension]
    if len(exponents) != options.dimension:
        raise UsageError(f"{len(exponents)} exponents given for dimension {options.dimension}")
    report = markov_expectation(
        options.dimension, power_length(exponents), options.alpha, options.paths, options.horizons, config.seed
    )
    for row in report.horizons:
        print(f"horizon {row.horizon:>8d}: E[S] ~ {row.mean:.8g}  [{row.band[0]:.8g}, {row.band[1]:.8g}]")
    print("cauchy" if report.cauchy else "not settled")
    return True, {"exponents": exponents, "report": report.model_dump(mode="json")}


def cmd_obstruction(config: RunConfig, args: argparse.Namespace) -> tuple[bool, dict[str, Any]]:
    options = config.obstruction
    _, realization = _build(config)
    x0 = (tuple(options.base), options.u)
    certificate = lemma_main_certificate(realization, x0, options.horizon)
    lex = lex_family_check(realization, options.base, options.lex_radius)
    heisenberg = heisenberg_move_check(realization, x0, options.horizon)
    translations: list[dict[str, Any]] = []
    for word in options.translation_words:
        try:
            translations.append(
                translation_number(realization, word, options.base, options.translation_iterations).model_dump()
            )
        except OrbitHorizonError as exc:
            translations.append({"word": word, "error": exc.code, "detail": exc.detail})
    for name, ok in certificate.conditions.items():
        print(f"{name:20s} {'ok' if ok else 'FAIL'}")
    print(f"lex family (radius {lex.radius}, {lex.checked} intervals): {'ok' if lex.passed else 'FAIL'}")
    print(f"heisenberg moves: {'ok' if heisenberg.passed else 'FAIL'}")
    passed = certificate.passed and lex.passed and heisenberg.passed
    return passed, {
        "certificate": certificate.model_dump(mode="json"),
        "lex_family": lex.model_dump(mode="json"),
        "heisenberg": heisenberg.model_dump(mode="json"),
        "translation": translations,
    }


def cmd_export_layout(config: RunConfig, args: argparse.Namespace) -> tuple[bool, dict[str, Any]]:
    path = config.output.csv_path
    if path is None:
        raise UsageError("export-layout needs --csv-out")
    family = build_family(resolve_params(config.params), config.truncation)
    rows = export_layout(family, path)
    print(f"wrote {rows} intervals to {path}")
    return True, {"rows": rows, "layout": family.summary().model_dump(mode="json")}


def cmd_chart_table(config: RunConfig, args: argparse.Namespace) -> tuple[bool, dict[str, Any]]:
    table = chart_table(args.ratio, args.points)
    rows = [tuple(float(v) for v in row) for row in table]
    _write_csv(config.output.csv_path, CHART_COLUMNS, rows)
    if config.output.csv_path is None:
        for u, h, dh in rows:
            print(f"{u:.6f}  {h:+.12g}  {dh:.12g}")
    return True, {"ratio": args.ratio, "points": args.points}


COMMANDS: dict[str, Callable[[RunConfig, argparse.Namespace], tuple[bool, dict[str, Any]]]] = {
    "check-params": cmd_check_params,
    "build": cmd_build,
    "eval": cmd_eval,
    "verify": cmd_verify,
    "holder": cmd_holder,
    "markov": cmd_markov,
    "obstruction": cmd_obstruction,
    "export-layout": cmd_export_layout,
    "chart-table": cmd_chart_table,
}


def _resolved_params(command: str, config: RunConfig) -> dict[str, float] | None:
    """Exponents the command actually ran with; auto mode is resolved, not echoed."""
    if command == "chart-table":
        return None
    if command in ("check-params", "markov"):
        return candidate_params(config.params).model_dump()
    try:
        return resolve_params(config.params).model_dump()
    except IntervalLayoutError:
        return candidate_params(config.params).model_dump()


def run(argv: Sequence[str] | None = None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level.upper(), logging.INFO))
    try:
        config = load_config(args)
        passed, payload = COMMANDS[args.command](config, args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except USAGE_ERRORS as exc:
        logger.error("%s failed: %s", args.command, exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    report = RunReport(
        command=args.command,
        config=config.model_dump(mode="json"),
        params=_resolved_params(args.command, config),
        chart_hash=default_profile().content_hash(),
        passed=passed,
        payload=payload,
    )
    if config.output.json_path is not None:
        config.output.json_path.write_text(report.model_dump_json(indent=2))
        logger.info("wrote report to %s", config.output.json_path)
    return EXIT_OK if passed else EXIT_FAILED


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
