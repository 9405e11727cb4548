"""Named verification suites run by ``nilflow verify``."""

from __future__ import annotations

import logging
from typing import Callable, Iterable

import numpy as np

from app.schemas.reports import SuiteResult
from app.services.chart_family import (
    ChartProfile,
    PTMap,
    default_profile,
    inverse_reference,
    pt_eval_local,
    pt_log_derivative_local,
    quad_reference,
    regularity_probe,
)
from app.services.group_core import (
    N4Element,
    commutator,
    derived_series_check,
    embedding_identity_check,
    from_matrix,
    injectivity_witness_de,
    injectivity_witness_f,
    inverse,
    lower_central_check,
    multiply,
    to_matrix,
)
from app.services.lattice_action import (
    ActionConvention,
    LatticePoint,
    apply,
    check_homomorphism,
    check_order_preservation,
)
from app.services.realization import GENERATORS, Realization, check_c1_matching, induced_permutation_check


logger = logging.getLogger(__name__)

SUITES: tuple[str, ...] = ("group", "lattice", "permutation", "relations", "c1", "pt")
EXACT_SUITES: tuple[str, ...] = ("group", "lattice")

C1_TOLERANCE = 1e-9
# interior derivatives are read at a relative offset of 1e-7 from the endpoint
C1_LIMIT_TOLERANCE = 1e-4
RELATION_TOLERANCE = 1e-8
EQUIVARIANCE_TOLERANCE = 1e-10
ENDPOINT_TOLERANCE = 1e-6
AFFINE_TOLERANCE = 1e-12
REFERENCE_TOLERANCE = 1e-10
PROBE_LIMIT = 1e3

# Words trivial in N4 but not in the free group on e, d, f
RELATION_WORDS: tuple[str, ...] = (
    "e f e^-1 a f^-1",
    "d f d^-1 b^-1 f^-1",
    "e d e^-1 d^-1",
    "c f c^-1 f^-1",
)


def _elements(rng: np.random.Generator, count: int, bound: int) -> list[N4Element]:
    return [N4Element(*(int(v) for v in row)) for row in rng.integers(-bound, bound + 1, size=(count, 6))]


def suite_group(samples: int = 10_000, seed: int = 0) -> SuiteResult:
    rng = np.random.default_rng(seed)
    failures: list[str] = []
    xs = _elements(rng, samples, 50)
    ys = _elements(rng, samples, 50)
    zs = _elements(rng, samples, 50)
    one = N4Element.identity()
    for x, y, z in zip(xs, ys, zs):
        if from_matrix(to_matrix(x)) != x:
            failures.append(f"round trip {x}")
        if multiply(multiply(x, y), z) != multiply(x, multiply(y, z)):
            failures.append(f"associativity {x}, {y}, {z}")
        if multiply(x, one) != x or multiply(x, inverse(x)) != one:
            failures.append(f"identity/inverse {x}")

    gen = N4Element.generator
    for name, lhs, rhs in (
        ("[f,e]=a", commutator(gen("f"), gen("e")), gen("a")),
        ("[d,f]=b", commutator(gen("d"), gen("f")), gen("b")),
        ("[d,a]=c", commutator(gen("d"), gen("a")), gen("c")),
    ):
        if lhs != rhs:
            failures.append(name)

    small = rng.integers(-20, 21, size=(samples, 6))
    for n in small:
        n1, n2, n3, n4, n5, n6 = (int(v) for v in n)
        if (n1, n2) != (0, 0):
            if not embedding_identity_check(n1, n2, n3):
                failures.append(f"embedding identity {(n1, n2, n3)}")
            if not injectivity_witness_de(n1, n2, n3, n4, n5):
                failures.append(f"de witness {(n1, n2, n3, n4, n5)}")
        if n1 != 0 and not injectivity_witness_f(n1, n2, n3, n4, n5, n6):
            failures.append(f"f witness {(n1, n2, n3, n4, n5, n6)}")

    derived = [N4Element(0, 0, 0, x.n4, x.n5, x.n6) for x in ys]
    for x, h, k in zip(xs, derived, derived[1:]):
        if not lower_central_check(x, h):
            failures.append(f"lower central {x}, {h}")
        if not derived_series_check(h, k):
            failures.append(f"metabelian {h}, {k}")

    return SuiteResult(name="group", passed=not failures, metrics={"samples": samples}, failures=failures[:20])


def suite_lattice(samples: int = 100_000, seed: int = 0) -> SuiteResult:
    failures: list[str] = []
    metrics: dict[str, float | int | str] = {"samples": samples}
    for conv in ActionConvention:
        hom = check_homomorphism(samples, seed, conv)
        order = check_order_preservation(samples, seed, conv)
        metrics[f"homomorphism_{conv.value}"] = hom.violations
        metrics[f"order_{conv.value}"] = order.violations
        failures.extend(hom.examples + order.examples)
        if hom.violations and not hom.examples:
            failures.append(f"homomorphism ({conv.value})")
        if order.violations and not order.examples:
            failures.append(f"order ({conv.value})")

    rng = np.random.default_rng(seed)
    for m, (i, j, k) in zip(rng.integers(1, 50, size=200), rng.integers(-50, 51, size=(200, 3))):
        p = LatticePoint(int(i), int(j), int(k))
        for power in (int(m), -int(m)):
            for conv in ActionConvention:
                if apply(N4Element(0, 0, 0, 0, 0, power), p, conv) == p:
                    failures.append(f"c^{power} fixes {p} ({conv.value})")
    return SuiteResult(name="lattice", passed=not failures, metrics=metrics, failures=failures[:20])


def suite_permutation(realization: Realization) -> SuiteResult:
    report = induced_permutation_check(realization, GENERATORS)
    return SuiteResult(
        name="permutation",
        passed=report.mismatches == 0,
        metrics={"checked": report.checked, "mismatches": report.mismatches},
        failures=report.examples,
    )


def suite_relations(realization: Realization, points: int = 200, seed: int = 0) -> SuiteResult:
    """Pointwise |w(x) - x| for relation words at safe interior points."""
    family = realization.family
    rng = np.random.default_rng(seed)
    failures: list[str] = []
    worst = 0.0
    for word in RELATION_WORDS:
        safe = realization.safe_indices(word)
        if not safe:
            continue
        picks = rng.choice(len(safe), size=min(points, len(safe)), replace=False)
        for n in sorted(picks):
            idx = safe[int(n)]
            u = float(rng.uniform(0.05, 0.95))
            point, v = realization.eval_local(word, idx, [u])
            if point != idx:
                failures.append(f"{word} moves {idx} to {point}")
                continue
            drift = abs(float(v[0]) - u) * family.length(idx)
            worst = max(worst, drift)
            if drift > RELATION_TOLERANCE:
                failures.append(f"{word} at {idx}, u={u:.4f}: drift {drift:.3g}")
    return SuiteResult(name="relations", passed=not failures, metrics={"max_drift": worst}, failures=failures[:20])


def suite_c1(realization: Realization) -> SuiteResult:
    report = check_c1_matching(realization, GENERATORS)
    failures = []
    if report.max_mismatch >= C1_TOLERANCE:
        failures.append(f"C1 mismatch {report.max_mismatch:.3g} at {report.worst}")
    if report.max_closed_form_gap >= C1_LIMIT_TOLERANCE:
        failures.append(f"interior derivative leaves the closed form by {report.max_closed_form_gap:.3g}")
    return SuiteResult(
        name="c1",
        passed=not failures,
        metrics={
            "endpoints": report.endpoints_checked,
            "max_mismatch": report.max_mismatch,
            "max_limit_mismatch": report.max_limit_mismatch,
            "max_closed_form_gap": report.max_closed_form_gap,
        },
        failures=failures,
    )


def suite_pt(samples: int = 1000, seed: int = 0, profile: ChartProfile | None = None) -> SuiteResult:
    """Equivariance, endpoint derivatives, affinity at rho = 1, regularity scale stability, references."""
    profile = profile or default_profile()
    rng = np.random.default_rng(seed)
    failures: list[str] = []

    equivariance = 0.0
    for _ in range(samples):
        l = rng.uniform(0.5, 1.0, size=6)
        first = PTMap(l[0], l[1], l[2], l[3])
        second = PTMap(l[2], l[3], l[4], l[5])
        direct = PTMap(l[0], l[1], l[4], l[5])
        u = rng.uniform(0.0, 1.0, size=4)
        chained = pt_eval_local(second, pt_eval_local(first, u, profile), profile)
        equivariance = max(equivariance, float(np.max(np.abs(chained - pt_eval_local(direct, u, profile)))))
    if equivariance >= EQUIVARIANCE_TOLERANCE:
        failures.append(f"equivariance residual {equivariance:.3g}")

    endpoint = 0.0
    for _ in range(min(samples, 200)):
        m = PTMap(*rng.uniform(0.5, 1.0, size=4))
        log_d = pt_log_derivative_local(m, [1e-7, 1.0 - 1e-7], profile)
        endpoint = max(
            endpoint,
            abs(float(log_d[0]) - np.log(m.len_j_prev / m.len_i_prev)),
            abs(float(log_d[1]) - np.log(m.len_j / m.len_i)),
        )
    if endpoint >= ENDPOINT_TOLERANCE:
        failures.append(f"endpoint derivative mismatch {endpoint:.3g}")

    u = np.linspace(0.0, 1.0, 101)
    affine = float(np.max(np.abs(pt_eval_local(PTMap(0.6, 0.8, 0.3, 0.4), u, profile) - u)))
    if affine >= AFFINE_TOLERANCE:
        failures.append(f"rho=1 map not affine ({affine:.3g})")

    shapes = rng.uniform(0.55, 1.0, size=(40, 4))
    estimates = []
    for scale in (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6):
        probe = regularity_probe(shapes * scale, profile=profile)
        estimates.append(probe.m_estimate)
    spread = max(estimates) / min(estimates) if min(estimates) > 0.0 else float("inf")
    if not max(estimates) < PROBE_LIMIT or spread > 2.0:
        failures.append(f"regularity constant {max(estimates):.3g} (scale spread {spread:.3g})")

    reference = 0.0
    for ratio in (0.5, 1.0, 1.7):
        a, b = 0.35, 0.6
        tabulated = float(profile.h(ratio, [b])[0] - profile.h(ratio, [a])[0])
        reference = max(reference, abs(tabulated - quad_reference(ratio, a, b, profile)))
        for s in (-0.5, 0.0, 0.4):
            reference = max(reference, abs(float(profile.h_inverse(ratio, [s])[0]) - inverse_reference(ratio, s, profile)))
    if reference >= REFERENCE_TOLERANCE:
        failures.append(f"quadrature/inversion reference mismatch {reference:.3g}")

    return SuiteResult(
        name="pt",
        passed=not failures,
        metrics={
            "equivariance": equivariance,
            "endpoint": endpoint,
            "affine": affine,
            "probe_max": max(estimates),
            "probe_spread": spread,
            "reference": reference,
        },
        failures=failures,
    )


def run_suites(
    names: Iterable[str],
    realization: Callable[[], Realization] | None = None,
    group_samples: int = 10_000,
    lattice_samples: int = 100_000,
    pt_samples: int = 1000,
    seed: int = 0,
) -> list[SuiteResult]:
    """Run suites in the given order; ``realization`` is only built when a suite needs it."""
    built: Realization | None = None

    def action() -> Realization:
        nonlocal built
        if built is None:
            if realization is None:
                raise ValueError("this suite needs a realization")
            built = realization()
        return built

    runners: dict[str, Callable[[], SuiteResult]] = {
        "group": lambda: suite_group(group_samples, seed),
        "lattice": lambda: suite_lattice(lattice_samples, seed),
        "permutation": lambda: suite_permutation(action()),
        "relations": lambda: suite_relations(action(), seed=seed),
        "c1": lambda: suite_c1(action()),
        "pt": lambda: suite_pt(pt_samples, seed, built.profile if built else None),
    }
    results = []
    for name in names:
        if name not in runners:
            raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
        result = runners[name]()
        logger.info("suite %s: %s", name, "pass" if result.passed else f"FAIL ({len(result.failures)})")
        results.append(result)
    return results
