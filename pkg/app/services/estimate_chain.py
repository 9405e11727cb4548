"""Box sweeps of the inequalities the regularity estimate is assembled from.

All quantities use the closed-form lengths, so nothing here depends on a built
realization. Differences of log-lengths go through log1p to survive S ~ 1e12.
"""

from __future__ import annotations

import logging
import math
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from app.schemas.params import ParamSet
from app.schemas.reports import (
    BoundReport,
    MonomialBoundReport,
    MonomialBoundRow,
    RegimeBoundReport,
    SecondIncrementReport,
)
from app.services.holder_analysis import REGIMES, pair_labels
from app.services.interval_system import G2, IntervalLayoutError, block_mass, log_length_ratio, phi, theta


logger = logging.getLogger(__name__)

SLACK_TOLERANCE = -1e-9
HULL_STEP = 1.0 / 64.0


def _box(N: int) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    if N < 1:
        raise IntervalLayoutError("invalid_truncation", f"N={N} must be >= 1")
    span = np.arange(-N, N + 1, dtype=float)
    return np.meshgrid(span, span, span, indexing="ij")


def _argmax(values: NDArray[np.float64], *coords: NDArray[np.float64]) -> tuple[float, list[float]]:
    flat = int(np.argmax(values))
    return float(values.flat[flat]), [float(c.flat[flat]) for c in coords]


def _log_step(params: ParamSet, i: NDArray, j: NDArray, k: NDArray, shift: NDArray) -> NDArray[np.float64]:
    """log(|I_{i,j,k}| / |I_{i,j,k+shift}|) = log1p((theta(k+shift) - theta(k)) / phi(k))."""
    r = params.r
    return np.log1p((theta(r, k + shift) - theta(r, k)) / phi(params, i, j, k))


def case1_bound(params: ParamSet, N: int, alpha: float | None = None) -> BoundReport:
    """max over the box of phi(i,j,k)^alpha |log(|I||J'| / (|I'||J|))| with J = f(I)."""
    alpha = params.alpha if alpha is None else alpha
    I, J, K = _box(N)
    ij = I * J
    # log(|I|/|I'|) - log(|J|/|J'|), each ratio via the cancellation-free form
    term = log_length_ratio(params, I, J, K + ij) - log_length_ratio(params, I, J, K)
    values = phi(params, I, J, K) ** alpha * np.abs(term)
    value, at = _argmax(values, I, J, K)
    logger.info("case1 bound N=%d alpha=%.3f: %.6g at %s", N, alpha, value, at)
    return BoundReport(name="case1", truncation=N, value=value, argmax=at)


def isla_check(params: ParamSet, N: int, points: int = 33) -> BoundReport:
    """Largest two-sided ratio phi(i,j,xi) / phi(i,j,k) for |xi - k| <= S^(1/r) + 2|ij|."""
    I, J, K = _box(N)
    s = block_mass(params, I, J)
    radius = s ** (1.0 / params.r) + 2.0 * np.abs(I * J)
    t = np.linspace(-1.0, 1.0, points)
    base = phi(params, I, J, K)[..., None]
    xi = K[..., None] + t * radius[..., None]
    ratio = phi(params, I[..., None], J[..., None], xi) / base
    worst = np.maximum(ratio, 1.0 / ratio)
    per_index = worst.max(axis=-1)
    at_t = t[worst.argmax(axis=-1)]
    value, at = _argmax(per_index, I, J, K, K + at_t * radius)
    logger.info("isla check N=%d: %.6g at %s", N, value, at)
    return BoundReport(name="isla", truncation=N, value=value, argmax=at)


def _hull_sup(params: ParamSet, i: float, j: float, lo: float, hi: float) -> float:
    count = max(2, int(math.ceil((hi - lo) / HULL_STEP)) + 1)
    grid = np.linspace(lo, hi, count)
    return float(np.max(np.abs(G2(params, i, j, grid))))


def second_increment(params: ParamSet, i: float, j: float, k: float, a: float, b: float) -> float:
    """G(k+a+b) - G(k+a) - G(k+b) + G(k)."""
    shifts = np.array([a + b, a, b], dtype=float)
    d = _log_step(params, np.full(3, i), np.full(3, j), np.full(3, k), shifts)
    # _log_step is log(phi(k+s)/phi(k)) = G(k+s) - G(k)
    return float(d[0] - d[1] - d[2])


def second_increment_slack(params: ParamSet, i: float, j: float, k: float, a: float, b: float) -> float:
    """|ab| sup |G''| over the hull of k, k+a, k+b, k+a+b minus |second increment|."""
    corners = (k, k + a, k + b, k + a + b)
    bound = abs(a * b) * _hull_sup(params, i, j, min(corners), max(corners))
    return bound - abs(second_increment(params, i, j, k, a, b))


def second_increment_check(
    params: ParamSet, N: int, samples: int = 1000, seed: int = 0
) -> SecondIncrementReport:
    """|second increment| <= |ab| sup_hull |G''| on random (i,j,k,a,b) from the box."""
    if N < 1:
        raise IntervalLayoutError("invalid_truncation", f"N={N} must be >= 1")
    rng = np.random.default_rng(seed)
    worst = math.inf
    violations = 0
    for _ in range(samples):
        i, j, k = (int(v) for v in rng.integers(-N, N + 1, size=3))
        reach = 2 * abs(i * j) + 1
        a = int(rng.integers(-3, 4))
        b = int(rng.integers(-reach, reach + 1))
        slack = second_increment_slack(params, i, j, k, a, b)
        worst = min(worst, slack)
        if slack < SLACK_TOLERANCE:
            violations += 1
            logger.warning("second increment bound violated at %s by %.3g", (i, j, k, a, b), -slack)
    return SecondIncrementReport(truncation=N, samples=samples, worst_slack=worst, violations=violations)


def default_monomials(params: ParamSet) -> list[tuple[float, float, float, float]]:
    """Admissible exponent tuples used by the Case 1 and Case 2 estimates."""
    p, q, r, alpha = params.p, params.q, params.r, params.alpha
    return [
        (p, 0.0, 0.0, 1.0),
        (0.0, q, 0.0, 1.0),
        (p / 2.0, q / 2.0, 0.0, 1.0),
        (1.0, 1.0, 1.0, 1.0 / p + 1.0 / q + 1.0 / r),
        (1.0, 1.0, 0.0, 1.0 - alpha),
        (p * (1.0 - alpha) / r + r - 1.0, r - 1.0, 0.0, 1.0 - alpha),
        (1.0, 1.0, (alpha + 1.0) * (r - 1.0), 1.0),
    ]


def monomial_bound(
    params: ParamSet, N: int, tuples: Sequence[tuple[float, float, float, float]] | None = None
) -> MonomialBoundReport:
    """max over the box of |i|^a1 |j|^a2 |k|^a3 / phi^b for a1/p + a2/q + a3/r <= b."""
    tuples = list(default_monomials(params) if tuples is None else tuples)
    I, J, K = _box(N)
    log_phi = np.log(phi(params, I, J, K))
    rows = []
    for a1, a2, a3, b in tuples:
        if a1 / params.p + a2 / params.q + a3 / params.r > b + 1e-12:
            raise IntervalLayoutError("inadmissible_monomial", f"{(a1, a2, a3, b)} exceeds its weight")
        with np.errstate(divide="ignore", invalid="ignore"):
            log_mono = sum(
                np.where(a == 0.0, 0.0, a * np.log(np.abs(X))) for a, X in ((a1, I), (a2, J), (a3, K))
            )
        values = np.exp(log_mono - b * log_phi)
        value, at = _argmax(values, I, J, K)
        rows.append(MonomialBoundRow(exponents=[a1, a2, a3, b], value=value, argmax=[int(v) for v in at]))
    return MonomialBoundReport(truncation=N, rows=rows)


def case2_regime_bound(params: ParamSet, N: int, alpha: float | None = None) -> RegimeBoundReport:
    """Endpoint quotients |log(|I||J'| / (|I'||J|))| / dist^alpha for 0 <= k < k' in one block, by regime."""
    alpha = params.alpha if alpha is None else alpha
    if N < 1:
        raise IntervalLayoutError("invalid_truncation", f"N={N} must be >= 1")
    regimes = {name: 0.0 for name in REGIMES}
    ks = np.arange(0, N + 1, dtype=float)
    for i in range(-N, N + 1):
        for j in range(-N, N + 1):
            ij = float(i * j)
            s = float(block_mass(params, i, j))
            vi, vj = np.full_like(ks, i), np.full_like(ks, j)
            # log(|I_k| / |f(I_k)|)
            e = _log_step(params, vi, vj, ks, np.full_like(ks, ij))
            lengths = 1.0 / phi(params, vi, vj, ks)
            edges = np.concatenate([[0.0], np.cumsum(lengths)])
            dist = edges[None, 1:] - edges[:-1, None]
            diff = np.abs(e[:, None] - e[None, :])
            upper = np.triu(np.ones_like(diff, dtype=bool), 1)
            quotient = np.where(upper, diff / np.where(upper, dist, 1.0) ** alpha, 0.0)
            labels = pair_labels(ks.astype(np.int64), int(ij), s, params.r)
            for code, name in enumerate(REGIMES):
                hit = upper & (labels == code)
                if hit.any():
                    regimes[name] = max(regimes[name], float(quotient[hit].max()))
    logger.info("case2 regimes N=%d alpha=%.3f: %s", N, alpha, regimes)
    return RegimeBoundReport(truncation=N, alpha=alpha, regimes=regimes)
