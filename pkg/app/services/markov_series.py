"""Monte Carlo estimate of E[S] for the urn walk on N_0^d.

From (n_1, ..., n_d) the walk increments coordinate i with probability
(1 + n_i) / (d + n_1 + ... + n_d); S sums |I_{w_k}|^alpha along the path.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from numpy.typing import NDArray

from app.core.config import settings
from app.schemas.reports import MarkovHorizon, MarkovReport


logger = logging.getLogger(__name__)

LengthFn = Callable[[NDArray[np.int64]], NDArray[np.float64]]

CAUCHY_TOLERANCE = 0.02
Z_95 = 1.96


class MarkovSeriesError(Exception):
    def __init__(self, code: str, detail: str | None = None) -> None:
        self.code = code
        self.detail = detail or code
        super().__init__(self.detail)


def transition_probabilities(state: Sequence[int]) -> tuple[Fraction, ...]:
    """Exact transition row out of ``state``; sums to 1."""
    if not state or any(n < 0 for n in state):
        raise MarkovSeriesError("invalid_state", f"{tuple(state)} is not a point of N_0^d")
    denominator = len(state) + sum(state)
    return tuple(Fraction(1 + n, denominator) for n in state)


def power_length(exponents: Sequence[float]) -> LengthFn:
    """|I_n| = 1 / (1 + sum n_i^{e_i})."""
    powers = np.asarray(exponents, dtype=float)

    def length(states: NDArray[np.int64]) -> NDArray[np.float64]:
        return 1.0 / (1.0 + np.sum(states.astype(float) ** powers, axis=-1))

    return length


def _run_batch(
    d: int, length_fn: LengthFn, alpha: float, paths: int, horizons: list[int], seed: int, batch: int
) -> NDArray[np.float64]:
    """Partial sums of S per path, one row per horizon."""
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, batch], dtype=np.uint64)))
    states = np.zeros((paths, d), dtype=np.int64)
    partial = length_fn(states) ** alpha
    snapshots = np.empty((len(horizons), paths))
    rows = np.arange(paths)
    h = 0
    for step in range(1, horizons[-1] + 1):
        # every path has made step - 1 moves, so the denominator is shared
        weights = np.cumsum(states + 1, axis=1)
        u = rng.random(paths) * (d + step - 1)
        chosen = np.minimum((u[:, None] >= weights).sum(axis=1), d - 1)
        states[rows, chosen] += 1
        partial += length_fn(states) ** alpha
        while h < len(horizons) and step == horizons[h]:
            snapshots[h] = partial
            h += 1
    return snapshots


def markov_expectation(
    d: int,
    length_fn: LengthFn,
    alpha: float,
    paths: int,
    horizons: Sequence[int] | None = None,
    seed: int | None = None,
    batch_paths: int | None = None,
) -> MarkovReport:
    """Running mean of the truncated series S over ``paths`` walks from the origin."""
    if d < 1:
        raise MarkovSeriesError("invalid_dimension", f"d={d} must be >= 1")
    if alpha <= 0.0:
        raise MarkovSeriesError("invalid_alpha", f"alpha={alpha} must be positive")
    if paths < 2:
        raise MarkovSeriesError("invalid_paths", "at least two paths are needed for a standard error")
    horizons = sorted(set(settings.markov_horizons if horizons is None else horizons))
    if not horizons or horizons[0] < 1:
        raise MarkovSeriesError("invalid_horizons", f"{horizons} must be positive")
    seed = settings.default_seed if seed is None else seed
    batch_paths = batch_paths or settings.markov_batch_paths

    sizes = [min(batch_paths, paths - start) for start in range(0, paths, batch_paths)]
    with ThreadPoolExecutor(max_workers=settings.threads) as pool:
        futures = [
            pool.submit(_run_batch, d, length_fn, alpha, size, horizons, seed, batch)
            for batch, size in enumerate(sizes)
        ]
        sums = np.concatenate([future.result() for future in futures], axis=1)

    rows = []
    for horizon, values in zip(horizons, sums):
        mean = float(values.mean())
        se = float(values.std(ddof=1) / np.sqrt(values.size))
        rows.append(MarkovHorizon(horizon=horizon, mean=mean, std_error=se, band=(mean - Z_95 * se, mean + Z_95 * se)))
    deltas = [abs(b.mean - a.mean) / abs(b.mean) for a, b in zip(rows, rows[1:])]
    shrinking = all(later <= earlier + 1e-15 for earlier, later in zip(deltas, deltas[1:]))
    cauchy = shrinking and (not deltas or deltas[-1] < CAUCHY_TOLERANCE)
    logger.info(
        "markov d=%d alpha=%.3f paths=%d: %s", d, alpha, paths, ", ".join(f"{r.horizon}:{r.mean:.6g}" for r in rows)
    )
    return MarkovReport(dimension=d, alpha=alpha, paths=paths, seed=seed, horizons=rows, deltas=deltas, cauchy=cauchy)
