"""Empirical alpha-Hölder constants of log Dg for the assembled action."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy import integrate

from app.core.config import settings
from app.schemas.params import ParamSet
from app.schemas.reports import EndpointProfileReport, EndpointProfileRow, HolderArgmax, HolderReport
from app.services.group_core import Word, format_word
from app.services.interval_system import IntervalLayoutError, block_mass, raw_length
from app.services.lattice_action import ActionConvention, LatticePoint, apply_generator
from app.services.realization import Realization, as_word


logger = logging.getLogger(__name__)

REGIMES: tuple[str, ...] = ("near", "middle", "far", "mixed")


@dataclass(frozen=True)
class HolderPlan:
    grid_points: int = field(default_factory=lambda: settings.holder_grid_points)
    jitter_points: int = field(default_factory=lambda: settings.holder_jitter_points)
    block_points: int = field(default_factory=lambda: settings.holder_block_points)


@dataclass
class _IntervalSamples:
    index: LatticePoint
    u: NDArray[np.float64]
    log_d: NDArray[np.float64]
    # block-local raw offset of the left endpoint and raw length
    offset: float
    raw: float


@dataclass
class _BlockSamples:
    i: int
    j: int
    intervals: list[_IntervalSamples]


@dataclass
class _Best:
    value: float = 0.0
    pair: tuple[LatticePoint, float, LatticePoint, float] | None = None

    def offer(self, value: float, pair: tuple[LatticePoint, float, LatticePoint, float]) -> None:
        if value > self.value:
            self.value = value
            self.pair = pair


def _sample_positions(plan: HolderPlan, seed: int, flat_index: int) -> NDArray[np.float64]:
    grid = np.linspace(0.0, 1.0, plan.grid_points)
    if plan.jitter_points <= 0:
        return grid
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, flat_index], dtype=np.uint64)))
    jitter = rng.uniform(0.0, 1.0, size=plan.jitter_points)
    return np.unique(np.concatenate([grid, jitter]))


def regime_of(k: int, ij: int, s: float, r: float) -> str:
    """Label of a non-negative k among [0, 2|ij|], [2|ij|+1, S^(1/r)] and beyond."""
    if k <= 2 * abs(ij):
        return "near"
    if k <= s ** (1.0 / r):
        return "middle"
    return "far"


def pair_regime(k: int, k2: int, ij: int, s: float, r: float) -> str:
    if (k < 0) != (k2 < 0):
        return "mixed"
    first = regime_of(abs(k), ij, s, r)
    second = regime_of(abs(k2), ij, s, r)
    return first if first == second else "mixed"


def pair_labels(ks: NDArray[np.int64], ij: int, s: float, r: float) -> NDArray[np.intp]:
    """Matrix of REGIMES positions for every pair of k values, same rule as pair_regime."""
    mag = np.abs(ks)
    single = np.where(mag <= 2 * abs(ij), 0, np.where(mag <= s ** (1.0 / r), 1, 2))
    same = (single[:, None] == single[None, :]) & ((ks[:, None] < 0) == (ks[None, :] < 0))
    return np.where(same, single[:, None], REGIMES.index("mixed"))


def _collect(realization: Realization, word: Word, plan: HolderPlan, seed: int) -> list[_BlockSamples]:
    family = realization.family
    N = family.N
    n = family.size
    by_block: dict[tuple[int, int], list[LatticePoint]] = {}
    for idx in realization.safe_indices(word):
        by_block.setdefault((idx.i, idx.j), []).append(idx)

    def sample_block(key: tuple[int, int]) -> _BlockSamples:
        i, j = key
        offsets = family.block_offsets(i, j)
        raws = family.block_lengths(i, j)
        intervals = []
        for idx in by_block[key]:
            c = idx.k + N
            flat = ((idx.i + N) * n + (idx.j + N)) * n + c
            u = _sample_positions(plan, seed, flat)
            _, _, log_d = realization.log_derivative_local(word, idx, u)
            intervals.append(
                _IntervalSamples(index=idx, u=u, log_d=log_d, offset=float(offsets[c]), raw=float(raws[c]))
            )
        return _BlockSamples(i=i, j=j, intervals=intervals)

    keys = sorted(by_block)
    with ThreadPoolExecutor(max_workers=settings.threads) as pool:
        return list(pool.map(sample_block, keys))


def _pick(values: NDArray[np.float64], count: int) -> NDArray[np.intp]:
    if values.size <= count:
        return np.arange(values.size)
    return np.unique(np.linspace(0, values.size - 1, count).round().astype(np.intp))


def _maximize(
    realization: Realization, blocks: list[_BlockSamples], alpha: float, plan: HolderPlan
) -> tuple[_Best, dict[str, float], dict[str, float], int]:
    total = realization.family.total
    params = realization.family.params
    best = _Best()
    strata = {"within": 0.0, "cross": 0.0, "endpoint": 0.0}
    regimes = {name: 0.0 for name in REGIMES}
    pairs = 0

    for block in blocks:
        ij = block.i * block.j
        s = float(block_mass(params, block.i, block.j))

        # within one interval
        for sample in block.intervals:
            du = np.abs(sample.u[:, None] - sample.u[None, :])
            dl = np.abs(sample.log_d[:, None] - sample.log_d[None, :])
            mask = np.triu(du > 0.0, 1)
            if not mask.any():
                continue
            q = np.zeros_like(du)
            q[mask] = dl[mask] / (du[mask] * sample.raw / total) ** alpha
            pairs += int(mask.sum())
            flat = int(np.argmax(q))
            a, b = divmod(flat, q.shape[1])
            strata["within"] = max(strata["within"], float(q[a, b]))
            best.offer(float(q[a, b]), (sample.index, float(sample.u[a]), sample.index, float(sample.u[b])))

        if len(block.intervals) < 2:
            continue

        # representative interior points and endpoints across intervals of the block
        pos, val, owner, upos = [], [], [], []
        for n_int, sample in enumerate(block.intervals):
            interior = np.flatnonzero((sample.u > 0.0) & (sample.u < 1.0))
            chosen = interior[_pick(sample.u[interior], plan.block_points)] if interior.size else interior
            for c in chosen:
                pos.append(sample.offset + sample.u[c] * sample.raw)
                val.append(sample.log_d[c])
                owner.append(n_int)
                upos.append(sample.u[c])
        pos_a, val_a, own_a, u_a = map(np.asarray, (pos, val, owner, upos))
        dist = np.abs(pos_a[:, None] - pos_a[None, :]) / total
        mask = np.triu(own_a[:, None] != own_a[None, :], 1) & (dist > 0.0)
        if mask.any():
            q = np.zeros_like(dist)
            q[mask] = np.abs(val_a[:, None] - val_a[None, :])[mask] / dist[mask] ** alpha
            pairs += int(mask.sum())
            ks = np.array([block.intervals[o].index.k for o in own_a])
            labels = pair_labels(ks, ij, s, params.r)
            for code, name in enumerate(REGIMES):
                hit = mask & (labels == code)
                if hit.any():
                    regimes[name] = max(regimes[name], float(q[hit].max()))
            flat = int(np.argmax(q))
            a, b = divmod(flat, q.shape[1])
            strata["cross"] = max(strata["cross"], float(q[a, b]))
            ia, ib = block.intervals[own_a[a]], block.intervals[own_a[b]]
            best.offer(float(q[a, b]), (ia.index, float(u_a[a]), ib.index, float(u_a[b])))

        # left endpoint of I_k against right endpoint of I_k' for k < k'
        lefts = [(smp, 0) for smp in block.intervals if smp.u[0] == 0.0]
        rights = [(smp, smp.u.size - 1) for smp in block.intervals if smp.u[-1] == 1.0]
        for left, li in lefts:
            for right, ri in rights:
                if right.index.k <= left.index.k:
                    continue
                d = (right.offset + right.raw - left.offset) / total
                value = abs(float(right.log_d[ri] - left.log_d[li])) / d**alpha
                pairs += 1
                strata["endpoint"] = max(strata["endpoint"], value)
                label = pair_regime(left.index.k, right.index.k, ij, s, params.r)
                regimes[label] = max(regimes[label], value)
                best.offer(value, (left.index, 0.0, right.index, 1.0))

    return best, strata, regimes, pairs


def _report(
    realization: Realization, word: Word, alpha: float, best: _Best, strata: dict, regimes: dict, pairs: int
) -> HolderReport:
    argmax = None
    if best.pair is not None:
        ix, ux, iy, uy = best.pair
        argmax = HolderArgmax(
            x=realization.family.to_global(ix, ux),
            y=realization.family.to_global(iy, uy),
            index_x=list(ix),
            u_x=ux,
            index_y=list(iy),
            u_y=uy,
        )
    return HolderReport(
        generator=format_word(word),
        alpha=alpha,
        truncation=realization.family.N,
        samples=pairs,
        constant=best.value,
        argmax=argmax,
        strata=strata,
        regimes=regimes,
    )


def holder_sweep(
    realization: Realization,
    generator: Word | str,
    alphas: list[float],
    plan: HolderPlan | None = None,
    seed: int | None = None,
) -> list[HolderReport]:
    """Hölder constants of log Dg for several exponents from one set of samples."""
    plan = plan or HolderPlan()
    seed = settings.default_seed if seed is None else seed
    word = as_word(generator)
    if not word:
        return [
            HolderReport(generator="1", alpha=alpha, truncation=realization.family.N, samples=0, constant=0.0)
            for alpha in alphas
        ]
    blocks = _collect(realization, word, plan, seed)
    reports = []
    for alpha in alphas:
        if not 0.0 < alpha < 1.0:
            raise IntervalLayoutError("invalid_params", f"alpha={alpha} outside (0, 1)")
        best, strata, regimes, pairs = _maximize(realization, blocks, alpha, plan)
        reports.append(_report(realization, word, alpha, best, strata, regimes, pairs))
        logger.info("holder %s alpha=%.2f N=%d: C=%.6g", format_word(word), alpha, realization.family.N, best.value)
    return reports


def holder_constant(
    realization: Realization,
    generator: Word | str,
    alpha: float,
    plan: HolderPlan | None = None,
    seed: int | None = None,
) -> HolderReport:
    return holder_sweep(realization, generator, [alpha], plan, seed)[0]


def reevaluate(realization: Realization, report: HolderReport) -> float:
    """Recompute the quotient at the stored argmax pair."""
    if report.argmax is None:
        return 0.0
    family = realization.family
    arg = report.argmax
    ix, iy = LatticePoint(*arg.index_x), LatticePoint(*arg.index_y)
    _, _, lx = realization.log_derivative_local(report.generator, ix, [arg.u_x])
    _, _, ly = realization.log_derivative_local(report.generator, iy, [arg.u_y])
    if (ix.i, ix.j) == (iy.i, iy.j):
        offsets = family.block_offsets(ix.i, ix.j)
        raws = family.block_lengths(ix.i, ix.j)
        N = family.N
        px = offsets[ix.k + N] + arg.u_x * raws[ix.k + N]
        py = offsets[iy.k + N] + arg.u_y * raws[iy.k + N]
        if ix == iy:
            dist = abs(arg.u_x - arg.u_y) * raws[ix.k + N] / family.total
        else:
            dist = abs(float(px - py)) / family.total
    else:
        dist = abs(arg.x - arg.y)
    return abs(float(lx[0] - ly[0])) / dist**report.alpha


# ---------------------------------------------------------------------------
# Endpoint profile on the untruncated family


def block_tail_mass(params: ParamSet, s: float, start: int = 1, cutoff: int = 2000) -> float:
    """sum_{k >= start} 1 / (S + k^r): exact up to the cutoff, scaled integral beyond."""
    k = np.arange(start, cutoff + 1, dtype=float)
    head = float(np.sum(1.0 / (s + k**params.r)))
    r = params.r
    scale = s ** (1.0 / r)
    tau0 = (cutoff + 0.5) / scale
    integrand = lambda tau: 1.0 / (1.0 + tau**r)  # noqa: E731
    split = max(tau0, 1.0)
    tail = 0.0
    if tau0 < split:
        tail += integrate.quad(integrand, tau0, split, epsabs=0.0, epsrel=1e-12, limit=200)[0]
    tail += integrate.quad(integrand, split, math.inf, epsabs=0.0, epsrel=1e-12, limit=200)[0]
    return head + s ** (1.0 / r - 1.0) * tail


def endpoint_holder_profile(
    params: ParamSet,
    generator: str,
    alpha: float,
    radius: int,
    total: float = 1.0,
) -> EndpointProfileReport:
    """Hölder quotient between the right endpoint of I_{b,0,0}, I_{0,b,0} or I_{b,b,0} and the right end of its block.

    e and d move I_{b,0,0} (resp. I_{0,b,0}) to the next block; f moves I_{b,b,0} to I_{b,b,b^2}
    inside its block. log Dg tends to 0 at the block end, so the quotient is
    |log(|g(I)| / |I|)| / (sum_{k>=1} |I_{.,.,k}| / total)^alpha, and it behaves like
    b^(kappa (alpha - threshold)) with kappa = P (r - 1) / r.
    """
    if generator not in ("e", "d", "f"):
        raise IntervalLayoutError("unknown_generator", "endpoint profile is defined for e, d and f")
    r = params.r
    if generator == "f":
        exponent = max(params.p, params.q)
        threshold = r * (exponent - 2.0 * r) / (exponent * (r - 1.0))
    else:
        exponent = params.p if generator == "e" else params.q
        threshold = r / (exponent * (r - 1.0))
    growth = exponent * (r - 1.0) / r * (alpha - threshold)

    rows = []
    for b in range(1, radius + 1):
        idx = {"e": (b, 0, 0), "d": (0, b, 0), "f": (b, b, 0)}[generator]
        tgt = apply_generator(generator, idx, ActionConvention.INTERVAL)
        s = float(block_mass(params, idx[0], idx[1]))
        if generator == "f":
            # same block, so the ratio is S / (S + k^r) and is tiny next to 1 for large b
            log_d = -math.log1p(float(abs(tgt.k)) ** r / s)
        else:
            log_d = float(np.log(raw_length(params, *tgt) / raw_length(params, *idx)))
        dist = block_tail_mass(params, s) / total
        rows.append(
            EndpointProfileRow(index=b, log_derivative=log_d, distance=dist, quotient=abs(log_d) / dist**alpha)
        )
    report = EndpointProfileReport(
        generator=generator,
        alpha=alpha,
        threshold=threshold,
        growth_exponent=growth,
        observed_exponent=_fitted_exponent(rows),
        rows=rows,
    )
    logger.debug(
        "endpoint profile %s alpha=%.3f: predicted slope %.4f, fitted %s",
        generator,
        alpha,
        growth,
        report.observed_exponent,
    )
    return report


def _fitted_exponent(rows: list[EndpointProfileRow]) -> float | None:
    cut = max(4, (len(rows) + 1) // 2)
    upper = [row for row in rows if row.index >= cut and row.quotient > 0.0]
    if len(upper) < 2:
        return None
    x = np.log([row.index for row in upper])
    y = np.log([row.quotient for row in upper])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)
