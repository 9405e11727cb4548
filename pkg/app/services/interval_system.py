"""Exponent feasibility, the length profile phi and the truncated lexicographic layout on [0, 1]."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np
from numpy.typing import ArrayLike, NDArray

from app.core.config import settings
from app.schemas.params import CONDITION_LABELS, ConditionReport, ParamSet, ParamSpec
from app.schemas.reports import LayoutSummary
from app.services.lattice_action import LatticePoint


logger = logging.getLogger(__name__)

CANDIDATE_R = 4.0 / 3.0
LAYOUT_COLUMNS = ("i", "j", "k", "raw_length", "normalized_length", "left_endpoint")


class IntervalLayoutError(Exception):
    def __init__(self, code: str, detail: str | None = None) -> None:
        self.code = code
        self.detail = detail or code
        super().__init__(self.detail)


# ---------------------------------------------------------------------------
# Feasibility


def _condition_arrays(
    alpha: ArrayLike,
    p: ArrayLike,
    q: ArrayLike,
    r: ArrayLike,
    tol: float,
    margin: float,
) -> dict[str, NDArray[np.bool_]]:
    alpha, p, q, r = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (alpha, p, q, r)))
    denom_p = p * (r - 1.0)
    denom_q = q * (r - 1.0)
    # r == 1 makes r / (p (r - 1)) infinite
    tail_p = np.divide(r, denom_p, out=np.full(r.shape, np.inf), where=denom_p != 0)
    tail_q = np.divide(r, denom_q, out=np.full(r.shape, np.inf), where=denom_q != 0)
    return {
        "i": alpha + r <= 2.0 + tol,
        "ii": 4.0 * r <= p + tol,
        "iii": 4.0 * r <= q + tol,
        "iv": 4.0 <= p * (1.0 - alpha) + tol,
        "v": 4.0 <= q * (1.0 - alpha) + tol,
        "vi": 1.0 / p + 1.0 / q + 1.0 / r < 1.0 - margin,
        "vii": (alpha <= 1.0 / p + 1.0 / r + tol) & (alpha <= tail_p + tol),
        "viii": (alpha <= 1.0 / q + 1.0 / r + tol) & (alpha <= tail_q + tol),
    }


def check_conditions(params: ParamSet) -> ConditionReport:
    alpha, p, q, r = params.as_tuple()
    flags = _condition_arrays(alpha, p, q, r, settings.condition_tolerance, settings.strict_margin)
    conditions = {label: bool(flags[label]) for label in CONDITION_LABELS}
    tail_p = r / (p * (r - 1.0)) if r != 1.0 else float("inf")
    tail_q = r / (q * (r - 1.0)) if r != 1.0 else float("inf")
    slack = {
        "i": 2.0 - alpha - r,
        "ii": p - 4.0 * r,
        "iii": q - 4.0 * r,
        "iv": p * (1.0 - alpha) - 4.0,
        "v": q * (1.0 - alpha) - 4.0,
        "vi": 1.0 - (1.0 / p + 1.0 / q + 1.0 / r),
        "vii": min(1.0 / p + 1.0 / r, tail_p) - alpha,
        "viii": min(1.0 / q + 1.0 / r, tail_q) - alpha,
    }
    return ConditionReport(params=params, conditions=conditions, feasible=all(conditions.values()), slack=slack)


def closed_form_candidate(alpha: float) -> ParamSet:
    """p = q = 4 / alpha, r = 4 / 3."""
    return ParamSet(alpha=alpha, p=4.0 / alpha, q=4.0 / alpha, r=CANDIDATE_R)


def feasibility_grid(points: int | None = None) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    points = points or settings.feasibility_grid_points
    pq = np.geomspace(4.0, 400.0, points)
    r = np.linspace(1.0, 2.0, points + 1)[1:]
    return pq, r


def search_feasible(alpha: float, grid_points: int | None = None) -> ParamSet | None:
    """Closed-form candidate first, then the first feasible point of the (p, q, r) grid."""
    if not 0.0 < alpha < 1.0:
        raise IntervalLayoutError("invalid_params", f"alpha={alpha} outside (0, 1)")
    candidate = closed_form_candidate(alpha)
    if check_conditions(candidate).feasible:
        return candidate

    pq, r_values = feasibility_grid(grid_points)
    P, Q, R = np.meshgrid(pq, pq, r_values, indexing="ij")
    flags = _condition_arrays(alpha, P, Q, R, settings.condition_tolerance, settings.strict_margin)
    feasible = np.logical_and.reduce([flags[label] for label in CONDITION_LABELS])
    if not feasible.any():
        logger.info("no feasible grid point for alpha=%.4f", alpha)
        return None
    flat = int(np.argmax(feasible.ravel()))
    a, b, c = np.unravel_index(flat, feasible.shape)
    return ParamSet(alpha=alpha, p=float(P[a, b, c]), q=float(Q[a, b, c]), r=float(R[a, b, c]))


def candidate_params(spec: ParamSpec) -> ParamSet:
    """Exponents to test without searching: the closed form in auto mode."""
    if spec.auto:
        return closed_form_candidate(spec.alpha)
    return ParamSet(alpha=spec.alpha, p=spec.p, q=spec.q, r=spec.r)


def resolve_params(spec: ParamSpec) -> ParamSet:
    """Feasible exponents for a build; auto mode only succeeds for alpha < 1/2."""
    if spec.auto:
        params = search_feasible(spec.alpha)
        if params is None:
            raise IntervalLayoutError("infeasible_params", f"no feasible exponents for alpha={spec.alpha}")
        return params
    return ParamSet(alpha=spec.alpha, p=spec.p, q=spec.q, r=spec.r)


# ---------------------------------------------------------------------------
# phi, G and G'' along the k direction


def splice_coefficients(r: float) -> tuple[float, float, float]:
    """Even sextic A x^2 + B x^4 + C x^6 meeting |x|^r to second order at |x| = 1."""
    c = (r - 2.0) * (r - 4.0) / 8.0
    b = (r - 2.0) * (6.0 - r) / 4.0
    a = 1.0 - b - c
    return a, b, c


def _splice_is_monotone(r: float) -> bool:
    a, b, c = splice_coefficients(r)
    t = np.linspace(0.0, 1.0, 257)
    return bool(np.all(2.0 * a + 4.0 * b * t + 6.0 * c * t * t >= 0.0))


def theta(r: float, xi: ArrayLike) -> NDArray[np.float64]:
    x = np.asarray(xi, dtype=float)
    ax = np.abs(x)
    a, b, c = splice_coefficients(r)
    x2 = x * x
    inner = x2 * (a + x2 * (b + c * x2))
    return np.where(ax >= 1.0, ax**r, inner)


def theta_prime(r: float, xi: ArrayLike) -> NDArray[np.float64]:
    x = np.asarray(xi, dtype=float)
    ax = np.abs(x)
    a, b, c = splice_coefficients(r)
    x2 = x * x
    inner = x * (2.0 * a + x2 * (4.0 * b + 6.0 * c * x2))
    outer = r * np.sign(x) * np.maximum(ax, 1.0) ** (r - 1.0)
    return np.where(ax >= 1.0, outer, inner)


def theta_second(r: float, xi: ArrayLike) -> NDArray[np.float64]:
    x = np.asarray(xi, dtype=float)
    ax = np.abs(x)
    a, b, c = splice_coefficients(r)
    x2 = x * x
    inner = 2.0 * a + x2 * (12.0 * b + 30.0 * c * x2)
    outer = r * (r - 1.0) * np.maximum(ax, 1.0) ** (r - 2.0)
    return np.where(ax >= 1.0, outer, inner)


def block_mass(params: ParamSet, i: ArrayLike, j: ArrayLike) -> NDArray[np.float64]:
    """S = 1 + |i|^p + |j|^q."""
    ai = np.abs(np.asarray(i, dtype=float))
    aj = np.abs(np.asarray(j, dtype=float))
    return 1.0 + ai**params.p + aj**params.q


def phi(params: ParamSet, i: ArrayLike, j: ArrayLike, xi: ArrayLike) -> NDArray[np.float64]:
    return block_mass(params, i, j) + theta(params.r, xi)


def G(params: ParamSet, i: ArrayLike, j: ArrayLike, xi: ArrayLike) -> NDArray[np.float64]:
    return np.log(phi(params, i, j, xi))


def G2(params: ParamSet, i: ArrayLike, j: ArrayLike, xi: ArrayLike) -> NDArray[np.float64]:
    """G'' = theta'' / phi - (theta' / phi)^2."""
    value = phi(params, i, j, xi)
    first = theta_prime(params.r, xi) / value
    return theta_second(params.r, xi) / value - first * first


def raw_length(params: ParamSet, i: ArrayLike, j: ArrayLike, k: ArrayLike) -> NDArray[np.float64]:
    """|I_{i,j,k}| = 1 / (|i|^p + |j|^q + |k|^r + 1)."""
    ak = np.abs(np.asarray(k, dtype=float))
    return 1.0 / (block_mass(params, i, j) + ak**params.r)


def log_length_ratio(params: ParamSet, i: ArrayLike, j: ArrayLike, k: ArrayLike, shift: int = -1) -> NDArray[np.float64]:
    """log(|I_{i,j,k+shift}| / |I_{i,j,k}|) without cancellation for large S."""
    s = block_mass(params, i, j)
    kf = np.asarray(k, dtype=float)
    tk = np.abs(kf) ** params.r
    ts = np.abs(kf + shift) ** params.r
    return -np.log1p((ts - tk) / (s + tk))


# ---------------------------------------------------------------------------
# Layout


@dataclass(frozen=True, eq=False)
class IntervalFamily:
    """Intervals I_{i,j,k}, max(|i|,|j|,|k|) <= N, packed contiguously in lex order.

    ``k_edges[i, j]`` holds the running raw mass inside block (i, j) and
    ``block_edges`` the running mass of whole blocks, i outermost.
    """

    params: ParamSet
    N: int
    raw: NDArray[np.float64] = field(repr=False)
    k_edges: NDArray[np.float64] = field(repr=False)
    block_edges: NDArray[np.float64] = field(repr=False)

    @property
    def size(self) -> int:
        return 2 * self.N + 1

    @property
    def total(self) -> float:
        return float(self.block_edges[-1])

    @property
    def normalization(self) -> float:
        return 1.0 / self.total

    @property
    def interval_count(self) -> int:
        return self.size**3

    def contains(self, idx: tuple[int, int, int]) -> bool:
        return max(abs(idx[0]), abs(idx[1]), abs(idx[2])) <= self.N

    def _offsets(self, idx: tuple[int, int, int]) -> tuple[int, int, int]:
        if not self.contains(idx):
            raise IntervalLayoutError("index_outside_box", f"{tuple(idx)} outside box N={self.N}")
        return idx[0] + self.N, idx[1] + self.N, idx[2] + self.N

    def _block(self, a: int, b: int) -> int:
        return a * self.size + b

    def raw_length(self, idx: tuple[int, int, int]) -> float:
        a, b, c = self._offsets(idx)
        return float(self.raw[a, b, c])

    def length(self, idx: tuple[int, int, int]) -> float:
        return self.raw_length(idx) / self.total

    def raw_left(self, idx: tuple[int, int, int]) -> float:
        a, b, c = self._offsets(idx)
        return float(self.block_edges[self._block(a, b)] + self.k_edges[a, b, c])

    def left_endpoint(self, idx: tuple[int, int, int]) -> float:
        return self.raw_left(idx) / self.total

    def right_endpoint(self, idx: tuple[int, int, int]) -> float:
        a, b, c = self._offsets(idx)
        return float(self.block_edges[self._block(a, b)] + self.k_edges[a, b, c + 1]) / self.total

    def midpoint(self, idx: tuple[int, int, int]) -> float:
        return self.to_global(idx, 0.5)

    def block_offsets(self, i: int, j: int) -> NDArray[np.float64]:
        """Running raw mass inside block (i, j), length 2N + 2."""
        a, b, _ = self._offsets((i, j, 0))
        return self.k_edges[a, b]

    def block_lengths(self, i: int, j: int) -> NDArray[np.float64]:
        a, b, _ = self._offsets((i, j, 0))
        return self.raw[a, b]

    def block_start(self, i: int, j: int) -> float:
        a, b, _ = self._offsets((i, j, 0))
        return float(self.block_edges[self._block(a, b)])

    def locate(self, x: float) -> LatticePoint | None:
        """Index of the interval containing x, or None outside [0, 1]."""
        if not 0.0 <= x <= 1.0:
            return None
        y = x * self.total
        n = self.size
        block = int(np.searchsorted(self.block_edges, y, side="right")) - 1
        block = min(max(block, 0), n * n - 1)
        a, b = divmod(block, n)
        inner = y - self.block_edges[block]
        c = int(np.searchsorted(self.k_edges[a, b], inner, side="right")) - 1
        c = min(max(c, 0), n - 1)
        return LatticePoint(a - self.N, b - self.N, c - self.N)

    def to_local(self, x: float) -> tuple[LatticePoint, float] | None:
        idx = self.locate(x)
        if idx is None:
            return None
        u = (x * self.total - self.raw_left(idx)) / self.raw_length(idx)
        return idx, min(max(u, 0.0), 1.0)

    def to_global(self, idx: tuple[int, int, int], u: float) -> float:
        return (self.raw_left(idx) + u * self.raw_length(idx)) / self.total

    def indices(self) -> Iterator[LatticePoint]:
        span = range(-self.N, self.N + 1)
        for i in span:
            for j in span:
                for k in span:
                    yield LatticePoint(i, j, k)

    def summary(self) -> LayoutSummary:
        normalized = float(np.sum(self.raw / self.total))
        return LayoutSummary(
            alpha=self.params.alpha,
            p=self.params.p,
            q=self.params.q,
            r=self.params.r,
            truncation=self.N,
            interval_count=self.interval_count,
            total_raw_mass=self.total,
            normalized_mass_error=abs(normalized - 1.0),
        )


def build_family(params: ParamSet, N: int) -> IntervalFamily:
    if N < 1:
        raise IntervalLayoutError("invalid_truncation", f"N={N} must be >= 1")
    report = check_conditions(params)
    if not report.feasible:
        failed = [label for label, ok in report.conditions.items() if not ok]
        raise IntervalLayoutError("infeasible_params", f"conditions {failed} fail for {params.as_tuple()}")
    if not _splice_is_monotone(params.r):
        logger.warning("theta splice is not monotone on [0, 1] for r=%.4f", params.r)

    span = np.arange(-N, N + 1)
    I, J, K = np.meshgrid(span, span, span, indexing="ij")
    raw = raw_length(params, I, J, K)
    n = span.size
    k_edges = np.zeros((n, n, n + 1))
    np.cumsum(raw, axis=2, out=k_edges[:, :, 1:])
    block_totals = k_edges[:, :, -1].ravel()
    block_edges = np.zeros(n * n + 1)
    np.cumsum(block_totals, out=block_edges[1:])

    family = IntervalFamily(params=params, N=N, raw=raw, k_edges=k_edges, block_edges=block_edges)
    logger.info("built interval family N=%d (%d intervals, raw mass %.6f)", N, raw.size, family.total)
    return family


def export_layout(family: IntervalFamily, path: Path) -> int:
    rows = 0
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(LAYOUT_COLUMNS)
        for idx in family.indices():
            writer.writerow(
                [idx.i, idx.j, idx.k, family.raw_length(idx), family.length(idx), family.left_endpoint(idx)]
            )
            rows += 1
    return rows
