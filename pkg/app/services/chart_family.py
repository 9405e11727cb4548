"""Equivariant interval maps built from a one-parameter family of charts (0, 1) -> R.

A chart with ratio lam = |I'| / |I| has derivative

    log h'(t) = (1 - w(t)) * log(lam^(m-1) t^-m) + w(t) * log((1 - t)^-m)

with h(1/2) = 0, where w is a smooth step from 0 on [0, 1/3] to 1 on [2/3, 1] and
m is the pole order. The map between I and J is chart_J^-1 o chart_I, so
composition along a chain of intervals is exact by construction.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import integrate, optimize
from scipy.special import expit

from app.core.cache import MemoTable, content_hash
from app.core.config import settings
from app.schemas.reports import RegularityReport


logger = logging.getLogger(__name__)

LEFT_EDGE = 1.0 / 3.0
RIGHT_EDGE = 2.0 / 3.0


class ChartDomainError(Exception):
    def __init__(self, code: str, detail: str | None = None) -> None:
        self.code = code
        self.detail = detail or code
        super().__init__(self.detail)


def smooth_step(t: ArrayLike) -> NDArray[np.float64]:
    """w(t) = psi(s) / (psi(s) + psi(1 - s)), s = 3 (t - 1/3), psi(s) = exp(-1/s)."""
    s = 3.0 * (np.asarray(t, dtype=float) - LEFT_EDGE)
    inside = (s > 0.0) & (s < 1.0)
    sc = np.where(inside, s, 0.5)
    w = expit(1.0 / (1.0 - sc) - 1.0 / sc)
    return np.where(inside, w, np.where(s >= 1.0, 1.0, 0.0))


def smooth_step_derivative(t: ArrayLike) -> NDArray[np.float64]:
    s = 3.0 * (np.asarray(t, dtype=float) - LEFT_EDGE)
    inside = (s > 0.0) & (s < 1.0)
    sc = np.where(inside, s, 0.5)
    w = expit(1.0 / (1.0 - sc) - 1.0 / sc)
    dw = 3.0 * w * (1.0 - w) * (1.0 / (sc * sc) + 1.0 / ((1.0 - sc) * (1.0 - sc)))
    return np.where(inside, dw, 0.0)


@dataclass(frozen=True)
class ChartTable:
    """Cumulative integral of h' over composite Gauss-Legendre panels on [1/3, 2/3]."""

    ratio: float
    edges: NDArray[np.float64]
    cumulative: NDArray[np.float64]

    @property
    def left_mass(self) -> float:
        """A = integral of h' over [1/3, 1/2]."""
        return float(self.cumulative[(self.edges.size - 1) // 2])

    @property
    def right_mass(self) -> float:
        """B = integral of h' over [1/2, 2/3]."""
        return float(self.cumulative[-1]) - self.left_mass


class ChartProfile:
    def __init__(
        self,
        pole_order: float | None = None,
        panels: int | None = None,
        gauss_order: int | None = None,
        quantum: float | None = None,
    ) -> None:
        self.pole_order = float(pole_order if pole_order is not None else settings.chart_pole_order)
        self.panels = int(panels if panels is not None else settings.chart_panels)
        self.gauss_order = int(gauss_order if gauss_order is not None else settings.chart_gauss_order)
        self.quantum = float(quantum if quantum is not None else settings.chart_cache_quantum)
        if self.pole_order <= 1.0:
            raise ChartDomainError("invalid_profile", "pole order must exceed 1")
        if self.panels < 2 or self.panels % 2:
            raise ChartDomainError("invalid_profile", "panel count must be even so 1/2 is a panel edge")
        self.nodes, self.weights = np.polynomial.legendre.leggauss(self.gauss_order)
        self._tables: MemoTable[ChartTable] = MemoTable("chart-tables")

    # -- ratio handling -------------------------------------------------

    def key(self, ratio: float) -> int:
        if not ratio > 0.0 or not math.isfinite(ratio):
            raise ChartDomainError("invalid_length", f"ratio={ratio}")
        return max(1, int(round(ratio / self.quantum)))

    def canonical(self, ratio: float) -> float:
        return self.key(ratio) * self.quantum

    def table(self, ratio: float) -> ChartTable:
        key = self.key(ratio)
        return self._tables.get_or_load(key, lambda: self._build_table(key))

    def _build_table(self, key: int) -> ChartTable:
        ratio = key * self.quantum
        edges = np.linspace(LEFT_EDGE, RIGHT_EDGE, self.panels + 1)
        half = 0.5 * (edges[1:] - edges[:-1])
        mid = 0.5 * (edges[1:] + edges[:-1])
        t = mid[:, None] + half[:, None] * self.nodes[None, :]
        panel_mass = half * np.sum(self.weights[None, :] * self._dh(ratio, t), axis=1)
        cumulative = np.zeros(self.panels + 1)
        np.cumsum(panel_mass, out=cumulative[1:])
        return ChartTable(ratio=ratio, edges=edges, cumulative=cumulative)

    # -- closed forms ---------------------------------------------------

    def _log_dh(self, ratio: float, t: NDArray[np.float64]) -> NDArray[np.float64]:
        m = self.pole_order
        w = smooth_step(t)
        left = (m - 1.0) * math.log(ratio) - m * np.log(t)
        right = -m * np.log1p(-t)
        return (1.0 - w) * left + w * right

    def _dh(self, ratio: float, t: NDArray[np.float64]) -> NDArray[np.float64]:
        return np.exp(self._log_dh(ratio, t))

    def _dlog_dh(self, ratio: float, t: NDArray[np.float64]) -> NDArray[np.float64]:
        """(log h')'(t)."""
        m = self.pole_order
        w = smooth_step(t)
        dw = smooth_step_derivative(t)
        left = (m - 1.0) * math.log(ratio) - m * np.log(t)
        right = -m * np.log1p(-t)
        return dw * (right - left) + (1.0 - w) * (-m / t) + w * (m / (1.0 - t))

    def log_dh(self, ratio: float, u: ArrayLike) -> NDArray[np.float64]:
        return self._log_dh(self.canonical(ratio), _open_unit(u))

    def dh(self, ratio: float, u: ArrayLike) -> NDArray[np.float64]:
        return np.exp(self.log_dh(ratio, u))

    def dlog_dh(self, ratio: float, u: ArrayLike) -> NDArray[np.float64]:
        return self._dlog_dh(self.canonical(ratio), _open_unit(u))

    # -- chart and inverse ----------------------------------------------

    def h(self, ratio: float, u: ArrayLike) -> NDArray[np.float64]:
        u = _open_unit(u)
        lam = self.canonical(ratio)
        tab = self.table(lam)
        m = self.pole_order
        a, b = tab.left_mass, tab.right_mass
        scale = 3.0 ** (m - 1.0)

        out = np.empty_like(u)
        left = u <= LEFT_EDGE
        right = u >= RIGHT_EDGE
        middle = ~(left | right)
        if left.any():
            ul = u[left]
            out[left] = -a - lam ** (m - 1.0) * (ul ** (1.0 - m) - scale) / (m - 1.0)
        if right.any():
            ur = u[right]
            out[right] = b + ((1.0 - ur) ** (1.0 - m) - scale) / (m - 1.0)
        if middle.any():
            out[middle] = self._h_middle(tab, u[middle]) - a
        return out

    def _h_middle(self, tab: ChartTable, u: NDArray[np.float64]) -> NDArray[np.float64]:
        width = (RIGHT_EDGE - LEFT_EDGE) / self.panels
        panel = np.clip(((u - LEFT_EDGE) / width).astype(int), 0, self.panels - 1)
        start = tab.edges[panel]
        half = 0.5 * (u - start)
        t = (start + half)[:, None] + half[:, None] * self.nodes[None, :]
        partial = half * np.sum(self.weights[None, :] * self._dh(tab.ratio, t), axis=1)
        return tab.cumulative[panel] + partial

    def h_inverse(self, ratio: float, s: ArrayLike) -> NDArray[np.float64]:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if not np.all(np.isfinite(s)):
            raise ChartDomainError("invalid_value", "chart values must be finite")
        lam = self.canonical(ratio)
        tab = self.table(lam)
        m = self.pole_order
        a, b = tab.left_mass, tab.right_mass
        scale = 3.0 ** (m - 1.0)

        out = np.empty_like(s)
        left = s <= -a
        right = s >= b
        middle = ~(left | right)
        if left.any():
            base = scale + (m - 1.0) * (-a - s[left]) / lam ** (m - 1.0)
            out[left] = base ** (-1.0 / (m - 1.0))
        if right.any():
            base = scale + (m - 1.0) * (s[right] - b)
            out[right] = 1.0 - base ** (-1.0 / (m - 1.0))
        if middle.any():
            out[middle] = self._invert_middle(tab, s[middle] + a)
        return out

    def _invert_middle(self, tab: ChartTable, y: NDArray[np.float64]) -> NDArray[np.float64]:
        """Safeguarded Newton on the cumulative integral, seeded by panel interpolation."""
        panel = np.clip(np.searchsorted(tab.cumulative, y, side="right") - 1, 0, self.panels - 1)
        lo = tab.edges[panel].copy()
        hi = tab.edges[panel + 1].copy()
        c0 = tab.cumulative[panel]
        c1 = tab.cumulative[panel + 1]
        u = lo + (y - c0) / (c1 - c0) * (hi - lo)
        active = np.ones(y.shape, dtype=bool)
        for _ in range(settings.chart_newton_max_iter):
            if not active.any():
                break
            ua = u[active]
            residual = self._h_middle(tab, ua) - y[active]
            slope = self._dh(tab.ratio, ua)
            lo_a, hi_a = lo[active], hi[active]
            hi_a = np.where(residual > 0.0, ua, hi_a)
            lo_a = np.where(residual < 0.0, ua, lo_a)
            step = residual / slope
            proposal = ua - step
            outside = (proposal <= lo_a) | (proposal >= hi_a)
            proposal = np.where(outside, 0.5 * (lo_a + hi_a), proposal)
            done = (np.abs(proposal - ua) <= 4.0 * np.finfo(float).eps * ua) | (residual == 0.0)
            u[active] = np.where(residual == 0.0, ua, proposal)
            lo[active], hi[active] = lo_a, hi_a
            idx = np.flatnonzero(active)
            active[idx[done]] = False
        return u

    # -- reporting ------------------------------------------------------

    def cached_ratios(self) -> list[float]:
        return sorted(tab.ratio for _, tab in self._tables.items())

    def content_hash(self) -> str:
        header = f"m={self.pole_order!r};panels={self.panels};order={self.gauss_order};q={self.quantum!r}"
        parts = [header.encode()]
        for key, tab in sorted(self._tables.items(), key=lambda item: item[0]):  # type: ignore[arg-type, return-value]
            parts.append(str(key).encode())
            parts.append(tab.cumulative.tobytes())
        return content_hash(parts)


def _open_unit(u: ArrayLike) -> NDArray[np.float64]:
    arr = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise ChartDomainError("u_outside_unit_interval", "chart arguments must lie in (0, 1)")
    return arr


_default_profile: ChartProfile | None = None


def default_profile() -> ChartProfile:
    global _default_profile
    if _default_profile is None:
        _default_profile = ChartProfile()
    return _default_profile


def _check_lengths(*lengths: float) -> None:
    for value in lengths:
        if not value > 0.0 or not math.isfinite(value):
            raise ChartDomainError("invalid_length", f"length {value} must be positive")


def chart(len_prev: float, len_: float, u: ArrayLike, profile: ChartProfile | None = None) -> NDArray[np.float64]:
    _check_lengths(len_prev, len_)
    return (profile or default_profile()).h(len_prev / len_, u)


def chart_inverse(
    len_prev: float, len_: float, s: ArrayLike, profile: ChartProfile | None = None
) -> NDArray[np.float64]:
    _check_lengths(len_prev, len_)
    return (profile or default_profile()).h_inverse(len_prev / len_, s)


def chart_table(ratio: float, points: int, profile: ChartProfile | None = None) -> NDArray[np.float64]:
    """Rows (u, h(u), h'(u)) on an interior grid of (0, 1)."""
    profile = profile or default_profile()
    u = np.linspace(0.0, 1.0, points + 2)[1:-1]
    return np.column_stack([u, profile.h(ratio, u), profile.dh(ratio, u)])


# ---------------------------------------------------------------------------
# Equivariant maps between interval pairs


@dataclass(frozen=True, slots=True)
class PTMap:
    """Map of I onto J determined by |I'|, |I|, |J'|, |J| and the left endpoints."""

    len_i_prev: float
    len_i: float
    len_j_prev: float
    len_j: float
    left_i: float = 0.0
    left_j: float = 0.0

    def __post_init__(self) -> None:
        _check_lengths(self.len_i_prev, self.len_i, self.len_j_prev, self.len_j)

    @property
    def source_ratio(self) -> float:
        return self.len_i_prev / self.len_i

    @property
    def target_ratio(self) -> float:
        return self.len_j_prev / self.len_j

    @property
    def rho(self) -> float:
        return (self.len_i * self.len_j_prev) / (self.len_j * self.len_i_prev)

    def inverse(self) -> "PTMap":
        return PTMap(self.len_j_prev, self.len_j, self.len_i_prev, self.len_i, self.left_j, self.left_i)

    def is_affine(self, profile: ChartProfile | None = None) -> bool:
        profile = profile or default_profile()
        return profile.key(self.source_ratio) == profile.key(self.target_ratio)


def pt_eval_local(m: PTMap, u: ArrayLike, profile: ChartProfile | None = None) -> NDArray[np.float64]:
    """Relative position v in J of the image of relative position u in I."""
    profile = profile or default_profile()
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(u < 0.0) or np.any(u > 1.0):
        raise ChartDomainError("x_outside_interval", "relative position must lie in [0, 1]")
    if m.is_affine(profile):
        return u.copy()
    v = u.copy()
    inner = (u > 0.0) & (u < 1.0)
    if inner.any():
        v[inner] = profile.h_inverse(m.target_ratio, profile.h(m.source_ratio, u[inner]))
    return v


def pt_log_derivative_local(m: PTMap, u: ArrayLike, profile: ChartProfile | None = None) -> NDArray[np.float64]:
    """log D(phi) at relative position u, endpoint limits at u = 0 and u = 1."""
    profile = profile or default_profile()
    u = np.atleast_1d(np.asarray(u, dtype=float))
    base = math.log(m.len_j / m.len_i)
    out = np.full(u.shape, base)
    out[u <= 0.0] = math.log(m.len_j_prev / m.len_i_prev)
    if m.is_affine(profile):
        return out
    inner = (u > 0.0) & (u < 1.0)
    if inner.any():
        ui = u[inner]
        vi = pt_eval_local(m, ui, profile)
        out[inner] = base + profile.log_dh(m.source_ratio, ui) - profile.log_dh(m.target_ratio, vi)
    return out


def pt_dlog_derivative_local(m: PTMap, u: ArrayLike, profile: ChartProfile | None = None) -> NDArray[np.float64]:
    """|I| * D log D(phi) at interior relative positions u."""
    profile = profile or default_profile()
    u = _open_unit(u)
    if m.is_affine(profile):
        return np.zeros_like(u)
    v = pt_eval_local(m, u, profile)
    dv_du = np.exp(profile.log_dh(m.source_ratio, u) - profile.log_dh(m.target_ratio, v))
    return profile.dlog_dh(m.source_ratio, u) - profile.dlog_dh(m.target_ratio, v) * dv_du


def _relative(m: PTMap, x: ArrayLike) -> NDArray[np.float64]:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    tol = 1e-12 * max(1.0, abs(m.left_i))
    if np.any(x < m.left_i - tol) or np.any(x > m.left_i + m.len_i + tol):
        raise ChartDomainError("x_outside_interval", f"x outside [{m.left_i}, {m.left_i + m.len_i}]")
    return np.clip((x - m.left_i) / m.len_i, 0.0, 1.0)


def pt_eval(m: PTMap, x: ArrayLike, profile: ChartProfile | None = None) -> NDArray[np.float64]:
    return m.left_j + m.len_j * pt_eval_local(m, _relative(m, x), profile)


def pt_derivative(m: PTMap, x: ArrayLike, profile: ChartProfile | None = None) -> NDArray[np.float64]:
    return np.exp(pt_log_derivative_local(m, _relative(m, x), profile))


def pt_dlog_derivative(m: PTMap, x: ArrayLike, profile: ChartProfile | None = None) -> NDArray[np.float64]:
    return pt_dlog_derivative_local(m, _relative(m, x), profile) / m.len_i


def endpoint_derivatives(m: PTMap) -> tuple[float, float]:
    """(D phi(x-), D phi(x+)) = (|J'| / |I'|, |J| / |I|)."""
    return m.len_j_prev / m.len_i_prev, m.len_j / m.len_i


def default_probe_grid() -> NDArray[np.float64]:
    tail = np.geomspace(1e-6, LEFT_EDGE, 40)
    return np.unique(np.concatenate([tail, np.linspace(LEFT_EDGE, RIGHT_EDGE, 41), 1.0 - tail]))


def regularity_probe(
    quadruples: Iterable[Sequence[float]],
    u_grid: ArrayLike | None = None,
    profile: ChartProfile | None = None,
) -> RegularityReport:
    """Empirical M in |D log D phi| <= (M / |I|) |rho - 1| over comparable quadruples."""
    profile = profile or default_profile()
    grid = default_probe_grid() if u_grid is None else np.asarray(u_grid, dtype=float)
    m_estimate = 0.0
    affine_max = 0.0
    worst: list[float] = []
    count = 0
    for quad in quadruples:
        lengths = [float(v) for v in quad]
        if len(lengths) != 4:
            raise ChartDomainError("invalid_length", "quadruple needs four lengths")
        if max(lengths) > 2.0 * min(lengths) * (1.0 + 1e-12):
            raise ChartDomainError("incomparable_lengths", f"{lengths} violates max <= 2 min")
        m = PTMap(*lengths)
        values = np.abs(pt_dlog_derivative_local(m, grid, profile))
        count += 1
        if m.is_affine(profile):
            affine_max = max(affine_max, float(values.max()))
            continue
        quotient = float(values.max()) / abs(m.rho - 1.0)
        if quotient > m_estimate:
            m_estimate = quotient
            worst = lengths
    return RegularityReport(samples=count, m_estimate=m_estimate, affine_max=affine_max, worst_quadruple=worst)


def quad_reference(ratio: float, a: float, b: float, profile: ChartProfile | None = None) -> float:
    """Adaptive quadrature of h' over [a, b], independent of the panel tables."""
    profile = profile or default_profile()
    value, _ = integrate.quad(
        lambda t: float(profile.dh(ratio, t)[0]), a, b, epsabs=1e-14, epsrel=1e-13, limit=200
    )
    return float(value)


def inverse_reference(ratio: float, s: float, profile: ChartProfile | None = None) -> float:
    """Bracketing root of h(u) = s."""
    profile = profile or default_profile()
    lo, hi = 1e-12, 1.0 - 1e-12
    return float(
        optimize.brentq(lambda u: float(profile.h(ratio, u)[0]) - s, lo, hi, xtol=1e-16, rtol=8.9e-16, maxiter=500)
    )
