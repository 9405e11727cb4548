"""Action of N4 on Z^3 by lexicographic-order preserving maps."""

from __future__ import annotations

import logging
from enum import Enum
from typing import NamedTuple

import numpy as np

from app.schemas.reports import HomomorphismReport, OrderReport
from app.services.group_core import INT64_MAX, INT64_MIN, LETTERS, N4Element, multiply


logger = logging.getLogger(__name__)


class LatticeActionError(Exception):
    def __init__(self, code: str, detail: str | None = None) -> None:
        self.code = code
        self.detail = detail or code
        super().__init__(self.detail)


class ActionConvention(str, Enum):
    """Sign of the k-shift of f: ``proposition`` uses k - ij, ``interval`` uses k + ij."""

    PROPOSITION = "proposition"
    INTERVAL = "interval"

    @property
    def sign(self) -> int:
        return -1 if self is ActionConvention.PROPOSITION else 1


class LatticePoint(NamedTuple):
    i: int
    j: int
    k: int

    def __str__(self) -> str:
        return f"({self.i},{self.j},{self.k})"


def _checked(point: tuple[int, int, int]) -> LatticePoint:
    for value in point:
        if value < INT64_MIN or value > INT64_MAX:
            raise LatticeActionError("exponent_overflow", f"coordinate {value} exceeds 64-bit range")
    return LatticePoint(*point)


def k_shift(letter: str, i: int, j: int, conv: ActionConvention, exponent: int = 1) -> int:
    """Shift of the k coordinate produced by ``letter**exponent`` at block (i, j)."""
    s = conv.sign
    if letter == "f":
        return s * exponent * i * j
    if letter == "a":
        return s * exponent * j
    if letter == "b":
        return -s * exponent * i
    if letter == "c":
        return -s * exponent
    return 0


def apply_generator(
    letter: str,
    p: tuple[int, int, int],
    conv: ActionConvention = ActionConvention.PROPOSITION,
    exponent: int = 1,
) -> LatticePoint:
    i, j, k = p
    if letter == "e":
        return _checked((i + exponent, j, k))
    if letter == "d":
        return _checked((i, j + exponent, k))
    if letter in ("f", "a", "b", "c"):
        return _checked((i, j, k + k_shift(letter, i, j, conv, exponent)))
    raise LatticeActionError("unknown_generator", f"unknown generator {letter!r}")


def apply(
    g: N4Element,
    p: tuple[int, int, int],
    conv: ActionConvention = ActionConvention.PROPOSITION,
) -> LatticePoint:
    """Left action: c^n6 acts first and f^n1 last."""
    point = LatticePoint(*p)
    for letter, exponent in reversed(list(zip(LETTERS, g.exponents))):
        if exponent:
            point = apply_generator(letter, point, conv, exponent)
    return point


def lex_less(p: tuple[int, int, int], q: tuple[int, int, int]) -> bool:
    return tuple(p) < tuple(q)


def _random_element(rng: np.random.Generator, bound: int) -> N4Element:
    return N4Element(*(int(x) for x in rng.integers(-bound, bound + 1, size=6)))


def _random_point(rng: np.random.Generator, bound: int) -> LatticePoint:
    return LatticePoint(*(int(x) for x in rng.integers(-bound, bound + 1, size=3)))


def check_homomorphism(
    samples: int,
    seed: int,
    conv: ActionConvention = ActionConvention.PROPOSITION,
    exponent_bound: int = 10,
    point_bound: int = 50,
) -> HomomorphismReport:
    rng = np.random.default_rng(seed)
    violations: list[str] = []
    for _ in range(samples):
        g = _random_element(rng, exponent_bound)
        h = _random_element(rng, exponent_bound)
        p = _random_point(rng, point_bound)
        lhs = apply(multiply(g, h), p, conv)
        rhs = apply(g, apply(h, p, conv), conv)
        if lhs != rhs:
            violations.append(f"g={g} h={h} p={p}: {lhs} != {rhs}")
    if violations:
        logger.warning("homomorphism check found %d violations (%s)", len(violations), conv.value)
    return HomomorphismReport(
        convention=conv.value, samples=samples, violations=len(violations), examples=violations[:10]
    )


def check_order_preservation(
    samples: int,
    seed: int,
    conv: ActionConvention = ActionConvention.PROPOSITION,
    exponent_bound: int = 10,
    point_bound: int = 50,
) -> OrderReport:
    rng = np.random.default_rng(seed)
    violations: list[str] = []
    for _ in range(samples):
        g = _random_element(rng, exponent_bound)
        p = _random_point(rng, point_bound)
        q = _random_point(rng, point_bound)
        if p == q:
            continue
        if not lex_less(p, q):
            p, q = q, p
        gp, gq = apply(g, p, conv), apply(g, q, conv)
        if not lex_less(gp, gq):
            violations.append(f"g={g}: {p} < {q} but {gp} >= {gq}")
    return OrderReport(
        convention=conv.value, samples=samples, violations=len(violations), examples=violations[:10]
    )
