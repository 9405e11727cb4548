"""Orbit hulls J_g(x0), the moves/fixes dichotomy and the combinatorial certificates built on it.

Points are (index, u) pairs; their order is the lexicographic order of the index
followed by u, which is the order of the corresponding points of [0, 1].
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from app.schemas.reports import (
    CertificateReport,
    HeisenbergReport,
    HeisenbergRow,
    JIntervalModel,
    LexFamilyReport,
    TranslationReport,
)
from app.services.group_core import HEISENBERG_TRIPLES, Word, commutator, evaluate_word, format_word
from app.services.lattice_action import LatticePoint
from app.services.realization import Realization, UnsafeEvaluationError, as_word


logger = logging.getLogger(__name__)

MOVES = "moves"
FIXES = "fixes"
DEFAULT_HORIZON = 64

OrbitPoint = tuple[LatticePoint, float]


class ConsistencyError(Exception):
    """An element neither moves nor fixes an orbit hull."""

    def __init__(self, code: str, detail: str | None = None) -> None:
        self.code = code
        self.detail = detail or code
        super().__init__(self.detail)


class OrbitHorizonError(Exception):
    def __init__(self, code: str, detail: str | None = None) -> None:
        self.code = code
        self.detail = detail or code
        super().__init__(self.detail)


def _key(point: OrbitPoint) -> tuple[int, int, int, float]:
    idx, u = point
    return idx.i, idx.j, idx.k, u


@dataclass(frozen=True)
class JInterval:
    word: Word
    base: OrbitPoint
    lo: OrbitPoint
    hi: OrbitPoint
    orbit: tuple[OrbitPoint, ...] = field(repr=False)
    left_truncated: bool
    right_truncated: bool

    @property
    def is_point(self) -> bool:
        return _key(self.lo) == _key(self.hi)

    def position(self, point: OrbitPoint) -> int:
        """-1 left of the hull, 0 inside, 1 right of it."""
        key = _key(point)
        if key < _key(self.lo):
            return -1
        if key > _key(self.hi):
            return 1
        return 0

    def to_model(self, realization: Realization) -> JIntervalModel:
        family = realization.family
        return JIntervalModel(
            word=format_word(self.word),
            base_index=list(self.base[0]),
            base_u=self.base[1],
            inf=family.to_global(*self.lo),
            sup=family.to_global(*self.hi),
            orbit_size=len(self.orbit),
            left_truncated=self.left_truncated,
            right_truncated=self.right_truncated,
        )


def _step(realization: Realization, word: Word, point: OrbitPoint) -> OrbitPoint | None:
    try:
        idx, v = realization.eval_local(word, point[0], [point[1]])
    except UnsafeEvaluationError:
        return None
    return idx, float(v[0])


def _as_point(realization: Realization, x0: OrbitPoint | float) -> OrbitPoint:
    if isinstance(x0, tuple):
        return LatticePoint(*x0[0]), float(x0[1])
    local = realization.family.to_local(float(x0))
    if local is None:
        raise UnsafeEvaluationError("outside_family", f"x0={x0} outside [0, 1]")
    return local


def j_interval(
    realization: Realization, g: Word | str, x0: OrbitPoint | float, horizon: int = DEFAULT_HORIZON
) -> JInterval:
    """Hull of the computed orbit g^n(x0), |n| <= horizon, walked until the first unsafe step."""
    word = as_word(g)
    base = _as_point(realization, x0)
    orbit = [base]
    open_ends: list[OrbitPoint] = []
    for step_word in (word, word.inverse()):
        point = base
        for _ in range(horizon):
            nxt = _step(realization, step_word, point)
            if nxt is None:
                open_ends.append(point)
                break
            if _key(nxt) == _key(point):
                break
            orbit.append(nxt)
            point = nxt
        else:
            open_ends.append(point)
    ordered = sorted(orbit, key=_key)
    lo, hi = ordered[0], ordered[-1]
    degenerate = _key(lo) == _key(hi)
    left = not degenerate and any(_key(p) == _key(lo) for p in open_ends)
    right = not degenerate and any(_key(p) == _key(hi) for p in open_ends)
    if left or right:
        logger.debug("orbit of %s from %s truncated (left=%s, right=%s)", format_word(word), base, left, right)
    return JInterval(
        word=word,
        base=base,
        lo=lo,
        hi=hi,
        orbit=tuple(ordered),
        left_truncated=left,
        right_truncated=right,
    )


def moves(realization: Realization, h: Word | str, J: JInterval) -> str:
    """"moves" when h sends the orbit to one side of J, "fixes" when it keeps it inside.

    Images that leave J through a truncated end still count as fixing.
    """
    word = as_word(h)
    sides = []
    for point in J.orbit:
        image = _step(realization, word, point)
        if image is not None:
            sides.append(J.position(image))
    if not sides:
        raise ConsistencyError("no_safe_images", f"{format_word(word)} is unsafe on every orbit point")
    if all(s == -1 for s in sides) or all(s == 1 for s in sides):
        return MOVES
    if 0 in sides:
        leaks_left = -1 in sides and not J.left_truncated
        leaks_right = 1 in sides and not J.right_truncated
        if not (leaks_left or leaks_right):
            return FIXES
    raise ConsistencyError(
        "partial_overlap",
        f"{format_word(word)} maps J_{format_word(J.word)} partly inside ({sides.count(0)}/{len(sides)})",
    )


def _require_safe(realization: Realization, idx: LatticePoint, words: dict[str, Word]) -> None:
    for name, word in words.items():
        if realization.index_path(word, idx) is None:
            raise UnsafeEvaluationError(
                "unsafe_prefix", f"{name} is not evaluable at {idx}", prefix=format_word(word), index=idx
            )


def lemma_main_certificate(
    realization: Realization, x0: OrbitPoint | float, horizon: int = DEFAULT_HORIZON
) -> CertificateReport:
    """Check (e, d, c): J_c is not a point, d moves J_c, e moves J_d and the three pairwise commute."""
    words = {"e": as_word("e"), "d": as_word("d"), "c": as_word("c")}
    base = _as_point(realization, x0)
    _require_safe(realization, base[0], words)

    j_c = j_interval(realization, words["c"], base, horizon)
    j_d = j_interval(realization, words["d"], base, horizon)

    def moved(h: Word, J: JInterval) -> bool:
        try:
            return moves(realization, h, J) == MOVES
        except ConsistencyError as exc:
            logger.warning("certificate at %s: %s", base[0], exc.detail)
            return False

    elements = {name: evaluate_word(word) for name, word in words.items()}
    conditions = {
        "j_c_nondegenerate": not j_c.is_point,
        "d_moves_j_c": moved(words["d"], j_c),
        "e_moves_j_d": moved(words["e"], j_d),
        "pairwise_commute": all(
            commutator(elements[x], elements[y]).is_identity() for x, y in itertools.combinations("edc", 2)
        ),
    }
    passed = all(conditions.values())
    if not passed:
        logger.info("certificate failed at %s: %s", base[0], conditions)
    return CertificateReport(
        base_index=list(base[0]),
        conditions=conditions,
        passed=passed,
        j_intervals=[j_c.to_model(realization), j_d.to_model(realization)],
    )


def safe_bases(realization: Realization) -> list[LatticePoint]:
    """Indices where e, d and the c word can all be applied."""
    words = [as_word(w) for w in ("e", "d", "c")]
    return [
        idx for idx in realization.family.indices() if all(realization.index_path(w, idx) is not None for w in words)
    ]


def lex_family_check(
    realization: Realization, base: tuple[int, int, int] = (0, 0, 0), radius: int = 2
) -> LexFamilyReport:
    """I_n := e^n1 d^n2 c^-n3 (I_base) must be disjoint, lex ordered and shifted by e, d, c^-1."""
    family = realization.family
    base = LatticePoint(*base)
    shifts = (as_word("e"), as_word("d"), as_word("c").inverse())
    span = range(-radius, radius + 1)

    placed: dict[tuple[int, int, int], LatticePoint] = {}
    for n in itertools.product(span, span, span):
        word = (shifts[0] ** n[0]) * (shifts[1] ** n[1]) * (shifts[2] ** n[2])
        path = realization.index_path(word, base)
        if path is None:
            continue
        image = realization.eval(word, family.midpoint(base))
        located = family.locate(image)
        expected = LatticePoint(base.i + n[0], base.j + n[1], base.k + n[2])
        if located != path[-1] or located != expected:
            logger.warning("lex family: %s sends %s to %s, expected %s", format_word(word), base, located, expected)
            placed[n] = LatticePoint(*(located or path[-1]))
        else:
            placed[n] = located

    ordered = sorted(placed)
    intervals = [(family.left_endpoint(placed[n]), family.right_endpoint(placed[n])) for n in ordered]
    lex_ordered = all(a[1] <= b[0] for a, b in zip(intervals, intervals[1:]))
    disjoint = len(set(placed.values())) == len(placed) and all(
        a[0] < a[1] and a[1] <= b[0] for a, b in zip(sorted(intervals), sorted(intervals)[1:])
    )

    shift_ok = True
    for n, idx in placed.items():
        for axis, word in enumerate(shifts):
            m = tuple(v + (1 if a == axis else 0) for a, v in enumerate(n))
            if m not in placed:
                continue
            try:
                image = realization.eval(word, family.midpoint(idx))
            except UnsafeEvaluationError:
                continue
            if family.locate(image) != placed[m]:
                shift_ok = False
                logger.warning("lex family: shift %d fails at %s", axis + 1, n)

    passed = bool(placed) and disjoint and lex_ordered and shift_ok
    return LexFamilyReport(
        base_index=list(base),
        radius=radius,
        checked=len(placed),
        disjoint=disjoint,
        lex_ordered=lex_ordered,
        shifts=shift_ok,
        passed=passed,
    )


def translation_number(
    realization: Realization, g: Word | str, base: tuple[int, int, int] = (0, 0, 0), iterations: int = 1
) -> TranslationReport:
    """Index displacement of g^n(I_base) per iterate, one number per lattice direction."""
    if iterations < 1:
        raise OrbitHorizonError("invalid_iterations", f"iterations={iterations} must be >= 1")
    word = as_word(g)
    point = LatticePoint(*base)
    for step in range(iterations):
        path = realization.index_path(word, point)
        if path is None:
            raise OrbitHorizonError(
                "horizon_exhausted", f"{format_word(word)} leaves the box after {step} of {iterations} iterates"
            )
        point = path[-1]
    displacement = np.subtract(point, base).astype(int)
    return TranslationReport(
        word=format_word(word),
        iterations=iterations,
        displacement=[int(v) for v in displacement],
        numbers=[float(v) / iterations for v in displacement],
    )


def heisenberg_move_check(
    realization: Realization, x0: OrbitPoint | float, horizon: int = DEFAULT_HORIZON
) -> HeisenbergReport:
    """For each Heisenberg triple (h1, h2, h3) whose h3 moves x0, h1 or h2 moves J_{h3}(x0)."""
    base = _as_point(realization, x0)
    rows = []
    for triple in HEISENBERG_TRIPLES:
        h1, h2, h3 = triple
        J = j_interval(realization, h3, base, horizon)
        if J.is_point:
            rows.append(HeisenbergRow(triple=list(triple), applicable=False, moved_by=[], passed=True))
            continue
        moved_by = []
        for h in (h1, h2):
            try:
                if moves(realization, h, J) == MOVES:
                    moved_by.append(h)
            except ConsistencyError as exc:
                logger.warning("heisenberg %s at %s: %s", triple, base[0], exc.detail)
        rows.append(HeisenbergRow(triple=list(triple), applicable=True, moved_by=moved_by, passed=bool(moved_by)))
    return HeisenbergReport(base_index=list(base[0]), rows=rows, passed=all(row.passed for row in rows))
