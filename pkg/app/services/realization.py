"""Homeomorphisms e, d, f of [0, 1] assembled piecewise from chart maps on the interval family.

Points are carried as (index, u) with u the relative position inside I_index, so
intervals far below double resolution on [0, 1] are still handled exactly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from app.schemas.reports import C1Report, PermutationReport
from app.services.chart_family import (
    ChartProfile,
    PTMap,
    default_profile,
    endpoint_derivatives,
    pt_eval_local,
    pt_log_derivative_local,
)
from app.services.group_core import Word, commutator_word, format_word, parse_word
from app.services.interval_system import IntervalFamily
from app.services.lattice_action import ActionConvention, LatticePoint, apply_generator


logger = logging.getLogger(__name__)

GENERATORS: tuple[str, ...] = ("e", "d", "f")
# relative position used to approach a shared endpoint from inside an interval
EDGE_OFFSET = 1e-7

_A = commutator_word(Word.letter("f"), Word.letter("e"))
_B = commutator_word(Word.letter("d"), Word.letter("f"))
COMMUTATOR_WORDS: dict[str, Word] = {
    "a": _A,
    "b": _B,
    "c": commutator_word(Word.letter("d"), _A),
}


class UnsafeEvaluationError(Exception):
    """Raised when a word leaves the truncation-closed part of the family."""

    def __init__(
        self,
        code: str,
        detail: str | None = None,
        prefix: str | None = None,
        index: tuple[int, int, int] | None = None,
    ) -> None:
        self.code = code
        self.detail = detail or code
        self.prefix = prefix
        self.index = index
        super().__init__(self.detail)


def expand_commutators(word: Word) -> Word:
    """Rewrite a, b, c through their commutator words in e, d, f."""
    pairs: list[tuple[str, int]] = []
    for letter, exponent in word.syllables:
        if letter in COMMUTATOR_WORDS:
            pairs.extend((COMMUTATOR_WORDS[letter] ** exponent).syllables)
        else:
            pairs.append((letter, exponent))
    return Word.from_pairs(pairs)


def as_word(word: Word | str) -> Word:
    parsed = parse_word(word) if isinstance(word, str) else word
    return expand_commutators(parsed)


@dataclass(frozen=True, slots=True)
class FaultInjection:
    """Scales |I'| of one stored map; used to prove the C1 check can fail."""

    generator: str
    index: tuple[int, int, int]
    factor: float = 1.01


@dataclass(eq=False)
class Realization:
    family: IntervalFamily
    profile: ChartProfile
    maps: dict[tuple[str, int], dict[LatticePoint, PTMap]] = field(repr=False)

    def target(self, letter: str, sign: int, idx: tuple[int, int, int]) -> LatticePoint:
        return apply_generator(letter, idx, ActionConvention.INTERVAL, sign)

    def is_safe(self, letter: str, sign: int, idx: tuple[int, int, int]) -> bool:
        return LatticePoint(*idx) in self.maps[(letter, sign)]

    def index_path(self, word: Word | str, idx: tuple[int, int, int]) -> list[LatticePoint] | None:
        """Indices visited while applying the word right to left, or None if some step is unsafe."""
        point = LatticePoint(*idx)
        path = [point]
        for letter, sign in reversed(list(as_word(word).unit_steps())):
            if point not in self.maps[(letter, sign)]:
                return None
            point = self.target(letter, sign, point)
            path.append(point)
        return path

    def safe_indices(self, word: Word | str) -> list[LatticePoint]:
        w = as_word(word)
        return [idx for idx in self.family.indices() if self.index_path(w, idx) is not None]

    def _walk(
        self, word: Word | str, idx: tuple[int, int, int], u: ArrayLike, with_derivative: bool
    ) -> tuple[LatticePoint, NDArray[np.float64], NDArray[np.float64]]:
        w = as_word(word)
        point = LatticePoint(*idx)
        v = np.atleast_1d(np.asarray(u, dtype=float)).copy()
        log_d = np.zeros_like(v)
        applied: list[tuple[str, int]] = []
        for letter, sign in reversed(list(w.unit_steps())):
            m = self.maps[(letter, sign)].get(point)
            if m is None:
                prefix = format_word(Word.from_pairs(reversed(applied + [(letter, sign)])))
                raise UnsafeEvaluationError(
                    "unsafe_prefix", f"{prefix} leaves the truncated family at {point}", prefix=prefix, index=point
                )
            if with_derivative:
                log_d += pt_log_derivative_local(m, v, self.profile)
            v = pt_eval_local(m, v, self.profile)
            point = self.target(letter, sign, point)
            applied.append((letter, sign))
        return point, v, log_d

    def eval_local(
        self, word: Word | str, idx: tuple[int, int, int], u: ArrayLike
    ) -> tuple[LatticePoint, NDArray[np.float64]]:
        point, v, _ = self._walk(word, idx, u, with_derivative=False)
        return point, v

    def log_derivative_local(
        self, word: Word | str, idx: tuple[int, int, int], u: ArrayLike
    ) -> tuple[LatticePoint, NDArray[np.float64], NDArray[np.float64]]:
        return self._walk(word, idx, u, with_derivative=True)

    def _local(self, x: float) -> tuple[LatticePoint, float]:
        local = self.family.to_local(x)
        if local is None:
            raise UnsafeEvaluationError("outside_family", f"x={x} outside [0, 1]")
        return local

    def eval(self, word: Word | str, x: float) -> float:
        idx, u = self._local(x)
        point, v = self.eval_local(word, idx, u)
        return self.family.to_global(point, float(v[0]))

    def derivative(self, word: Word | str, x: float) -> float:
        idx, u = self._local(x)
        _, _, log_d = self.log_derivative_local(word, idx, u)
        return float(np.exp(log_d[0]))


def build_action(
    family: IntervalFamily,
    profile: ChartProfile | None = None,
    fault: FaultInjection | None = None,
) -> Realization:
    profile = profile or default_profile()
    N = family.N
    lengths = family.raw / family.total

    def length(p: tuple[int, int, int]) -> float:
        return float(lengths[p[0] + N, p[1] + N, p[2] + N])

    def has_predecessor(p: tuple[int, int, int]) -> bool:
        return family.contains(p) and p[2] - 1 >= -N

    maps: dict[tuple[str, int], dict[LatticePoint, PTMap]] = {}
    for letter in GENERATORS:
        for sign in (1, -1):
            table: dict[LatticePoint, PTMap] = {}
            for idx in family.indices():
                if not has_predecessor(idx):
                    continue
                tgt = apply_generator(letter, idx, ActionConvention.INTERVAL, sign)
                if not has_predecessor(tgt):
                    continue
                prev_i = (idx.i, idx.j, idx.k - 1)
                prev_j = (tgt.i, tgt.j, tgt.k - 1)
                len_i_prev = length(prev_i)
                if fault is not None and sign == 1 and letter == fault.generator and tuple(idx) == tuple(fault.index):
                    len_i_prev *= fault.factor
                    logger.warning("fault injected into %s at %s (factor %.4f)", letter, idx, fault.factor)
                table[idx] = PTMap(
                    len_i_prev=len_i_prev,
                    len_i=length(idx),
                    len_j_prev=length(prev_j),
                    len_j=length(tgt),
                    left_i=family.left_endpoint(idx),
                    left_j=family.left_endpoint(tgt),
                )
            maps[(letter, sign)] = table
    realization = Realization(family=family, profile=profile, maps=maps)
    logger.info(
        "built realization N=%d (%s)",
        N,
        ", ".join(f"{letter}{'+' if sign > 0 else '-'}:{len(table)}" for (letter, sign), table in maps.items()),
    )
    return realization


def check_c1_matching(realization: Realization, generators: Iterable[str] = GENERATORS) -> C1Report:
    """Compare one-sided derivatives at endpoints shared by I_{i,j,k} and I_{i,j,k+1}.

    The closed-form endpoint derivatives are compared, and so are the interior chart
    derivatives just inside each side of the shared endpoint.
    """
    letters = list(generators)
    profile = realization.profile
    worst = 0.0
    worst_at: str | None = None
    worst_limit = 0.0
    closed_gap = 0.0
    checked = 0
    for letter in letters:
        for sign in (1, -1):
            table = realization.maps[(letter, sign)]
            for idx, m in table.items():
                nxt = table.get(LatticePoint(idx.i, idx.j, idx.k + 1))
                if nxt is None:
                    continue
                right = endpoint_derivatives(m)[1]
                left = endpoint_derivatives(nxt)[0]
                mismatch = abs(float(np.log(right / left)))
                from_left = float(pt_log_derivative_local(m, [1.0 - EDGE_OFFSET], profile)[0])
                from_right = float(pt_log_derivative_local(nxt, [EDGE_OFFSET], profile)[0])
                worst_limit = max(worst_limit, abs(from_left - from_right))
                closed_gap = max(
                    closed_gap, abs(from_left - float(np.log(right))), abs(from_right - float(np.log(left)))
                )
                checked += 1
                if mismatch > worst:
                    worst = mismatch
                    worst_at = f"{letter}{'' if sign > 0 else '^-1'} between {idx} and {idx.k + 1}"
    return C1Report(
        generators=letters,
        endpoints_checked=checked,
        max_mismatch=worst,
        max_limit_mismatch=worst_limit,
        max_closed_form_gap=closed_gap,
        worst=worst_at,
    )


def induced_permutation_check(
    realization: Realization,
    generators: Iterable[str] = GENERATORS,
    sample: int | None = None,
    seed: int = 0,
) -> PermutationReport:
    """locate(g(midpoint of I_idx)) must equal the lattice image of idx for every safe idx."""
    family = realization.family
    pairs = [
        (letter, sign, idx)
        for letter in generators
        for sign in (1, -1)
        for idx in realization.maps[(letter, sign)]
    ]
    if sample is not None and sample < len(pairs):
        rng = np.random.default_rng(seed)
        chosen = rng.choice(len(pairs), size=sample, replace=False)
        pairs = [pairs[int(n)] for n in sorted(chosen)]
    mismatches: list[str] = []
    for letter, sign, idx in pairs:
        word = Word.letter(letter, sign)
        image = realization.eval(word, family.midpoint(idx))
        located = family.locate(image)
        expected = realization.target(letter, sign, idx)
        if located != expected:
            mismatches.append(f"{format_word(word)} at {idx}: located {located}, expected {expected}")
    return PermutationReport(checked=len(pairs), mismatches=len(mismatches), examples=mismatches[:10])
