"""Exact arithmetic in N4, the group of 4x4 lower unitriangular integer matrices.

Elements are kept in the normal form f^n1 e^n2 d^n3 a^n4 b^n5 c^n6. Products go
through the matrix representation, which doubles as its own oracle.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence


INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1

LETTERS: tuple[str, ...] = ("f", "e", "d", "a", "b", "c")

# zero-based (row, column) of each generator's off-diagonal entry
SLOTS: dict[str, tuple[int, int]] = {
    "e": (1, 0),
    "a": (2, 0),
    "f": (2, 1),
    "c": (3, 0),
    "b": (3, 1),
    "d": (3, 2),
}

HEISENBERG_TRIPLES: tuple[tuple[str, str, str], ...] = (
    ("b", "e", "c"),
    ("d", "a", "c"),
    ("d", "f", "b"),
    ("f", "e", "a"),
)

_SUPERSCRIPTS = {
    "⁰": "0",
    "¹": "1",
    "²": "2",
    "³": "3",
    "⁴": "4",
    "⁵": "5",
    "⁶": "6",
    "⁷": "7",
    "⁸": "8",
    "⁹": "9",
    "⁻": "-",
    "⁺": "+",
}


class GroupArithmeticError(Exception):
    """Raised on overflow, malformed matrices or unparsable words."""

    def __init__(self, code: str, detail: str | None = None) -> None:
        self.code = code
        self.detail = detail or code
        super().__init__(self.detail)


def _checked(value: int, what: str) -> int:
    if value < INT64_MIN or value > INT64_MAX:
        raise GroupArithmeticError("exponent_overflow", f"{what}={value} exceeds 64-bit range")
    return value


@dataclass(frozen=True, slots=True)
class IntMatrix4:
    rows: tuple[tuple[int, int, int, int], ...]

    @classmethod
    def identity(cls) -> "IntMatrix4":
        return cls(tuple(tuple(1 if r == c else 0 for c in range(4)) for r in range(4)))  # type: ignore[arg-type]

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "IntMatrix4":
        if len(rows) != 4 or any(len(row) != 4 for row in rows):
            raise GroupArithmeticError("not_unitriangular", "matrix must be 4x4")
        return cls(tuple(tuple(operator.index(x) for x in row) for row in rows))  # type: ignore[arg-type]

    @classmethod
    def generator(cls, letter: str, power: int = 1) -> "IntMatrix4":
        if letter not in SLOTS:
            raise GroupArithmeticError("word_syntax", f"unknown generator {letter!r}")
        row, col = SLOTS[letter]
        rows = [[1 if r == c else 0 for c in range(4)] for r in range(4)]
        rows[row][col] = power
        return cls.from_rows(rows)

    def __getitem__(self, index: tuple[int, int]) -> int:
        return self.rows[index[0]][index[1]]

    def __matmul__(self, other: "IntMatrix4") -> "IntMatrix4":
        a, b = self.rows, other.rows
        return IntMatrix4(
            tuple(  # type: ignore[arg-type]
                tuple(sum(a[r][t] * b[t][c] for t in range(4)) for c in range(4)) for r in range(4)
            )
        )

    def is_lower_unitriangular(self) -> bool:
        for r in range(4):
            if self.rows[r][r] != 1:
                return False
            if any(self.rows[r][c] != 0 for c in range(r + 1, 4)):
                return False
        return True

    def _nilpotent_part(self) -> "IntMatrix4":
        return IntMatrix4(
            tuple(  # type: ignore[arg-type]
                tuple(self.rows[r][c] - (1 if r == c else 0) for c in range(4)) for r in range(4)
            )
        )

    def power(self, n: int) -> "IntMatrix4":
        """(I + N)^n = I + nN + C(n,2)N^2 + C(n,3)N^3, valid for every integer n since N^4 = 0."""
        nil = self._nilpotent_part()
        nil2 = nil @ nil
        nil3 = nil2 @ nil
        c1 = n
        c2 = n * (n - 1) // 2
        c3 = n * (n - 1) * (n - 2) // 6
        return IntMatrix4(
            tuple(  # type: ignore[arg-type]
                tuple(
                    (1 if r == c else 0) + c1 * nil[r, c] + c2 * nil2[r, c] + c3 * nil3[r, c]
                    for c in range(4)
                )
                for r in range(4)
            )
        )

    def inverse(self) -> "IntMatrix4":
        return self.power(-1)


@dataclass(frozen=True, slots=True)
class N4Element:
    n1: int = 0
    n2: int = 0
    n3: int = 0
    n4: int = 0
    n5: int = 0
    n6: int = 0

    def __post_init__(self) -> None:
        for name in ("n1", "n2", "n3", "n4", "n5", "n6"):
            value = operator.index(getattr(self, name))
            object.__setattr__(self, name, _checked(value, name))

    @classmethod
    def identity(cls) -> "N4Element":
        return cls()

    @classmethod
    def generator(cls, letter: str, power: int = 1) -> "N4Element":
        if letter not in LETTERS:
            raise GroupArithmeticError("word_syntax", f"unknown generator {letter!r}")
        exponents = [0] * 6
        exponents[LETTERS.index(letter)] = power
        return cls(*exponents)

    @classmethod
    def from_exponents(cls, exponents: Iterable[int]) -> "N4Element":
        values = list(exponents)
        if len(values) != 6:
            raise GroupArithmeticError("word_syntax", "six exponents expected")
        return cls(*values)

    @property
    def exponents(self) -> tuple[int, int, int, int, int, int]:
        return (self.n1, self.n2, self.n3, self.n4, self.n5, self.n6)

    def is_identity(self) -> bool:
        return not any(self.exponents)

    def in_derived_subgroup(self) -> bool:
        return self.n1 == 0 and self.n2 == 0 and self.n3 == 0

    def is_central(self) -> bool:
        return self.exponents[:5] == (0, 0, 0, 0, 0)

    def __mul__(self, other: "N4Element") -> "N4Element":
        return multiply(self, other)

    def __str__(self) -> str:
        return format_element(self)


def to_matrix(g: N4Element) -> IntMatrix4:
    rows = [[1 if r == c else 0 for c in range(4)] for r in range(4)]
    for letter, exponent in zip(LETTERS, g.exponents):
        if exponent:
            # right multiplication by I + n*E[r, c] adds n * column r to column c
            src, dst = SLOTS[letter]
            for row in rows:
                row[dst] += exponent * row[src]
    return IntMatrix4.from_rows(rows)


def from_matrix(m: IntMatrix4) -> N4Element:
    if not m.is_lower_unitriangular():
        raise GroupArithmeticError("not_unitriangular", f"rows={m.rows}")
    n2 = m[1, 0]
    n1 = m[2, 1]
    n3 = m[3, 2]
    # F^n1 E^n2 D^n3 contributes n1*n2 at the a-slot and A^n4 D^n3 adds n3*n4 at the c-slot
    n4 = m[2, 0] - n1 * n2
    n5 = m[3, 1]
    n6 = m[3, 0] - n3 * n4
    return N4Element(n1, n2, n3, n4, n5, n6)


def multiply(g: N4Element, h: N4Element) -> N4Element:
    return from_matrix(to_matrix(g) @ to_matrix(h))


def inverse(g: N4Element) -> N4Element:
    return from_matrix(to_matrix(g).inverse())


def power(g: N4Element, n: int) -> N4Element:
    return from_matrix(to_matrix(g).power(n))


def commutator(g: N4Element, h: N4Element) -> N4Element:
    """[g, h] = g h g^-1 h^-1."""
    mg, mh = to_matrix(g), to_matrix(h)
    return from_matrix(mg @ mh @ mg.inverse() @ mh.inverse())


# ---------------------------------------------------------------------------
# Words


@dataclass(frozen=True, slots=True)
class Word:
    """Freely reduced sequence of (letter, nonzero exponent) syllables."""

    syllables: tuple[tuple[str, int], ...] = ()

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, int]]) -> "Word":
        stack: list[tuple[str, int]] = []
        for letter, exponent in pairs:
            if letter not in LETTERS:
                raise GroupArithmeticError("word_syntax", f"unknown generator {letter!r}")
            exponent = operator.index(exponent)
            if exponent == 0:
                continue
            if stack and stack[-1][0] == letter:
                merged = stack[-1][1] + exponent
                stack.pop()
                if merged:
                    stack.append((letter, merged))
            else:
                stack.append((letter, exponent))
        return cls(tuple(stack))

    @classmethod
    def letter(cls, letter: str, exponent: int = 1) -> "Word":
        return cls.from_pairs([(letter, exponent)])

    def inverse(self) -> "Word":
        return Word.from_pairs((letter, -exponent) for letter, exponent in reversed(self.syllables))

    def __mul__(self, other: "Word") -> "Word":
        return Word.from_pairs(self.syllables + other.syllables)

    def __pow__(self, n: int) -> "Word":
        base = self if n >= 0 else self.inverse()
        return Word.from_pairs(base.syllables * abs(n))

    def __len__(self) -> int:
        return sum(abs(exponent) for _, exponent in self.syllables)

    def __bool__(self) -> bool:
        return bool(self.syllables)

    def letters(self) -> set[str]:
        return {letter for letter, _ in self.syllables}

    def unit_steps(self) -> Iterator[tuple[str, int]]:
        """Letters of the word left to right as (letter, +1/-1)."""
        for letter, exponent in self.syllables:
            sign = 1 if exponent > 0 else -1
            for _ in range(abs(exponent)):
                yield letter, sign

    def __str__(self) -> str:
        return format_word(self)


def commutator_word(x: Word, y: Word) -> Word:
    return x * y * x.inverse() * y.inverse()


def format_word(word: Word) -> str:
    if not word.syllables:
        return "1"
    parts = []
    for letter, exponent in word.syllables:
        parts.append(letter if exponent == 1 else f"{letter}^{exponent}")
    return " ".join(parts)


def format_element(g: N4Element) -> str:
    return format_word(Word.from_pairs(zip(LETTERS, g.exponents)))


class _WordParser:
    def __init__(self, text: str) -> None:
        # superscripts arrive without a caret; mark them so the exponent reader sees one
        self.text = self._mark_superscripts(text)
        self.pos = 0

    @staticmethod
    def _mark_superscripts(text: str) -> str:
        out: list[str] = []
        in_sup = False
        for ch in text:
            if ch in _SUPERSCRIPTS:
                if not in_sup:
                    out.append("^")
                    in_sup = True
                out.append(_SUPERSCRIPTS[ch])
            else:
                in_sup = False
                out.append(ch.replace("−", "-"))
        return "".join(out)

    def error(self, message: str) -> GroupArithmeticError:
        return GroupArithmeticError("word_syntax", f"{message} at position {self.pos} in {self.text!r}")

    def skip(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] in " \t·*":
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse(self) -> Word:
        word = self.sequence(closing="")
        if self.peek():
            raise self.error("unexpected character")
        return word

    def sequence(self, closing: str) -> Word:
        pairs: list[tuple[str, int]] = []
        while True:
            ch = self.peek()
            if not ch or ch in closing:
                return Word.from_pairs(pairs)
            pairs.extend(self.factor().syllables)

    def factor(self) -> Word:
        ch = self.peek()
        if ch in LETTERS:
            self.pos += 1
            return Word.letter(ch, self.exponent())
        if ch == "1":
            self.pos += 1
            return Word()
        if ch == "[":
            self.pos += 1
            left = self.sequence(closing=",")
            if self.peek() != ",":
                raise self.error("expected ','")
            self.pos += 1
            right = self.sequence(closing="]")
            if self.peek() != "]":
                raise self.error("expected ']'")
            self.pos += 1
            return commutator_word(left, right) ** self.exponent()
        if ch == "(":
            self.pos += 1
            inner = self.sequence(closing=")")
            if self.peek() != ")":
                raise self.error("expected ')'")
            self.pos += 1
            return inner ** self.exponent()
        raise self.error(f"unexpected {ch!r}")

    def exponent(self) -> int:
        if self.pos >= len(self.text) or self.text[self.pos] != "^":
            return 1
        self.pos += 1
        braced = self.pos < len(self.text) and self.text[self.pos] == "{"
        if braced:
            self.pos += 1
        start = self.pos
        if self.pos < len(self.text) and self.text[self.pos] in "+-":
            self.pos += 1
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        token = self.text[start : self.pos]
        if token in ("", "+", "-"):
            raise self.error("missing exponent")
        if braced:
            if self.pos >= len(self.text) or self.text[self.pos] != "}":
                raise self.error("expected '}'")
            self.pos += 1
        return int(token)


def parse_word(text: str) -> Word:
    return _WordParser(text).parse()


def evaluate_word(word: Word) -> N4Element:
    result = IntMatrix4.identity()
    for letter, exponent in word.syllables:
        result = result @ IntMatrix4.generator(letter, exponent)
    return from_matrix(result)


def parse_element(text: str) -> N4Element:
    return evaluate_word(parse_word(text))


# ---------------------------------------------------------------------------
# Identities behind the embedding argument


def embedding_identity_check(n1: int, n2: int, n3: int) -> bool:
    """[d^n1 e^n2, a^n1 b^-n2 c^n3] == c^(n1^2 + n2^2)."""
    if n1 == 0 and n2 == 0:
        raise GroupArithmeticError("degenerate_pair", "(n1, n2) must not be (0, 0)")
    left = N4Element(0, n2, n1, 0, 0, 0)
    right = N4Element(0, 0, 0, n1, -n2, n3)
    return commutator(left, right) == N4Element.generator("c", n1 * n1 + n2 * n2)


def injectivity_witness_de(n1: int, n2: int, n3: int, n4: int, n5: int) -> bool:
    """[d^n1 e^n2 a^n3 b^n4 c^n5, a^n1 b^-n2] == c^(n1^2 + n2^2)."""
    if n1 == 0 and n2 == 0:
        raise GroupArithmeticError("degenerate_pair", "(n1, n2) must not be (0, 0)")
    left = evaluate_word(Word.from_pairs([("d", n1), ("e", n2), ("a", n3), ("b", n4), ("c", n5)]))
    right = N4Element(0, 0, 0, n1, -n2, 0)
    return commutator(left, right) == N4Element.generator("c", n1 * n1 + n2 * n2)


def injectivity_witness_f(n0: int, n1: int, n2: int, n3: int, n4: int, n5: int) -> bool:
    """[f^n0 e^n1 d^n2 a^n3 b^n4 c^n5, e] == a^n0 c^n4."""
    if n0 == 0:
        raise GroupArithmeticError("degenerate_pair", "n0 must be nonzero")
    left = N4Element(n0, n1, n2, n3, n4, n5)
    return commutator(left, N4Element.generator("e")) == N4Element(0, 0, 0, n0, 0, n4)


def lower_central_check(g: N4Element, h: N4Element) -> bool:
    """Commutator of anything with an element of <a, b, c> lands in <c>."""
    if not h.in_derived_subgroup():
        raise GroupArithmeticError("not_in_subgroup", f"{h} is not in <a, b, c>")
    return commutator(g, h).is_central()


def derived_series_check(x: N4Element, y: N4Element) -> bool:
    """Elements of the derived subgroup commute with each other."""
    if not (x.in_derived_subgroup() and y.in_derived_subgroup()):
        raise GroupArithmeticError("not_in_subgroup", "both arguments must lie in <a, b, c>")
    return commutator(x, y).is_identity()


def is_heisenberg_triple(h1: N4Element, h2: N4Element, h3: N4Element) -> bool:
    if h3.is_identity():
        return False
    return (
        commutator(h1, h2) == h3
        and commutator(h3, h1).is_identity()
        and commutator(h3, h2).is_identity()
    )


def heisenberg_triples() -> list[tuple[N4Element, N4Element, N4Element]]:
    return [
        (N4Element.generator(x), N4Element.generator(y), N4Element.generator(z))
        for x, y, z in HEISENBERG_TRIPLES
    ]
