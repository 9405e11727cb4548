from __future__ import annotations

from pathlib import Path
import sys

sys.path.append(str(Path(__file__).resolve().parents[1]))

import pytest
from hypothesis import given, seed
from hypothesis import strategies as st

from app.services.group_core import (
    GroupArithmeticError,
    N4Element,
    commutator,
    derived_series_check,
    embedding_identity_check,
    evaluate_word,
    format_word,
    from_matrix,
    heisenberg_triples,
    injectivity_witness_de,
    injectivity_witness_f,
    inverse,
    is_heisenberg_triple,
    lower_central_check,
    multiply,
    parse_element,
    parse_word,
    power,
    to_matrix,
)


gen = N4Element.generator
exponents = st.integers(min_value=-40, max_value=40)
elements = st.builds(N4Element, exponents, exponents, exponents, exponents, exponents, exponents)


def test_generator_matrices_and_normal_form() -> None:
    e = to_matrix(gen("e"))
    assert e[1, 0] == 1
    assert [e[r, c] for r in range(4) for c in range(r)] == [1, 0, 0, 0, 0, 0]

    fe = to_matrix(gen("f")) @ to_matrix(gen("e"))
    assert fe[2, 0] == 1
    assert from_matrix(fe) == N4Element(1, 1, 0, 0, 0, 0)
    assert from_matrix(to_matrix(gen("c"))) == N4Element(0, 0, 0, 0, 0, 1)
    assert from_matrix(to_matrix(N4Element.identity())).is_identity()


def test_multiply_reorders_into_normal_form() -> None:
    # e f = f e a^-1
    assert multiply(gen("e"), gen("f")) == N4Element(1, 1, 0, -1, 0, 0)
    # d f = f d b
    assert multiply(gen("d"), gen("f")) == N4Element(1, 0, 1, 0, 1, 0)


def test_commutator_relations() -> None:
    assert commutator(gen("f"), gen("e")) == gen("a")
    assert commutator(gen("d"), gen("f")) == gen("b")
    assert commutator(gen("d"), gen("a")) == gen("c")
    assert commutator(gen("e"), gen("d")).is_identity()
    for letter in "fedab":
        assert commutator(gen(letter), gen("c")).is_identity()


def test_evaluate_words() -> None:
    assert parse_element("d a d^-1 a^-1") == gen("c")
    assert parse_element("d [f,e] d⁻¹ [f,e]⁻¹") == gen("c")
    assert evaluate_word(parse_word("")).is_identity()
    assert parse_element("1") == N4Element.identity()
    assert parse_element("(e f)^2") == multiply(multiply(gen("e"), gen("f")), multiply(gen("e"), gen("f")))
    assert parse_element("c^{3} * c^-1") == gen("c", 2)


def test_parse_word_reduces_and_formats() -> None:
    assert format_word(parse_word("e e^2 e^-3 f")) == "f"
    assert format_word(parse_word("f² e⁻¹")) == "f^2 e^-1"
    assert format_word(parse_word("[e,d]")) == "e d e^-1 d^-1"
    assert format_word(parse_word("f f^-1")) == "1"


@pytest.mark.parametrize("text", ["x", "e^", "[e,d", "(e", "e^{2"])
def test_parse_word_rejects_bad_syntax(text: str) -> None:
    with pytest.raises(GroupArithmeticError) as exc:
        parse_word(text)

    assert exc.value.code == "word_syntax"


def test_embedding_identity_examples() -> None:
    assert embedding_identity_check(1, 0, 5)
    assert embedding_identity_check(2, 3, 0)
    assert embedding_identity_check(1, 1, -7)
    assert commutator(N4Element(0, 3, 2, 0, 0, 0), N4Element(0, 0, 0, 2, -3, 0)) == gen("c", 13)


def test_degenerate_pairs_raise() -> None:
    with pytest.raises(GroupArithmeticError) as exc:
        embedding_identity_check(0, 0, 4)
    assert exc.value.code == "degenerate_pair"

    with pytest.raises(GroupArithmeticError) as exc:
        injectivity_witness_f(0, 1, 2, 3, 4, 5)
    assert exc.value.code == "degenerate_pair"


def test_injectivity_witnesses() -> None:
    assert injectivity_witness_de(2, -1, 4, 0, 7)
    assert injectivity_witness_f(3, -2, 1, 5, -4, 9)


def test_subgroup_checks() -> None:
    h = N4Element(0, 0, 0, 2, -1, 5)
    k = N4Element(0, 0, 0, -3, 4, 1)
    assert lower_central_check(N4Element(1, 2, 3, 4, 5, 6), h)
    assert derived_series_check(h, k)

    with pytest.raises(GroupArithmeticError) as exc:
        lower_central_check(h, gen("e"))
    assert exc.value.code == "not_in_subgroup"


def test_heisenberg_triples() -> None:
    triples = heisenberg_triples()
    assert len(triples) == 4
    assert all(is_heisenberg_triple(*triple) for triple in triples)
    assert not is_heisenberg_triple(gen("e"), gen("d"), gen("c"))


def test_int64_overflow_is_reported() -> None:
    with pytest.raises(GroupArithmeticError) as exc:
        N4Element(2**63, 0, 0, 0, 0, 0)

    assert exc.value.code == "exponent_overflow"


@seed(1)
@given(elements)
def test_matrix_round_trip(g: N4Element) -> None:
    assert from_matrix(to_matrix(g)) == g


@seed(1)
@given(elements, elements, elements)
def test_group_axioms(x: N4Element, y: N4Element, z: N4Element) -> None:
    assert multiply(multiply(x, y), z) == multiply(x, multiply(y, z))
    assert multiply(x, inverse(x)).is_identity()
    assert power(x, 3) == multiply(x, multiply(x, x))
    assert multiply(power(x, -2), power(x, 2)).is_identity()
