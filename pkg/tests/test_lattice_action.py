from __future__ import annotations

import pytest
from hypothesis import given, seed
from hypothesis import strategies as st

from app.services.group_core import N4Element, multiply, parse_element
from app.services.lattice_action import (
    ActionConvention,
    LatticeActionError,
    LatticePoint,
    apply,
    apply_generator,
    check_homomorphism,
    check_order_preservation,
    lex_less,
)


PROP = ActionConvention.PROPOSITION
INTERVAL = ActionConvention.INTERVAL

small = st.integers(min_value=-12, max_value=12)
elements = st.builds(N4Element, small, small, small, small, small, small)
points = st.builds(LatticePoint, small, small, small)


def test_generator_images() -> None:
    assert apply_generator("e", (0, 0, 0)) == LatticePoint(1, 0, 0)
    assert apply_generator("d", (4, -2, 7)) == LatticePoint(4, -1, 7)
    assert apply_generator("f", (2, 3, 5), PROP) == LatticePoint(2, 3, -1)
    assert apply_generator("f", (2, 3, 5), INTERVAL) == LatticePoint(2, 3, 11)


def test_c_is_a_unit_shift() -> None:
    assert apply_generator("c", (3, -4, 2), PROP) == LatticePoint(3, -4, 3)
    assert apply_generator("c", (3, -4, 2), INTERVAL) == LatticePoint(3, -4, 1)
    assert apply_generator("c", (0, 0, 0), PROP, exponent=-5) == LatticePoint(0, 0, -5)


def test_commutator_words_act_like_their_letters() -> None:
    p = LatticePoint(2, -3, 4)
    for conv in ActionConvention:
        assert apply(parse_element("f e f^-1 e^-1"), p, conv) == apply_generator("a", p, conv)
        assert apply(parse_element("d f d^-1 f^-1"), p, conv) == apply_generator("b", p, conv)
        assert apply(parse_element("d a d^-1 a^-1"), p, conv) == apply_generator("c", p, conv)


def test_conjugation_relation_d_a() -> None:
    # d a d^-1 = a c
    d, a, c = (N4Element.generator(x) for x in "dac")
    p = LatticePoint(-1, 5, 9)
    assert apply(multiply(d, a), p) == apply(multiply(multiply(a, c), d), p)


def test_unknown_generator() -> None:
    with pytest.raises(LatticeActionError) as exc:
        apply_generator("z", (0, 0, 0))

    assert exc.value.code == "unknown_generator"


def test_order_examples() -> None:
    f = N4Element.generator("f")
    assert apply(f, (0, 0, 0)) == LatticePoint(0, 0, 0)
    assert apply(f, (0, 0, 1)) == LatticePoint(0, 0, 1)
    assert apply(f, (1, 2, 9)) == LatticePoint(1, 2, 7)
    assert apply(f, (1, 3, -9)) == LatticePoint(1, 3, -12)
    assert lex_less((1, 2, 7), (1, 3, -12))


@pytest.mark.parametrize("conv", list(ActionConvention))
def test_random_checks_find_no_violations(conv: ActionConvention) -> None:
    hom = check_homomorphism(2000, seed=7, conv=conv)
    order = check_order_preservation(2000, seed=7, conv=conv)

    assert hom.violations == 0
    assert hom.convention == conv.value
    assert order.violations == 0


@seed(1)
@given(elements, elements, points)
def test_action_is_a_homomorphism(g: N4Element, h: N4Element, p: LatticePoint) -> None:
    for conv in ActionConvention:
        assert apply(multiply(g, h), p, conv) == apply(g, apply(h, p, conv), conv)


@seed(1)
@given(elements, points, points)
def test_action_preserves_lex_order(g: N4Element, p: LatticePoint, q: LatticePoint) -> None:
    if p == q:
        return
    lo, hi = (p, q) if lex_less(p, q) else (q, p)
    assert lex_less(apply(g, lo), apply(g, hi))
