import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from calculus import (
    ACTIONS,
    Combinator,
    CombinatoryAction,
    ComplexType,
    PrimitiveType,
    RaiseSide,
    TypeCalculus,
    apply_types,
    compose_types,
    count_types,
    depth,
    fn,
    format_type,
    parse_type,
    raise_type,
    viable_actions,
)
from utils.errors import EnumerationLimitError, TypeParseError

E, S, T = PrimitiveType("e"), PrimitiveType("s"), PrimitiveType("t")
PRIMITIVES = (E, S, T)

primitive_types = st.sampled_from(PRIMITIVES)
sem_types = st.recursive(primitive_types, lambda inner: st.builds(ComplexType, inner, inner), max_leaves=8)


def test_parse_examples():
    assert parse_type("e") == E
    assert parse_type("<e,<s,t>>") == fn(E, fn(S, T))
    assert parse_type(" < e , t > ") == fn(E, T)


@pytest.mark.parametrize("text", ["<e,t>>", "<e,t", "", "<e t>", "<e,q>"])
def test_parse_rejects(text):
    with pytest.raises(TypeParseError):
        parse_type(text)


def test_parse_error_names_position():
    with pytest.raises(TypeParseError) as info:
        parse_type("<e,t>>")
    assert info.value.position == 5


def test_format_examples():
    assert format_type(T) == "t"
    assert format_type(raise_type(E, T)) == "<<e,t>,t>"
    assert format_type(fn(fn(E, E), T)) == "<<e,e>,t>"


@given(sem_types)
def test_format_parse_inverse(t):
    assert parse_type(format_type(t)) == t


def test_apply_examples():
    assert apply_types(fn(E, T), E) == {T}
    assert apply_types(E, fn(E, T)) == {T}
    assert apply_types(E, E) == frozenset()


def test_compose_examples():
    assert compose_types(fn(E, S), fn(S, T)) == {fn(E, T)}
    assert compose_types(fn(E, T), fn(T, E)) == {fn(E, E), fn(T, T)}
    assert compose_types(E, fn(E, T)) == frozenset()


@given(sem_types, sem_types)
def test_combinators_are_undirected(t0, t1):
    assert apply_types(t0, t1) == apply_types(t1, t0)
    assert compose_types(t0, t1) == compose_types(t1, t0)


def test_raise_examples():
    assert raise_type(E, T) == fn(fn(E, T), T)
    assert raise_type(fn(E, T), S) == fn(fn(fn(E, T), S), S)


@given(sem_types, primitive_types)
def test_raise_adds_two_levels(t, r):
    assert depth(raise_type(t, r)) == depth(t) + 2


def test_viable_actions_examples():
    viable = viable_actions(fn(E, T), E, PRIMITIVES)
    found = {(v.action, v.raise_with, v.result) for v in viable}
    assert (CombinatoryAction(Combinator.APPLY, RaiseSide.NONE), None, T) in found
    assert (CombinatoryAction(Combinator.APPLY, RaiseSide.RIGHT), T, T) in found
    assert (CombinatoryAction(Combinator.COMPOSE, RaiseSide.RIGHT), E, fn(fn(E, E), T)) in found


@given(sem_types, sem_types)
def test_viable_actions_agree_with_combinators(t0, t1):
    for item in viable_actions(t0, t1, PRIMITIVES):
        if item.action.raise_side is RaiseSide.NONE:
            assert item.raise_with is None
            left, right = t0, t1
        elif item.action.raise_side is RaiseSide.LEFT:
            left, right = raise_type(t0, item.raise_with), t1
        else:
            left, right = t0, raise_type(t1, item.raise_with)
        combine = apply_types if item.action.combinator is Combinator.APPLY else compose_types
        assert item.result in combine(left, right)


def test_action_order_is_fixed():
    assert [str(a) for a in ACTIONS] == [
        "apply/none", "apply/left", "apply/right", "compose/none", "compose/left", "compose/right",
    ]


@pytest.mark.parametrize("max_depth, expected", [(0, 3), (1, 12), (2, 147)])
def test_enumeration_counts(calculus, max_depth, expected):
    types = calculus.enumerate_types(max_depth)
    assert len(types) == expected == count_types(max_depth)
    assert len(set(types)) == expected


def test_enumeration_depth_three(calculus):
    assert len(calculus.enumerate_types(3)) == 21612


def test_enumeration_refuses_depth_four(calculus):
    with pytest.raises(EnumerationLimitError):
        calculus.enumerate_types(4)


def test_enumeration_order_matches_type_key(calculus):
    types = calculus.enumerate_types(2)
    assert types[:3] == list(PRIMITIVES)
    keys = [calculus.type_key(t) for t in types]
    assert len(set(keys)) == len(keys)


def test_sampler_forced_primitives(calculus, rng):
    assert all(isinstance(calculus.sample_type(rng, 4, 0.0), PrimitiveType) for _ in range(200))
    assert all(isinstance(calculus.sample_type(rng, 0, 0.9), PrimitiveType) for _ in range(200))


def test_sampler_root_frequency(calculus):
    rng = np.random.default_rng(0)
    complex_roots = sum(isinstance(calculus.sample_type(rng, 4, 0.4), ComplexType) for _ in range(100_000))
    assert abs(complex_roots / 100_000 - 0.4) < 0.01


def test_sampler_rejects_bad_probability(calculus, rng):
    with pytest.raises(ValueError):
        calculus.sample_type(rng, 2, 1.0)


@pytest.mark.parametrize("combinator", [Combinator.APPLY, Combinator.COMPOSE])
def test_viable_pairs_have_outputs(calculus, rng, combinator):
    for _ in range(100):
        t0, t1, outputs = calculus.sample_viable_pair(rng, combinator, 2)
        assert outputs
        assert outputs == (apply_types(t0, t1) if combinator is Combinator.APPLY else compose_types(t0, t1))


def test_custom_primitives():
    calculus = TypeCalculus(["e", "t"])
    assert len(calculus.enumerate_types(1)) == 2 + 4
    assert calculus.primitive("t") == T
