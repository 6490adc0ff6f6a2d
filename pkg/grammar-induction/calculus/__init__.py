from .combinators import (
    ACTION_INDEX,
    ACTIONS,
    Combinator,
    CombinatoryAction,
    RaiseSide,
    ViableAction,
    apply_types,
    combine_types,
    compose_types,
    raise_type,
    viable_actions,
)
from .types import DEFAULT_PRIMITIVES, ComplexType, PrimitiveType, SemType, depth, fn, format_type, parse_type
from .universe import TypeCalculus, count_types

DEFAULT_CALCULUS = TypeCalculus(DEFAULT_PRIMITIVES)


def enumerate_types(max_depth: int):
    return DEFAULT_CALCULUS.enumerate_types(max_depth)


def sample_type(rng, max_depth: int = 4, recurse_prob: float = 0.4):
    return DEFAULT_CALCULUS.sample_type(rng, max_depth, recurse_prob)
