"""undirected application, first-order undirected composition and type raising"""

from dataclasses import dataclass
from enum import Enum
from typing import FrozenSet, Iterable, Optional, Sequence, Set, Tuple

from .types import ComplexType, PrimitiveType, SemType


class Combinator(str, Enum):
    IDENTITY = "identity"
    APPLY = "apply"
    COMPOSE = "compose"

    @property
    def arity(self) -> int:
        return 1 if self is Combinator.IDENTITY else 2


class RaiseSide(str, Enum):
    NONE = "none"
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class CombinatoryAction:
    combinator: Combinator
    raise_side: RaiseSide

    def __str__(self) -> str:
        return f"{self.combinator.value}/{self.raise_side.value}"


# fixed order shared by the controller's output head
ACTIONS: Tuple[CombinatoryAction, ...] = tuple(
    CombinatoryAction(c, side)
    for c in (Combinator.APPLY, Combinator.COMPOSE)
    for side in (RaiseSide.NONE, RaiseSide.LEFT, RaiseSide.RIGHT)
)
ACTION_INDEX = {action: i for i, action in enumerate(ACTIONS)}


@dataclass(frozen=True)
class ViableAction:
    action: CombinatoryAction
    raise_with: Optional[PrimitiveType]
    result: SemType


def apply_types(t0: SemType, t1: SemType) -> FrozenSet[SemType]:
    """apply(<a,b>, a) = apply(a, <a,b>) = b"""
    results: Set[SemType] = set()
    if isinstance(t0, ComplexType) and t0.left == t1:
        results.add(t0.right)
    if isinstance(t1, ComplexType) and t1.left == t0:
        results.add(t1.right)
    return frozenset(results)


def compose_types(t0: SemType, t1: SemType) -> FrozenSet[SemType]:
    """compose(<a,b>, <b,c>) = <a,c>, in either argument order"""
    results: Set[SemType] = set()
    if isinstance(t0, ComplexType) and isinstance(t1, ComplexType):
        if t0.right == t1.left:
            results.add(ComplexType(t0.left, t1.right))
        if t1.right == t0.left:
            results.add(ComplexType(t1.left, t0.right))
    return frozenset(results)


def combine_types(combinator: Combinator, t0: SemType, t1: SemType) -> FrozenSet[SemType]:
    if combinator is Combinator.APPLY:
        return apply_types(t0, t1)
    if combinator is Combinator.COMPOSE:
        return compose_types(t0, t1)
    raise ValueError(f"{combinator.value} is not a binary combinator")


def raise_type(t: SemType, r: PrimitiveType) -> ComplexType:
    """t -> <<t,r>,r>"""
    return ComplexType(ComplexType(t, r), r)


def viable_actions(
    t0: SemType,
    t1: SemType,
    primitives: Sequence[PrimitiveType],
    actions: Iterable[CombinatoryAction] = ACTIONS,
) -> FrozenSet[ViableAction]:
    """every (action, raising primitive, result) that symbolically succeeds"""
    viable: Set[ViableAction] = set()
    for action in actions:
        if action.raise_side is RaiseSide.NONE:
            for result in combine_types(action.combinator, t0, t1):
                viable.add(ViableAction(action, None, result))
            continue
        for r in primitives:
            if action.raise_side is RaiseSide.LEFT:
                left, right = raise_type(t0, r), t1
            else:
                left, right = t0, raise_type(t1, r)
            for result in combine_types(action.combinator, left, right):
                viable.add(ViableAction(action, r, result))
    return frozenset(viable)
