from typing import Dict, FrozenSet, List, Sequence

import numpy as np

from autodiff import engine as F
from autodiff.engine import Tensor
from calculus.combinators import ACTION_INDEX, ACTIONS, RaiseSide, ViableAction
from calculus.types import PrimitiveType
from utils.errors import ShapeError

from .weights import TypeGrammarWeights


def action_probs(weights: TypeGrammarWeights, left: Tensor, right: Tensor) -> Tensor:
    """softmax(ACTION(left + right)) over the actions in ACTIONS order"""
    left, right = F.as_tensor(left), F.as_tensor(right)
    if left.shape != right.shape or left.shape[-1] != weights.m_interp:
        raise ShapeError("action inputs must both have width m_interp", left.shape, right.shape)
    return F.softmax(weights.action(F.concat([left, right], axis=-1)))


def raise_probs(weights: TypeGrammarWeights, lam: Tensor) -> Tensor:
    lam = F.as_tensor(lam)
    if lam.shape[-1] != weights.m_interp:
        raise ShapeError("raise input must have width m_interp", lam.shape, (weights.m_interp,))
    return F.softmax(weights.raise_head(lam))


def viable_action_targets(viable: FrozenSet[ViableAction]) -> np.ndarray:
    """uniform distribution over the action classes that succeed symbolically"""
    target = np.zeros(len(ACTIONS))
    for item in viable:
        target[ACTION_INDEX[item.action]] = 1.0
    total = target.sum()
    return target / total if total else target


def raise_targets(viable: FrozenSet[ViableAction], side: RaiseSide,
                  primitives: Sequence[PrimitiveType]) -> np.ndarray:
    """uniform over the primitives whose raising of `side` makes some action succeed"""
    index: Dict[PrimitiveType, int] = {p: i for i, p in enumerate(primitives)}
    target = np.zeros(len(primitives))
    for item in viable:
        if item.action.raise_side is side and item.raise_with is not None:
            target[index[item.raise_with]] = 1.0
    total = target.sum()
    return target / total if total else target


def viable_mass(probs: np.ndarray, viable: FrozenSet[ViableAction]) -> float:
    chosen: List[int] = sorted({ACTION_INDEX[item.action] for item in viable})
    return float(np.asarray(probs)[chosen].sum())
