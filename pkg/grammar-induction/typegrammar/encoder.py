"""the recursive type encoder: leaf states for primitives, one node step per constructor"""

from typing import Dict, List, Sequence, Union

import numpy as np

from autodiff import engine as F
from autodiff.engine import Tensor
from calculus.types import ComplexType, PrimitiveType, SemType, depth
from utils.errors import ShapeError

from .weights import TypeGrammarWeights


def wrapped_primitives(weights: TypeGrammarWeights) -> Tensor:
    """encoder states for every primitive, one row each in declaration order"""
    return weights.encoder.leaves(weights.primitive_embeddings)


def _construct(weights: TypeGrammarWeights, constructor_ids: Sequence[int], left: Tensor, right: Tensor) -> Tensor:
    x_d = F.take(weights.constructor_embeddings, list(constructor_ids), axis=0)
    return weights.encoder.node(x_d, left, right)


def encode_types(weights: TypeGrammarWeights, types: Sequence[SemType]) -> Tensor:
    """embeddings for a list of types, shape (len(types), m_type).

    distinct subtypes are encoded once; all subtypes of one depth share one
    node step.
    """
    if not types:
        raise ShapeError("encode_types needs at least one type")
    by_depth: Dict[int, List[ComplexType]] = {}
    seen = set()

    def collect(t: SemType) -> None:
        if t in seen or isinstance(t, PrimitiveType):
            return
        seen.add(t)
        collect(t.left)
        collect(t.right)
        by_depth.setdefault(depth(t), []).append(t)

    for t in types:
        collect(t)

    index = {p: i for i, p in enumerate(weights.calculus.primitives)}
    table = wrapped_primitives(weights)
    row: Dict[SemType, int] = dict(index)
    size = len(index)
    for d in sorted(by_depth):
        level = by_depth[d]
        left = F.take(table, [row[t.left] for t in level], axis=0)
        right = F.take(table, [row[t.right] for t in level], axis=0)
        encoded = _construct(weights, [t.constructor for t in level], left, right)
        for offset, t in enumerate(level):
            row[t] = size + offset
        size += len(level)
        table = F.concat([table, encoded], axis=0)
    return weights.encoder.embedding(F.take(table, [row[t] for t in types], axis=0))


def encode_type(weights: TypeGrammarWeights, t: SemType) -> Tensor:
    return F.take(encode_types(weights, [t]), 0, axis=0)


def vector_raise(
    weights: TypeGrammarWeights,
    tau: Tensor,
    r: Union[PrimitiveType, Sequence[PrimitiveType]],
) -> Tensor:
    """run the encoder over the embedding tree [[tau, r], r].

    tau is one embedding (m,) or a batch (B, m); r is one primitive for the
    whole batch or one per row.
    """
    tau = F.as_tensor(tau)
    single = tau.ndim == 1
    if single:
        tau = F.reshape(tau, (1, -1))
    if tau.shape[1] != weights.m_type:
        raise ShapeError("raised embedding width differs from m_type", tau.shape, (weights.m_type,))
    batch = tau.shape[0]
    raisers = [r] * batch if isinstance(r, PrimitiveType) else list(r)
    if len(raisers) != batch:
        raise ShapeError("one raising primitive per row", (len(raisers),), tau.shape)

    wrapped = F.take(wrapped_primitives(weights), [weights.calculus.index[p] for p in raisers], axis=0)
    constructors = np.zeros(batch, dtype=np.int64)
    inner = _construct(weights, constructors, weights.encoder.lift(tau), wrapped)
    outer = _construct(weights, constructors, inner, wrapped)
    outer = weights.encoder.embedding(outer)
    return F.reshape(outer, (-1,)) if single else outer
