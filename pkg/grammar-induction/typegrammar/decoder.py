"""depth-truncated type distributions produced by unrolling a decoder.

a distribution is a complete binary tree of decoder states stored level by
level: level d holds 2**d nodes per row, and node j of level d has children
2j and 2j+1 on level d + 1. at every node the decoder chooses between a
complex type (then recurses into both children) and one of the primitives.
the deepest level is forced to choose a primitive, so the mass over all type
trees that fit the tree is exactly one.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from autodiff import engine as F
from autodiff.engine import Tensor
from calculus.combinators import Combinator
from calculus.types import ComplexType, PrimitiveType, SemType, depth
from utils.errors import ContractError, ShapeError, UnsupportedDepthError

from .weights import TypeGrammarWeights


@dataclass
class TypeDistribution:
    primitives: Tuple[PrimitiveType, ...]
    depth: int
    # per level: (B, 2**d) log probabilities of recursing / stopping; None on the last level
    log_complex: List[Optional[Tensor]]
    log_simple: List[Optional[Tensor]]
    # per level: (B, 2**d, P) log probabilities of each primitive given a stop
    log_prim: List[Tensor]
    states: List[Tensor]

    @property
    def batch_size(self) -> int:
        return self.log_prim[0].shape[0]

    @property
    def num_nodes(self) -> int:
        return 2 ** (self.depth + 1) - 1

    def _map(self, fn) -> "TypeDistribution":
        def keep(t):
            return None if t is None else fn(t)

        return TypeDistribution(
            primitives=self.primitives,
            depth=self.depth,
            log_complex=[keep(t) for t in self.log_complex],
            log_simple=[keep(t) for t in self.log_simple],
            log_prim=[fn(t) for t in self.log_prim],
            states=[fn(t) for t in self.states],
        )

    def take(self, rows: Sequence[int]) -> "TypeDistribution":
        rows = np.asarray(rows, dtype=np.int64)
        return self._map(lambda t: F.take(t, rows, axis=0))

    def repeat(self, count: int) -> "TypeDistribution":
        return self.take(np.repeat(np.arange(self.batch_size), count))

    def total_mass(self) -> np.ndarray:
        """(B,) mass of all type trees of depth <= D; one up to rounding"""
        mass = np.exp(self.log_prim[self.depth].data).sum(axis=2)
        for d in range(self.depth - 1, -1, -1):
            stop = np.exp(self.log_simple[d].data) * np.exp(self.log_prim[d].data).sum(axis=2)
            children = mass.reshape(mass.shape[0], -1, 2).prod(axis=2)
            mass = stop + np.exp(self.log_complex[d].data) * children
        return mass[:, 0]

    def entropy(self) -> Tensor:
        return truncated_cross_entropy(self, self)


def unroll_decoder(weights: TypeGrammarWeights, combinator: Combinator, start: Tensor,
                   depth_limit: Optional[int] = None) -> TypeDistribution:
    """evaluate STRUCTURE and PRIMITIVE at every node state, children from FACTOR or the lstm step"""
    blocks = weights.decoder(combinator)
    start = F.as_tensor(start)
    if start.ndim == 1:
        start = F.reshape(start, (1, -1))
    if start.ndim != 2 or start.shape[1] != blocks.start_dim:
        raise ShapeError(f"{Combinator(combinator).value} decoder start state", start.shape, (blocks.start_dim,))
    D = weights.decoder_depth if depth_limit is None else depth_limit
    batch, width = start.shape[0], blocks.state_dim

    log_complex: List[Optional[Tensor]] = []
    log_simple: List[Optional[Tensor]] = []
    log_prim: List[Tensor] = []
    states: List[Tensor] = []
    flat = blocks.initial(start)
    for d in range(D + 1):
        nodes = 2 ** d
        states.append(F.reshape(flat, (batch, nodes, width)))
        head = blocks.readout(flat)
        log_prim.append(F.reshape(F.log_softmax(blocks.primitive(head)), (batch, nodes, -1)))
        if d == D:
            log_complex.append(None)
            log_simple.append(None)
            break
        z = F.reshape(blocks.structure(head), (batch, nodes))
        log_complex.append(F.log_sigmoid(z))
        log_simple.append(F.log_sigmoid(-z))
        # row b*nodes + j splits into rows b*2*nodes + 2j and 2j + 1
        flat = blocks.children(flat)

    return TypeDistribution(
        primitives=tuple(weights.calculus.primitives),
        depth=D,
        log_complex=log_complex,
        log_simple=log_simple,
        log_prim=log_prim,
        states=states,
    )


def _check_depth(dist: TypeDistribution, t: SemType) -> None:
    if depth(t) > dist.depth:
        raise UnsupportedDepthError(f"type of depth {depth(t)} does not fit a decoder of depth {dist.depth}")


def type_log_prob(dist: TypeDistribution, t: SemType, row: int = 0) -> float:
    """log P(t) as a float: the sum of the local decisions at t's nodes"""
    _check_depth(dist, t)
    index = {p: i for i, p in enumerate(dist.primitives)}

    def node(level: int, j: int, u: SemType) -> float:
        if isinstance(u, PrimitiveType):
            stop = 0.0 if level == dist.depth else float(dist.log_simple[level].data[row, j])
            return stop + float(dist.log_prim[level].data[row, j, index[u]])
        return float(dist.log_complex[level].data[row, j]) + (
            node(level + 1, 2 * j, u.left) + node(level + 1, 2 * j + 1, u.right)
        )

    return node(0, 0, t)


def type_log_probs(dist: TypeDistribution, types: Sequence[SemType]) -> Tensor:
    """differentiable log P(types[b]) under row b, shape (B,)"""
    if len(types) != dist.batch_size:
        raise ShapeError("one type per distribution row", (len(types),), (dist.batch_size,))
    index = {p: i for i, p in enumerate(dist.primitives)}
    num_prims = len(dist.primitives)
    picks: Dict[Tuple[str, int], Tuple[List[int], List[int]]] = {}

    def pick(kind: str, level: int, flat: int, row: int) -> None:
        flats, rows = picks.setdefault((kind, level), ([], []))
        flats.append(flat)
        rows.append(row)

    def walk(row: int, level: int, j: int, u: SemType) -> None:
        node = row * 2 ** level + j
        if isinstance(u, PrimitiveType):
            if level < dist.depth:
                pick("simple", level, node, row)
            pick("prim", level, node * num_prims + index[u], row)
            return
        pick("complex", level, node, row)
        walk(row, level + 1, 2 * j, u.left)
        walk(row, level + 1, 2 * j + 1, u.right)

    for row, t in enumerate(types):
        _check_depth(dist, t)
        walk(row, 0, 0, t)

    sources = {"complex": dist.log_complex, "simple": dist.log_simple, "prim": dist.log_prim}
    values, segments = [], []
    for (kind, level), (flats, rows) in sorted(picks.items()):
        values.append(F.take(F.reshape(sources[kind][level], (-1,)), flats, axis=0))
        segments.extend(rows)
    stacked = F.concat(values, axis=0) if len(values) > 1 else values[0]
    return F.segment_sum(stacked, segments, dist.batch_size)


def sample_from_decoder(dist: TypeDistribution, rng: np.random.Generator, row: int = 0) -> SemType:
    def draw(level: int, j: int) -> SemType:
        if level < dist.depth and rng.random() < np.exp(dist.log_complex[level].data[row, j]):
            left = draw(level + 1, 2 * j)
            right = draw(level + 1, 2 * j + 1)
            return ComplexType(left, right)
        probs = np.exp(dist.log_prim[level].data[row, j])
        return dist.primitives[int(rng.choice(len(probs), p=probs / probs.sum()))]

    return draw(0, 0)


def truncated_cross_entropy(P: TypeDistribution, Q: TypeDistribution) -> Tensor:
    """H(P, Q) over all type trees of depth <= D, row by row, shape (B,).

    aligned nodes are paired, so the cost is one pass over the node tree:
    H = -stop_P (log stop_Q + sum_k p_k log q_k) - complex_P log complex_Q
        + complex_P (H(left) + H(right))
    """
    if P.depth != Q.depth:
        raise ContractError(f"cross-entropy between decoders of depth {P.depth} and {Q.depth}")
    if P.batch_size != Q.batch_size:
        raise ShapeError("cross-entropy batch sizes differ", (P.batch_size,), (Q.batch_size,))
    batch = P.batch_size

    h: Optional[Tensor] = None
    for d in range(P.depth, -1, -1):
        # expected log q of the primitive drawn under p, (B, 2**d)
        primitive = F.tsum(F.exp(P.log_prim[d]) * Q.log_prim[d], axis=2)
        if d == P.depth:
            h = -primitive
            continue
        children = F.tsum(F.reshape(h, (batch, 2 ** d, 2)), axis=2)
        p_complex = F.exp(P.log_complex[d])
        h = (
            -(F.exp(P.log_simple[d]) * (Q.log_simple[d] + primitive))
            - p_complex * Q.log_complex[d]
            + p_complex * children
        )
    return F.reshape(h, (batch,))


def type_log_prob_table(dist: TypeDistribution, types: Sequence[SemType]) -> np.ndarray:
    """log P(t) for every row and every type at once, shape (B, len(types)); no gradients"""
    index = {p: i for i, p in enumerate(dist.primitives)}
    picks: Dict[Tuple[str, int], Tuple[List[int], List[int], List[int]]] = {}

    def pick(kind: str, level: int, column: int, j: int, k: int = 0) -> None:
        columns, nodes, prims = picks.setdefault((kind, level), ([], [], []))
        columns.append(column)
        nodes.append(j)
        prims.append(k)

    def walk(column: int, level: int, j: int, u: SemType) -> None:
        if isinstance(u, PrimitiveType):
            if level < dist.depth:
                pick("simple", level, column, j)
            pick("prim", level, column, j, index[u])
            return
        pick("complex", level, column, j)
        walk(column, level + 1, 2 * j, u.left)
        walk(column, level + 1, 2 * j + 1, u.right)

    for column, t in enumerate(types):
        _check_depth(dist, t)
        walk(column, 0, 0, t)

    table = np.zeros((dist.batch_size, len(types)))
    for (kind, level), (columns, nodes, prims) in picks.items():
        if kind == "prim":
            values = dist.log_prim[level].data[:, nodes, prims]
        else:
            source = dist.log_complex if kind == "complex" else dist.log_simple
            values = source[level].data[:, nodes]
        np.add.at(table, (slice(None), np.asarray(columns)), values)
    return table
