"""type coherence and type constraint losses over one sentence chart.

a span's parent distribution is the identity decoder on its interpretation.
the children distribution of a split under an action comes from that
action's combinator decoder on the two child interpretations, after
vector-space raising of one side when the action asks for it. raising
marginalizes over the primitives with the RAISE head's weights.
"""

import logging
from dataclasses import dataclass
from typing import List, Literal, Sequence, Tuple

import numpy as np

from autodiff import engine as F
from autodiff.engine import Tensor
from autodiff.layers import MlpBlock, Module
from calculus.combinators import ACTIONS, Combinator, CombinatoryAction, RaiseSide
from chart.vector_chart import SentenceChart
from typegrammar.controller import action_probs, raise_probs
from typegrammar.decoder import TypeDistribution, truncated_cross_entropy, type_log_probs, unroll_decoder
from typegrammar.encoder import vector_raise
from typegrammar.weights import TypeGrammarWeights
from utils.errors import SpanError

from .anchors import AnchorTable

logger = logging.getLogger(__name__)

Divergence = Literal["cross_entropy", "kl"]
Triple = Tuple[int, int, int]


class InterpreterWeights(Module):
    def __init__(self, m_node: int, m_interp: int, rng: np.random.Generator):
        self.interpret = MlpBlock(2 * m_node, m_interp, rng)


def interpret_span(weights: InterpreterWeights, h: Tensor) -> Tensor:
    """lambda_ij = INTERPRET(h_in + h_out)"""
    return weights.interpret(h)


@dataclass
class CoherenceContext:
    """interpretations and parent distributions of every span, width-major"""

    chart: SentenceChart
    type_weights: TypeGrammarWeights
    lam: Tensor
    parent: TypeDistribution
    divergence: Divergence = "cross_entropy"

    @classmethod
    def build(cls, type_weights: TypeGrammarWeights, interpreter: InterpreterWeights,
              chart: SentenceChart, divergence: Divergence = "cross_entropy") -> "CoherenceContext":
        lam = interpret_span(interpreter, chart.span_table())
        parent = unroll_decoder(type_weights, Combinator.IDENTITY, lam)
        return cls(chart=chart, type_weights=type_weights, lam=lam, parent=parent, divergence=divergence)

    def interpretation(self, i: int, j: int) -> Tensor:
        return F.take(self.lam, self.chart.span_row(i, j), axis=0)


def children_distribution(
    weights: TypeGrammarWeights,
    action: CombinatoryAction,
    left: Tensor,
    right: Tensor,
) -> Tuple[TypeDistribution, Tensor]:
    """the action's component distributions and their mixture weights (B, C).

    components are stacked component-major: component c of pair b is row
    c * B + b. a plain action has one component with weight one; a raising
    action has one per primitive, weighted by the RAISE head on the raised side.
    """
    left, right = F.as_tensor(left), F.as_tensor(right)
    if left.ndim == 1:
        left, right = F.reshape(left, (1, -1)), F.reshape(right, (1, -1))
    combinator = action.combinator
    if action.raise_side is RaiseSide.NONE:
        dist = unroll_decoder(weights, combinator, F.concat([left, right], axis=1))
        return dist, Tensor(np.ones((left.shape[0], 1)))

    starts = []
    for r in weights.calculus.primitives:
        if action.raise_side is RaiseSide.LEFT:
            starts.append(F.concat([vector_raise(weights, left, r), right], axis=1))
        else:
            starts.append(F.concat([left, vector_raise(weights, right, r)], axis=1))
    raised = left if action.raise_side is RaiseSide.LEFT else right
    return unroll_decoder(weights, combinator, F.concat(starts, axis=0)), raise_probs(weights, raised)


def pair_losses(context: CoherenceContext, triples: Sequence[Triple]) -> Tensor:
    """L_pair for each (i, j, k), shape (T,)"""
    chart = context.chart
    for i, j, k in triples:
        if not i < k < j:
            raise SpanError(f"split {k} does not lie strictly inside ({i}, {j})")
    count = len(triples)
    parent_rows = [chart.span_row(i, j) for i, j, _ in triples]
    left = F.take(context.lam, [chart.span_row(i, k) for i, _, k in triples], axis=0)
    right = F.take(context.lam, [chart.span_row(k, j) for _, j, k in triples], axis=0)
    parent = context.parent.take(parent_rows)

    weights = context.type_weights
    phi = action_probs(weights, left, right)
    columns = []
    for action in ACTIONS:
        components, mixture = children_distribution(weights, action, left, right)
        width = mixture.shape[1]
        h = truncated_cross_entropy(parent.take(np.tile(np.arange(count), width)), components)
        columns.append(F.tsum(F.transpose(F.reshape(h, (width, count))) * mixture, axis=1))
    loss = F.tsum(phi * F.stack(columns, axis=1), axis=1)
    if context.divergence == "kl":
        # mixture weights sum to one, so subtracting H(parent) once gives the KL form
        loss = loss - parent.entropy()
    return loss


def pair_loss(context: CoherenceContext, i: int, j: int, k: int) -> Tensor:
    return F.take(pair_losses(context, [(i, j, k)]), 0, axis=0)


def expr_loss(context: CoherenceContext, i: int, j: int) -> Tensor:
    """sum over splits k of alpha_ijk * L_pair(i, j, k)"""
    if j - i < 2:
        raise SpanError(f"span ({i}, {j}) has no split")
    chart = context.chart
    triples = [(i, j, k) for k in range(i + 1, j)]
    alpha = F.take(chart.alpha_flat(), [chart.alpha_index(i, j, k) for _, _, k in triples], axis=0)
    return F.tsum(alpha * pair_losses(context, triples))


def sentence_triples(chart: SentenceChart) -> List[Triple]:
    """every (i, j, k) with j - i >= 2, in the order of chart.alpha_flat()"""
    n = chart.n
    return [(i, i + w, k) for w in range(2, n + 1) for i in range(n - w + 1) for k in range(i + 1, i + w)]


def sentence_loss(context: CoherenceContext) -> Tensor:
    triples = sentence_triples(context.chart)
    if not triples:
        return Tensor(0.0)
    return F.tsum(context.chart.alpha_flat() * pair_losses(context, triples))


def constraint_loss(context: CoherenceContext, anchors: AnchorTable) -> Tensor:
    """-log P(anchor type) under the identity decoding of every matching span"""
    matches = anchors.matches(context.chart.tokens)
    if not matches:
        return Tensor(0.0)
    rows = [context.chart.span_row(i, j) for i, j, _ in matches]
    log_probs = type_log_probs(context.parent.take(rows), [t for _, _, t in matches])
    return -F.tsum(log_probs)
