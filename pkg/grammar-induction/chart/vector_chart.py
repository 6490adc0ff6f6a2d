"""inside-outside chart over vector spaces.

all spans of one width are evaluated together: their split candidates are
stacked into one matrix for ATTEND and COMBINE (inside), or for SPLIT_R and
SPLIT_L (outside). spans are indexed width-major, so span (i, j) of width w
lives in row offset(w) + i of a span table.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from autodiff import engine as F
from autodiff.engine import Tensor
from autodiff.layers import AttentionBlock, MlpBlock, Module, Parameter, glorot
from utils.errors import ContractError, EmptySentenceError, SpanError

logger = logging.getLogger(__name__)


class ParserWeights(Module):
    def __init__(self, m_lex: int, m_node: int, rng: np.random.Generator, m_attention: Optional[int] = None):
        self.m_lex = m_lex
        self.m_node = m_node
        self.unary = MlpBlock(m_lex, m_node, rng)
        self.combine = MlpBlock(2 * m_node, m_node, rng)
        self.split_r = MlpBlock(2 * m_node, m_node, rng)
        self.split_l = MlpBlock(2 * m_node, m_node, rng)
        self.attend = AttentionBlock(2 * m_node, rng, m_attention)
        self.root_outside = Parameter(glorot(rng, m_node, 1, (m_node,)))
        self.acceptability = MlpBlock(2 * m_node, 1, rng)


def _span_offsets(n: int) -> np.ndarray:
    """offsets[w] = first row of width-w spans in a width-major table"""
    offsets = np.zeros(n + 2, dtype=np.int64)
    for w in range(1, n + 1):
        offsets[w + 1] = offsets[w] + (n - w + 1)
    return offsets


@dataclass
class SentenceChart:
    tokens: List[str]
    inputs: Tensor
    m_node: int
    inside_levels: Dict[int, Tensor] = field(default_factory=dict)
    outside_levels: Dict[int, Tensor] = field(default_factory=dict)
    # alpha[w] has shape (n - w + 1, w - 1): row i holds the splits k = i+1 .. i+w-1
    alpha: Dict[int, Tensor] = field(default_factory=dict)
    _tables: Dict[str, Tensor] = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return len(self.tokens)

    @property
    def num_spans(self) -> int:
        return self.n * (self.n + 1) // 2

    @property
    def complete(self) -> bool:
        return len(self.outside_levels) == self.n

    def span_row(self, i: int, j: int) -> int:
        if not 0 <= i < j <= self.n:
            raise SpanError(f"span ({i}, {j}) outside a sentence of length {self.n}")
        return int(_span_offsets(self.n)[j - i] + i)

    def spans(self, min_width: int = 1) -> List[Tuple[int, int]]:
        """all spans in width-major order"""
        return [(i, i + w) for w in range(min_width, self.n + 1) for i in range(self.n - w + 1)]

    def inside_table(self) -> Tensor:
        if "inside" not in self._tables:
            self._tables["inside"] = F.concat([self.inside_levels[w] for w in range(1, self.n + 1)], axis=0)
        return self._tables["inside"]

    def outside_table(self) -> Tensor:
        if not self.complete:
            raise ContractError("outside pass has not been run on this chart")
        if "outside" not in self._tables:
            self._tables["outside"] = F.concat([self.outside_levels[w] for w in range(1, self.n + 1)], axis=0)
        return self._tables["outside"]

    def span_table(self) -> Tensor:
        """h_in + h_out for every span, width-major, shape (num_spans, 2 m_node)"""
        if "span" not in self._tables:
            self._tables["span"] = F.concat([self.inside_table(), self.outside_table()], axis=1)
        return self._tables["span"]

    def alpha_flat(self) -> Tensor:
        """all split weights flattened, width 2 first"""
        if "alpha" not in self._tables:
            parts = [F.reshape(self.alpha[w], (-1,)) for w in range(2, self.n + 1)]
            self._tables["alpha"] = F.concat(parts, axis=0) if parts else Tensor(np.zeros(0))
        return self._tables["alpha"]

    def alpha_index(self, i: int, j: int, k: int) -> int:
        if not i < k < j:
            raise SpanError(f"split {k} does not lie strictly inside ({i}, {j})")
        base = sum((self.n - w + 1) * (w - 1) for w in range(2, j - i))
        return base + i * (j - i - 1) + (k - i - 1)

    def inside(self, i: int, j: int) -> Tensor:
        return F.take(self.inside_levels[j - i], i, axis=0)

    def outside(self, i: int, j: int) -> Tensor:
        if not self.complete:
            raise ContractError("outside pass has not been run on this chart")
        return F.take(self.outside_levels[j - i], i, axis=0)

    def split_weights(self, i: int, j: int) -> np.ndarray:
        return self.alpha[j - i].data[i]


def inside_pass(weights: ParserWeights, inputs: Tensor, tokens: Optional[Sequence[str]] = None) -> SentenceChart:
    inputs = F.as_tensor(inputs)
    n = inputs.shape[0] if inputs.ndim == 2 else 0
    if n == 0:
        raise EmptySentenceError("cannot build a chart over an empty sentence")
    chart = SentenceChart(tokens=list(tokens) if tokens is not None else [str(i) for i in range(n)],
                          inputs=inputs, m_node=weights.m_node)
    offsets = _span_offsets(n)

    chart.inside_levels[1] = weights.unary(inputs)
    levels = [chart.inside_levels[1]]
    for w in range(2, n + 1):
        table = F.concat(levels, axis=0) if len(levels) > 1 else levels[0]
        left_rows, right_rows = [], []
        for i in range(n - w + 1):
            j = i + w
            for k in range(i + 1, j):
                left_rows.append(offsets[k - i] + i)
                right_rows.append(offsets[j - k] + k)
        candidates = F.concat([F.take(table, left_rows), F.take(table, right_rows)], axis=1)

        spans, splits = n - w + 1, w - 1
        alpha = F.softmax(F.reshape(weights.attend.scores(candidates), (spans, splits)))
        combined = weights.combine(candidates)
        weighted = combined * F.reshape(alpha, (spans * splits, 1))
        level = F.tsum(F.reshape(weighted, (spans, splits, weights.m_node)), axis=1)

        chart.alpha[w] = alpha
        chart.inside_levels[w] = level
        levels.append(level)
    return chart


def outside_pass(weights: ParserWeights, chart: SentenceChart) -> SentenceChart:
    n = chart.n
    if len(chart.inside_levels) != n:
        raise ContractError("inside pass must complete before the outside pass")
    offsets = _span_offsets(n)
    inside = chart.inside_table()
    alpha = chart.alpha_flat()

    chart.outside_levels[n] = F.reshape(weights.root_outside, (1, weights.m_node))
    computed: List[int] = [n]
    for w in range(n - 1, 0, -1):
        # outside rows of widths > w, stacked in the order they were computed
        out_table = F.concat([chart.outside_levels[v] for v in computed], axis=0) if len(computed) > 1 \
            else chart.outside_levels[computed[0]]
        out_offset = {}
        cursor = 0
        for v in computed:
            out_offset[v] = cursor
            cursor += n - v + 1

        r_parent, r_sibling, r_alpha, r_span = [], [], [], []
        l_parent, l_sibling, l_alpha, l_span = [], [], [], []
        for i in range(n - w + 1):
            j = i + w
            # (i, j) is the left child of (i, m), right sibling (j, m)
            for m in range(j + 1, n + 1):
                r_parent.append(out_offset[m - i] + i)
                r_sibling.append(offsets[m - j] + j)
                r_alpha.append(chart.alpha_index(i, m, j))
                r_span.append(i)
            # (i, j) is the right child of (m, j), left sibling (m, i)
            for m in range(0, i):
                l_parent.append(out_offset[j - m] + m)
                l_sibling.append(offsets[i - m] + m)
                l_alpha.append(chart.alpha_index(m, j, i))
                l_span.append(i)

        terms = []
        segments = []
        if r_parent:
            x = F.concat([F.take(out_table, r_parent), F.take(inside, r_sibling)], axis=1)
            terms.append(weights.split_r(x) * F.reshape(F.take(alpha, r_alpha), (-1, 1)))
            segments.extend(r_span)
        if l_parent:
            x = F.concat([F.take(out_table, l_parent), F.take(inside, l_sibling)], axis=1)
            terms.append(weights.split_l(x) * F.reshape(F.take(alpha, l_alpha), (-1, 1)))
            segments.extend(l_span)
        stacked = F.concat(terms, axis=0) if len(terms) > 1 else terms[0]
        chart.outside_levels[w] = F.segment_sum(stacked, segments, n - w + 1)
        computed.append(w)
    return chart


def build_chart(weights: ParserWeights, inputs: Tensor, tokens: Optional[Sequence[str]] = None) -> SentenceChart:
    return outside_pass(weights, inside_pass(weights, inputs, tokens))


def span_representation(chart: SentenceChart, i: int, j: int) -> Tensor:
    chart.span_row(i, j)
    return F.concat([chart.inside(i, j), chart.outside(i, j)], axis=0)


def predict_acceptability(weights: ParserWeights, chart: SentenceChart) -> Tensor:
    """scalar ACCEPTABILITY(h(0, n))"""
    whole = span_representation(chart, 0, chart.n)
    return F.reshape(weights.acceptability(whole), ())
