import numpy as np
import orjson
import pytest

from autodiff import engine as F
from autodiff.engine import Tensor
from calculus import ACTIONS, TypeCalculus, parse_type
from chart import ParserWeights, build_chart
from coherence.anchors import AnchorTable
from coherence.losses import (
    CoherenceContext,
    InterpreterWeights,
    children_distribution,
    constraint_loss,
    expr_loss,
    pair_loss,
    pair_losses,
    sentence_loss,
    sentence_triples,
)
from typegrammar import TypeGrammarWeights, action_probs, truncated_cross_entropy, type_log_prob
from utils.errors import DatasetError, SpanError, UnsupportedDepthError

M_LEX, M_NODE, M = 4, 4, 5


def _context(rng, tokens, divergence="cross_entropy"):
    parser = ParserWeights(M_LEX, M_NODE, rng)
    types = TypeGrammarWeights(TypeCalculus(), M, M, rng, decoder_depth=3)
    interpreter = InterpreterWeights(M_NODE, M, rng)
    chart = build_chart(parser, Tensor(rng.normal(size=(len(tokens), M_LEX))), tokens)
    return CoherenceContext.build(types, interpreter, chart, divergence)


def test_pair_loss_bounded_by_parent_entropy(rng):
    context = _context(rng, ["a", "b", "c"])
    entropy = context.parent.take([context.chart.span_row(0, 3)]).entropy().item()
    for k in (1, 2):
        assert pair_loss(context, 0, 3, k).item() >= entropy - 1e-9


def test_kl_form_is_non_negative(rng):
    context = _context(rng, ["a", "b", "c"], divergence="kl")
    assert np.all(pair_losses(context, sentence_triples(context.chart)).data >= -1e-9)


def test_expr_loss_on_two_tokens_is_the_pair_loss(rng):
    context = _context(rng, ["a", "b"])
    assert expr_loss(context, 0, 2).item() == pytest.approx(pair_loss(context, 0, 2, 1).item(), abs=1e-12)


def test_expr_loss_weights_splits_by_alpha(rng):
    context = _context(rng, ["a", "b", "c"])
    alpha = context.chart.split_weights(0, 3)
    expected = alpha[0] * pair_loss(context, 0, 3, 1).item() + alpha[1] * pair_loss(context, 0, 3, 2).item()
    assert expr_loss(context, 0, 3).item() == pytest.approx(expected, abs=1e-10)


def test_expr_loss_needs_a_split(rng):
    with pytest.raises(SpanError):
        expr_loss(_context(rng, ["a", "b"]), 0, 1)


def test_pair_losses_reject_outside_split(rng):
    with pytest.raises(SpanError):
        pair_losses(_context(rng, ["a", "b", "c"]), [(0, 2, 2)])


def test_sentence_loss_single_token_is_zero(rng):
    assert sentence_loss(_context(rng, ["a"])).item() == 0.0


def test_sentence_loss_sums_expression_losses(rng):
    context = _context(rng, ["a", "b", "c", "d"])
    spans = [(i, j) for i in range(4) for j in range(i + 2, 5)]
    assert len(spans) == 6
    expected = sum(expr_loss(context, i, j).item() for i, j in spans)
    assert sentence_loss(context).item() == pytest.approx(expected, rel=1e-10)


def test_sentence_loss_is_differentiable(rng):
    context = _context(rng, ["a", "b", "c"])
    F.backward(sentence_loss(context))
    assert context.type_weights.action.W1.grad is not None


def test_constraint_loss_without_matches(rng):
    assert constraint_loss(_context(rng, ["a", "b"]), AnchorTable([])).item() == 0.0


def test_constraint_loss_counts_each_match(rng):
    context = _context(rng, ["someone", "happened"])
    anchors = AnchorTable.default()
    matches = anchors.matches(context.chart.tokens)
    assert len(matches) == 3
    parent = context.parent
    expected = 0.0
    for i, j, t in matches:
        expected -= type_log_prob(parent, t, row=context.chart.span_row(i, j))
    assert constraint_loss(context, anchors).item() == pytest.approx(expected, abs=1e-10)


def test_children_distribution_components(rng):
    context = _context(rng, ["a", "b"])
    left, right = context.interpretation(0, 1), context.interpretation(1, 2)
    plain, mixed = ACTIONS[0], ACTIONS[1]
    dist, mix = children_distribution(context.type_weights, plain, left, right)
    assert dist.batch_size == 1 and mix.data.tolist() == [[1.0]]
    dist, mix = children_distribution(context.type_weights, mixed, left, right)
    assert dist.batch_size == 3 and mix.shape == (1, 3)
    np.testing.assert_allclose(mix.data.sum(axis=1), 1.0)


def test_pair_loss_is_the_action_mixture_of_component_cross_entropies(rng):
    context = _context(rng, ["a", "b"])
    weights = context.type_weights
    left, right = context.interpretation(0, 1), context.interpretation(1, 2)
    parent = context.parent.take([context.chart.span_row(0, 2)])
    phi = action_probs(weights, F.reshape(left, (1, -1)), F.reshape(right, (1, -1))).data[0]
    expected = 0.0
    for a, action in enumerate(ACTIONS):
        dist, mix = children_distribution(weights, action, left, right)
        h = truncated_cross_entropy(parent.repeat(dist.batch_size), dist).data
        expected += phi[a] * float(h @ mix.data[0])
    assert pair_loss(context, 0, 2, 1).item() == pytest.approx(expected, rel=1e-10)


def test_anchor_table_rejects_bad_entries():
    with pytest.raises(DatasetError):
        AnchorTable.from_json([{"pattern": ["someone"]}])
    with pytest.raises(DatasetError):
        AnchorTable.from_json([{"pattern": 3, "type": "e"}])
    with pytest.raises(DatasetError) as info:
        AnchorTable.from_json([{"pattern": "SENTENCE", "type": "t"}, {"pattern": ["x"], "type": "<e,q>"}])
    assert info.value.row == 2


def test_anchor_table_load(tmp_path):
    path = tmp_path / "anchors.json"
    path.write_bytes(orjson.dumps([{"pattern": ["Do", "something"], "type": "<e,<s,t>>"}]))
    table = AnchorTable.load(path)
    assert table.matches(["do", "something", "else"]) == [(0, 2, parse_type("<e,<s,t>>"))]
    path.write_text("not json")
    with pytest.raises(DatasetError):
        AnchorTable.load(path)


def test_anchor_depth_check():
    AnchorTable.default().check_depth(3)
    with pytest.raises(UnsupportedDepthError):
        AnchorTable.default().check_depth(2)
