from .anchors import DEFAULT_ANCHORS, SENTENCE, Anchor, AnchorTable
from .losses import (
    CoherenceContext,
    InterpreterWeights,
    children_distribution,
    constraint_loss,
    expr_loss,
    interpret_span,
    pair_loss,
    pair_losses,
    sentence_loss,
    sentence_triples,
)

__all__ = [
    "DEFAULT_ANCHORS",
    "SENTENCE",
    "Anchor",
    "AnchorTable",
    "CoherenceContext",
    "InterpreterWeights",
    "children_distribution",
    "constraint_loss",
    "expr_loss",
    "interpret_span",
    "pair_loss",
    "pair_losses",
    "sentence_loss",
    "sentence_triples",
]
