from .controller import action_probs, raise_probs, raise_targets, viable_action_targets, viable_mass
from .decoder import (
    TypeDistribution,
    sample_from_decoder,
    truncated_cross_entropy,
    type_log_prob,
    type_log_prob_table,
    type_log_probs,
    unroll_decoder,
)
from .encoder import encode_type, encode_types, vector_raise, wrapped_primitives
from .kbest import best_type, enumeration_key, k_best_types
from .weights import DecoderBlocks, TypeGrammarWeights

__all__ = [
    "DecoderBlocks",
    "TypeDistribution",
    "TypeGrammarWeights",
    "action_probs",
    "best_type",
    "encode_type",
    "encode_types",
    "enumeration_key",
    "k_best_types",
    "raise_probs",
    "raise_targets",
    "sample_from_decoder",
    "truncated_cross_entropy",
    "type_log_prob",
    "type_log_prob_table",
    "type_log_probs",
    "unroll_decoder",
    "vector_raise",
    "viable_action_targets",
    "viable_mass",
]
