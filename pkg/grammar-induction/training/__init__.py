from .checks import CheckResult, run_gradient_checks, run_selftest
from .evaluate import EvalReport, correlations, kfold_evaluate, normalization_audit, type_grammar_metrics
from .interpreter_stage import interpreter_objective, train_interpreter
from .model import STAGES, Model, vocabulary_of
from .parser_stage import train_parser
from .type_stage import (
    train_combinator_decoders,
    train_controller,
    train_type_autoencoder,
    train_type_grammar,
)

__all__ = [
    "STAGES",
    "CheckResult",
    "EvalReport",
    "Model",
    "correlations",
    "interpreter_objective",
    "kfold_evaluate",
    "normalization_audit",
    "run_gradient_checks",
    "run_selftest",
    "train_combinator_decoders",
    "train_controller",
    "train_interpreter",
    "train_parser",
    "train_type_autoencoder",
    "train_type_grammar",
    "type_grammar_metrics",
    "vocabulary_of",
]
