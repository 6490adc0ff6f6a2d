from .symbolic import (
    CcgGrammar,
    CfgGrammar,
    SymbolicChart,
    brute_force_charts,
    enumerate_bracketings,
    symbolic_inside,
    symbolic_outside,
)
from .vector_chart import (
    ParserWeights,
    SentenceChart,
    build_chart,
    inside_pass,
    outside_pass,
    predict_acceptability,
    span_representation,
)

__all__ = [
    "CcgGrammar",
    "CfgGrammar",
    "ParserWeights",
    "SentenceChart",
    "SymbolicChart",
    "brute_force_charts",
    "build_chart",
    "enumerate_bracketings",
    "inside_pass",
    "outside_pass",
    "predict_acceptability",
    "span_representation",
    "symbolic_inside",
    "symbolic_outside",
]
