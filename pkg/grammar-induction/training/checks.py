"""acceptance checks behind the gradcheck and selftest commands.

each check compares a fast implementation against a slow oracle: the chart
against bracketing enumeration, the cross-entropy recursion and k-best
search against full type enumeration, backward() against finite differences.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from autodiff import engine as F
from autodiff.engine import Tensor, no_grad, set_default_dtype
from autodiff.gradcheck import gradient_check
from autodiff.layers import AttentionBlock, MlpBlock, attend
from calculus.combinators import Combinator
from calculus.types import parse_type
from calculus.universe import TypeCalculus
from chart.symbolic import brute_force_charts, symbolic_inside, symbolic_outside
from coherence.losses import sentence_loss
from corpus.synthetic import FRAGMENT_LEXICON, fragment_grammar, fragment_roots
from typegrammar.decoder import TypeDistribution, truncated_cross_entropy, type_log_prob_table, unroll_decoder
from typegrammar.encoder import encode_types
from typegrammar.kbest import enumeration_key, k_best_types
from typegrammar.weights import TypeGrammarWeights
from utils.config import DimsConfig, TrainConfig

from .model import Model

logger = logging.getLogger(__name__)

CHECK_STREAM = 9

BLOCK_TOLERANCE = 1e-4
SENTENCE_TOLERANCE = 1e-3
CROSS_ENTROPY_TOLERANCE = {2: 1e-6, 3: 1e-5}


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: Dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> Dict[str, Any]:
        return {"name": self.name, "passed": self.passed, **self.detail}


def _small_model(config: TrainConfig) -> Model:
    small = config.model_copy(update={
        "dims": DimsConfig(m_lex=4, m_node=5, m_interp=4, m_type=4),
        "decoder_depth": 3,
        "dtype": "float64",
    })
    return Model(small, vocabulary=["someone", "happened", "that"])


def run_gradient_checks(config: TrainConfig, max_entries: int = 8) -> List[CheckResult]:
    """blocks, encoder and decoder at 1e-4, a full 3-token sentence loss at 1e-3, all in float64"""
    set_default_dtype("float64")
    rng = np.random.default_rng([config.seed, CHECK_STREAM])
    model = _small_model(config)
    types = [parse_type(t) for t in ("e", "<s,t>", "<e,<s,t>>", "<<e,t>,s>")]

    mlp = MlpBlock(8, 8, rng)
    attention = AttentionBlock(8, rng)
    x = Tensor(rng.normal(size=(5, 8)))
    mix = Tensor(rng.normal(size=(5,)))
    start = Tensor(rng.normal(size=(len(types), model.config.dims.m_interp)))
    tokens = ("someone", "happened", "that")

    cases: Dict[str, tuple] = {
        "mlp": (lambda: F.tsum(F.tanh(mlp(x))), mlp.parameters(), BLOCK_TOLERANCE),
        "attention": (lambda: F.tsum(attend(attention, x) * mix), attention.parameters(), BLOCK_TOLERANCE),
        "encoder": (
            lambda: F.tsum(F.tanh(encode_types(model.types, types))),
            model.types.encoder_parameters(),
            BLOCK_TOLERANCE,
        ),
        "decoder": (
            lambda: F.tsum(truncated_cross_entropy(
                unroll_decoder(model.types, Combinator.IDENTITY, start),
                unroll_decoder(model.types, Combinator.IDENTITY, F.tanh(start)),
            )),
            model.types.decoder(Combinator.IDENTITY).parameters(),
            BLOCK_TOLERANCE,
        ),
        "sentence_loss": (
            lambda: sentence_loss(model.coherence(model.chart(tokens))),
            model.parameters(),
            SENTENCE_TOLERANCE,
        ),
    }

    results = []
    for name, (loss_fn, params, tolerance) in cases.items():
        report = gradient_check(loss_fn, params, max_entries=max_entries, seed=config.seed)
        passed = report.passed(tolerance)
        logger.info("gradient check %s: max rel error %.3e (tolerance %.0e)", name, report.max_rel_error, tolerance)
        results.append(CheckResult(name, passed, {
            "max_rel_error": report.max_rel_error,
            "tolerance": tolerance,
            "entries": report.checked_entries,
        }))
    return results


def check_symbolic_charts(seed: int, sentences: int = 200, max_length: int = 6) -> CheckResult:
    """cky inside/outside against brute-force bracketing enumeration on random fragment sentences"""
    rng = np.random.default_rng([seed, CHECK_STREAM])
    grammar = fragment_grammar()
    roots = fragment_roots()
    vocabulary = sorted(FRAGMENT_LEXICON)
    mismatches = 0
    derivable = 0
    for _ in range(sentences):
        n = int(rng.integers(1, max_length + 1))
        tokens = [vocabulary[int(i)] for i in rng.integers(len(vocabulary), size=n)]
        chart = symbolic_outside(grammar, symbolic_inside(grammar, tokens), roots)
        inside, used = brute_force_charts(grammar, tokens, roots)
        derivable += chart.derivable(roots)
        for span, labels in inside.items():
            if chart.inside[span] != labels or chart.constituents(*span) != used[span]:
                mismatches += 1
                logger.debug("chart mismatch on %s at span %s", " ".join(tokens), span)
                break
    return CheckResult("symbolic_charts", mismatches == 0,
                       {"sentences": sentences, "mismatches": mismatches, "derivable": derivable})


def _random_distributions(weights: TypeGrammarWeights, rng: np.random.Generator, count: int,
                          depth_limit: int, scale: float = 2.0) -> TypeDistribution:
    start = Tensor(scale * rng.normal(size=(count, weights.m_interp)))
    return unroll_decoder(weights, Combinator.IDENTITY, start, depth_limit=depth_limit)


def _fresh_weights(config: TrainConfig, rng: np.random.Generator) -> TypeGrammarWeights:
    return TypeGrammarWeights(TypeCalculus(config.primitives), 6, 6, rng, decoder_depth=3)


def check_cross_entropy(config: TrainConfig, depth: int, pairs: int) -> CheckResult:
    """the node-tree recursion against -sum_t P(t) log Q(t) over every type of depth <= depth"""
    rng = np.random.default_rng([config.seed, CHECK_STREAM, depth])
    weights = _fresh_weights(config, rng)
    universe = weights.calculus.enumerate_types(depth)
    with no_grad():
        P = _random_distributions(weights, rng, pairs, depth)
        Q = _random_distributions(weights, rng, pairs, depth)
        fast = truncated_cross_entropy(P, Q).data
    exact = -(np.exp(type_log_prob_table(P, universe)) * type_log_prob_table(Q, universe)).sum(axis=1)
    worst = float(np.max(np.abs(fast - exact)))
    tolerance = CROSS_ENTROPY_TOLERANCE.get(depth, 1e-5)
    return CheckResult(f"cross_entropy_depth_{depth}", worst <= tolerance,
                       {"pairs": pairs, "types": len(universe), "max_abs_error": worst, "tolerance": tolerance})


def check_k_best(config: TrainConfig, distributions: int = 50, depth: int = 2) -> CheckResult:
    """lazy k-best search against a full sort of the enumerated universe, for every k"""
    rng = np.random.default_rng([config.seed, CHECK_STREAM, 100 + depth])
    weights = _fresh_weights(config, rng)
    primitives = weights.calculus.primitives
    universe = weights.calculus.enumerate_types(depth)
    keys = [enumeration_key(primitives, t) for t in universe]
    with no_grad():
        dist = _random_distributions(weights, rng, distributions, depth)
    table = type_log_prob_table(dist, universe)
    mismatches = 0
    for row in range(distributions):
        order = sorted(range(len(universe)), key=lambda i: (-table[row, i], keys[i]))
        found = k_best_types(dist, len(universe), row)
        # every prefix of the full ranking is the answer for the smaller k
        if [t for t, _ in found] != [universe[i] for i in order] or not np.allclose(
            [lp for _, lp in found], table[row, order], rtol=0.0, atol=1e-12
        ):
            mismatches += 1
    return CheckResult(f"k_best_depth_{depth}", mismatches == 0,
                       {"distributions": distributions, "k_max": len(universe), "mismatches": mismatches})


def run_selftest(config: TrainConfig, sentences: int = 200, pairs: int = 100, deep_pairs: Optional[int] = None,
                 distributions: int = 50) -> List[CheckResult]:
    """deep_pairs defaults to pairs, so depth 3 is checked as thoroughly as depth 2"""
    set_default_dtype("float64")
    deep_pairs = pairs if deep_pairs is None else deep_pairs
    checks: List[Callable[[], CheckResult]] = [
        lambda: check_symbolic_charts(config.seed, sentences),
        lambda: check_cross_entropy(config, 2, pairs),
        lambda: check_cross_entropy(config, 3, deep_pairs),
        lambda: check_k_best(config, distributions),
    ]
    results = []
    for check in checks:
        result = check()
        logger.info("%s: %s", result.name, "ok" if result.passed else "FAILED")
        results.append(result)
    return results
