"""k-fold acceptability evaluation and held-out checks of the learned type grammar"""

import logging
import time
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy import stats

from autodiff import engine as F
from autodiff.engine import no_grad
from calculus.combinators import Combinator, RaiseSide, viable_actions
from chart.vector_chart import build_chart
from corpus.records import DatasetRecord
from typegrammar.controller import action_probs, raise_probs, viable_mass
from typegrammar.decoder import unroll_decoder
from typegrammar.encoder import encode_types
from typegrammar.kbest import k_best_types
from utils.config import TrainConfig
from utils.errors import DatasetError

from .model import Model
from .parser_stage import train_parser
from .type_stage import component_depth, controller_targets

logger = logging.getLogger(__name__)

FOLD_STREAM = 6
BOOTSTRAP_STREAM = 7
METRICS_STREAM = 8

Predictor = Callable[[DatasetRecord], float]
FitFn = Callable[[List[DatasetRecord]], Predictor]


class EvalReport(BaseModel):
    k: int
    n: int
    pearson: Optional[float] = None
    spearman: Optional[float] = None
    pearson_ci: Optional[Tuple[float, float]] = None
    spearman_ci: Optional[Tuple[float, float]] = None
    fold_pearson: List[Optional[float]] = Field(default_factory=list)
    fold_spearman: List[Optional[float]] = Field(default_factory=list)
    mean_fold_pearson: Optional[float] = None
    error: Optional[str] = None
    runtime_seconds: float = 0.0


def correlations(predictions: np.ndarray, targets: np.ndarray) -> Tuple[Optional[float], Optional[float]]:
    """pearson and spearman, or None where a side has no variance"""
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if len(predictions) < 2 or np.ptp(predictions) == 0 or np.ptp(targets) == 0:
        return None, None
    return float(stats.pearsonr(predictions, targets)[0]), float(stats.spearmanr(predictions, targets)[0])


def bootstrap_ci(predictions: np.ndarray, targets: np.ndarray, resamples: int, rng: np.random.Generator,
                 point: Tuple[Optional[float], Optional[float]]) -> Tuple[Optional[Tuple[float, float]], ...]:
    """95% percentile intervals over resampled items, widened to contain the point estimate"""
    n = len(predictions)
    draws: Dict[int, List[float]] = {0: [], 1: []}
    for _ in range(resamples):
        idx = rng.integers(0, n, size=n)
        values = correlations(predictions[idx], targets[idx])
        for which, value in enumerate(values):
            if value is not None:
                draws[which].append(value)
    intervals = []
    for which in (0, 1):
        if point[which] is None or not draws[which]:
            intervals.append(None)
            continue
        low, high = np.percentile(draws[which], [2.5, 97.5])
        intervals.append((float(min(low, point[which])), float(max(high, point[which]))))
    return tuple(intervals)


def parser_fit(config: TrainConfig) -> FitFn:
    def fit(train: List[DatasetRecord]) -> Predictor:
        model = Model.for_records(config, train)
        train_parser(model, train)
        return lambda record: model.predict(record.tokens)

    return fit


def kfold_evaluate(records: Sequence[DatasetRecord], config: TrainConfig,
                   fit: Optional[FitFn] = None) -> EvalReport:
    """train on k-1 folds, predict the held-out fold; correlations pooled over all held-out items"""
    started = time.perf_counter()
    k = config.eval.k
    if k > len(records):
        raise DatasetError(f"cannot split {len(records)} records into {k} folds")
    fit = fit or parser_fit(config)
    rng = np.random.default_rng([config.seed, FOLD_STREAM])
    folds = np.array_split(rng.permutation(len(records)), k)

    predictions = np.zeros(len(records))
    targets = np.array([r.acceptability for r in records], dtype=np.float64)
    report = EvalReport(k=k, n=len(records))
    for number, fold in enumerate(folds, start=1):
        held_out = set(int(i) for i in fold)
        train = [r for i, r in enumerate(records) if i not in held_out]
        predict = fit(train)
        for i in sorted(held_out):
            predictions[i] = predict(records[i])
        pearson, spearman = correlations(predictions[fold], targets[fold])
        report.fold_pearson.append(pearson)
        report.fold_spearman.append(spearman)
        logger.info("fold %d/%d: pearson %s", number, k, "undefined" if pearson is None else f"{pearson:.4f}")

    point = correlations(predictions, targets)
    report.pearson, report.spearman = point
    defined = [p for p in report.fold_pearson if p is not None]
    report.mean_fold_pearson = float(np.mean(defined)) if defined else None
    if point[0] is None:
        report.error = "predictions or targets are constant; correlation is undefined"
    else:
        boot_rng = np.random.default_rng([config.seed, BOOTSTRAP_STREAM])
        report.pearson_ci, report.spearman_ci = bootstrap_ci(
            predictions, targets, config.eval.bootstrap, boot_rng, point
        )
    report.runtime_seconds = time.perf_counter() - started
    return report


def type_grammar_metrics(model: Model, samples: int = 200, seed: Optional[int] = None) -> Dict[str, float]:
    """held-out fidelity of the autoencoder, the combinator decoders and the controller"""
    calculus = model.calculus
    weights = model.types
    cfg = model.config.types
    rng = np.random.default_rng([model.config.seed if seed is None else seed, METRICS_STREAM])
    depth = min(cfg.max_depth, model.config.decoder_depth)
    pair_depth = component_depth(model)

    with no_grad():
        types = [calculus.sample_type(rng, depth, cfg.recurse_prob) for _ in range(samples)]
        dist = unroll_decoder(weights, Combinator.IDENTITY, encode_types(weights, types))
        autoencoder = np.mean([k_best_types(dist, 1, row)[0][0] == t for row, t in enumerate(types)])

        fidelity: Dict[str, float] = {}
        for combinator in (Combinator.APPLY, Combinator.COMPOSE):
            pairs = [calculus.sample_viable_pair(rng, combinator, pair_depth, cfg.recurse_prob) for _ in range(samples)]
            starts = F.reshape(encode_types(weights, [t for t0, t1, _ in pairs for t in (t0, t1)]), (samples, -1))
            dist = unroll_decoder(weights, combinator, starts)
            hits, both = [], []
            for row, (_, _, outputs) in enumerate(pairs):
                best = k_best_types(dist, 2, row)
                hits.append(best[0][0] in outputs)
                if len(outputs) == 2:
                    both.append({t for t, _ in best} == set(outputs))
            fidelity[combinator.value] = float(np.mean(hits))
            if both:
                fidelity[f"{combinator.value}_both_outputs"] = float(np.mean(both))

        masses, raise_hits = [], []
        while len(masses) < samples:
            t0, t1 = calculus.sample_controller_pair(rng, pair_depth, cfg.recurse_prob)
            viable = viable_actions(t0, t1, calculus.primitives)
            if not viable:
                continue
            encoded = encode_types(weights, [t0, t1])
            left, right = F.take(encoded, 0, axis=0), F.take(encoded, 1, axis=0)
            masses.append(viable_mass(action_probs(weights, left, right).data, viable))
            targets = controller_targets(viable, calculus.primitives)
            for side, tau in ((RaiseSide.LEFT, left), (RaiseSide.RIGHT, right)):
                target = targets[side.value]
                if np.count_nonzero(target) == 1:
                    raise_hits.append(int(np.argmax(raise_probs(weights, tau).data)) == int(np.argmax(target)))

    metrics = {
        "autoencoder_exact": float(autoencoder),
        "apply_top1": fidelity["apply"],
        "compose_top1_in_valid": fidelity["compose"],
        "controller_viable_mass": float(np.mean(masses)),
    }
    if "compose_both_outputs" in fidelity:
        metrics["compose_both_outputs"] = fidelity["compose_both_outputs"]
    if raise_hits:
        metrics["raise_forced_accuracy"] = float(np.mean(raise_hits))
    return metrics


def normalization_audit(model: Model, records: Sequence[DatasetRecord], limit: int = 20) -> Dict[str, float]:
    """largest deviation from one among attention rows, probability heads and distribution masses"""
    worst = {"attention": 0.0, "primitive": 0.0, "action": 0.0, "raise": 0.0, "mass": 0.0}
    with no_grad():
        for record in list(records)[:limit]:
            chart = build_chart(model.parser, model.embeddings(record.tokens), record.tokens)
            for alpha in chart.alpha.values():
                worst["attention"] = max(worst["attention"], float(np.abs(alpha.data.sum(axis=1) - 1.0).max()))
            context = model.coherence(chart)
            for level in context.parent.log_prim:
                worst["primitive"] = max(worst["primitive"], float(np.abs(np.exp(level.data).sum(axis=-1) - 1.0).max()))
            worst["mass"] = max(worst["mass"], float(np.abs(context.parent.total_mass() - 1.0).max()))
            lam = context.lam
            worst["action"] = max(worst["action"], float(np.abs(action_probs(model.types, lam, lam).data.sum(axis=-1) - 1.0).max()))
            worst["raise"] = max(worst["raise"], float(np.abs(raise_probs(model.types, lam).data.sum(axis=-1) - 1.0).max()))
    return worst
