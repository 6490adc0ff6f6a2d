"""stage three: the interpreter learns coherence and constraint losses on high-acceptability sentences"""

import logging
from contextlib import nullcontext
from typing import List, Optional, Sequence

import numpy as np

from autodiff.engine import Tensor, backward, no_grad
from autodiff.layers import frozen
from autodiff.optim import Adam
from coherence.anchors import AnchorTable
from coherence.losses import constraint_loss, sentence_loss
from corpus.records import DatasetRecord, percentile_filter
from utils.errors import ThresholdError

from .model import Model

logger = logging.getLogger(__name__)

INTERPRETER_STREAM = 5


def interpreter_objective(model: Model, tokens: Sequence[str], anchors: AnchorTable) -> Tensor:
    """sentence_loss + gamma * constraint_loss for one sentence"""
    cfg = model.config.interpreter
    with no_grad() if cfg.freeze_upstream else nullcontext():
        chart = model.chart(tokens)
    context = model.coherence(chart)
    return sentence_loss(context) + cfg.gamma * constraint_loss(context, anchors)


def train_interpreter(model: Model, records: Sequence[DatasetRecord],
                      anchors: Optional[AnchorTable] = None) -> List[float]:
    model.require("parser", "types")
    cfg = model.config.interpreter
    anchors = anchors or AnchorTable.default()
    anchors.check_depth(model.config.decoder_depth)
    subset = percentile_filter(records, cfg.threshold) if records else []
    if not subset:
        raise ThresholdError(f"no records at or above percentile {cfg.threshold}")

    params = model.interpreter.parameters()
    if not cfg.freeze_upstream:
        params += model.parser.parameters() + model.embeddings.parameters() + model.types.parameters()
    optimizer = Adam(params, lr=cfg.lr)
    rng = np.random.default_rng([model.config.seed, INTERPRETER_STREAM])

    with frozen(model.types.parameters()) if cfg.freeze_upstream else nullcontext():
        history = _run_epochs(model, subset, anchors, optimizer, rng)

    model.stages["interpreter"] = True
    return history


def _run_epochs(model, subset, anchors, optimizer, rng) -> List[float]:
    cfg = model.config.interpreter
    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(subset))
        total = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            for index in batch:
                loss = interpreter_objective(model, subset[int(index)].tokens, anchors) / float(len(batch))
                backward(loss)
                total += loss.item() * len(batch)
            optimizer.step()
        history.append(total / len(subset))
        logger.info("interpreter epoch %d/%d: loss %.5f", epoch + 1, cfg.epochs, history[-1])
    return history
