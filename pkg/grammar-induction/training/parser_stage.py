"""stage one: the chart parser regresses acceptability with squared error"""

import logging
from typing import List, Sequence

import numpy as np

from autodiff.engine import backward
from autodiff.optim import Adam
from chart.vector_chart import predict_acceptability
from corpus.records import DatasetRecord
from utils.errors import DatasetError

from .model import Model

logger = logging.getLogger(__name__)

PARSER_STREAM = 1


def train_parser(model: Model, records: Sequence[DatasetRecord]) -> List[float]:
    """adam on parser, ACCEPTABILITY head and lookup embeddings; returns mean loss per epoch"""
    if not records:
        raise DatasetError("cannot train the parser on an empty dataset")
    cfg = model.config.parser
    params = model.parser.parameters() + model.embeddings.parameters()
    optimizer = Adam(params, lr=cfg.lr)
    rng = np.random.default_rng([model.config.seed, PARSER_STREAM])

    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(records))
        total = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            batch_loss = 0.0
            for index in batch:
                record = records[int(index)]
                error = predict_acceptability(model.parser, model.chart(record.tokens)) - record.acceptability
                loss = error * error / float(len(batch))
                backward(loss)
                batch_loss += loss.item()
            optimizer.step()
            total += batch_loss * len(batch)
            logger.debug("parser epoch %d batch %d: loss %.5f", epoch + 1, start // cfg.batch_size + 1, batch_loss)
        history.append(total / len(records))
        logger.info("parser epoch %d/%d: mse %.5f", epoch + 1, cfg.epochs, history[-1])

    model.stages["parser"] = True
    return history
