"""stage two: supervised pretraining of the type grammar against symbolic oracles.

the encoder and identity decoder learn to autoencode sampled types; the
apply and compose decoders learn the symbolic outputs of sampled viable
pairs; the controller learns which actions and raising primitives succeed.
"""

import logging
from contextlib import nullcontext
from typing import Dict, List, Sequence, Tuple

import numpy as np

from autodiff import engine as F
from autodiff.engine import Tensor, backward, no_grad
from autodiff.optim import Adam
from calculus.combinators import Combinator, RaiseSide, viable_actions
from calculus.types import SemType
from typegrammar.controller import raise_targets, viable_action_targets
from typegrammar.decoder import type_log_probs, unroll_decoder
from typegrammar.encoder import encode_types
from typegrammar.kbest import enumeration_key

from .model import Model

logger = logging.getLogger(__name__)

AUTOENCODER_STREAM = 2
DECODER_STREAM = 3
CONTROLLER_STREAM = 4


def _steps_per_epoch(model: Model) -> int:
    cfg = model.config.types
    return max(1, cfg.samples // cfg.batch_size)


def component_depth(model: Model) -> int:
    """depth of the sampled a, b, c in viable pairs, so every output fits the decoder"""
    return max(0, min(model.config.types.max_depth, model.config.decoder_depth) - 1)


def _encoder_scope(model: Model):
    return no_grad() if model.config.types.freeze_encoder else nullcontext()


def autoencoder_loss(model: Model, types: Sequence[SemType]) -> Tensor:
    encoded = encode_types(model.types, types)
    dist = unroll_decoder(model.types, Combinator.IDENTITY, encoded)
    return -F.mean(type_log_probs(dist, types))


def train_type_autoencoder(model: Model) -> List[float]:
    cfg = model.config.types
    weights = model.types
    params = weights.encoder_parameters() + weights.decoder(Combinator.IDENTITY).parameters()
    optimizer = Adam(params, lr=cfg.lr)
    rng = np.random.default_rng([model.config.seed, AUTOENCODER_STREAM])
    max_depth = min(cfg.max_depth, model.config.decoder_depth)

    history = []
    for epoch in range(cfg.epochs):
        total = 0.0
        for _ in range(_steps_per_epoch(model)):
            batch = [model.calculus.sample_type(rng, max_depth, cfg.recurse_prob) for _ in range(cfg.batch_size)]
            loss = autoencoder_loss(model, batch)
            backward(loss)
            optimizer.step()
            total += loss.item()
        history.append(total / _steps_per_epoch(model))
        logger.info("autoencoder epoch %d/%d: nll %.5f", epoch + 1, cfg.epochs, history[-1])
    return history


def sample_decoder_batch(model: Model, rng: np.random.Generator, combinator: Combinator,
                         count: int) -> List[Tuple[SemType, SemType, List[SemType]]]:
    cfg = model.config.types
    batch = []
    for _ in range(count):
        t0, t1, outputs = model.calculus.sample_viable_pair(rng, combinator, component_depth(model), cfg.recurse_prob)
        ordered = sorted(outputs, key=lambda t: enumeration_key(model.calculus.primitives, t))
        batch.append((t0, t1, ordered))
    return batch


def combinator_loss(model: Model, combinator: Combinator,
                    batch: Sequence[Tuple[SemType, SemType, List[SemType]]]) -> Tensor:
    """-log P(output | encoded pair), one term per valid output, averaged over pairs"""
    with _encoder_scope(model):
        encoded = encode_types(model.types, [t for t0, t1, _ in batch for t in (t0, t1)])
    starts = F.reshape(encoded, (len(batch), -1))
    rows = [i for i, (_, _, outputs) in enumerate(batch) for _ in outputs]
    targets = [u for _, _, outputs in batch for u in outputs]
    dist = unroll_decoder(model.types, combinator, F.take(starts, rows, axis=0))
    return -F.tsum(type_log_probs(dist, targets)) / float(len(batch))


def train_combinator_decoders(model: Model) -> List[float]:
    cfg = model.config.types
    weights = model.types
    params = weights.decoder(Combinator.APPLY).parameters() + weights.decoder(Combinator.COMPOSE).parameters()
    if not cfg.freeze_encoder:
        params += weights.encoder_parameters()
    optimizer = Adam(params, lr=cfg.lr)
    rng = np.random.default_rng([model.config.seed, DECODER_STREAM])

    history = []
    for epoch in range(cfg.epochs):
        total = 0.0
        for _ in range(_steps_per_epoch(model)):
            step_loss = 0.0
            for combinator in (Combinator.APPLY, Combinator.COMPOSE):
                loss = combinator_loss(model, combinator, sample_decoder_batch(model, rng, combinator, cfg.batch_size))
                backward(loss)
                step_loss += loss.item()
            optimizer.step()
            total += step_loss
        history.append(total / _steps_per_epoch(model))
        logger.info("combinator decoders epoch %d/%d: nll %.5f", epoch + 1, cfg.epochs, history[-1])
    return history


def controller_targets(viable: frozenset, primitives) -> Dict[str, np.ndarray]:
    """action target prefers unraised actions when one succeeds; raise targets only when raising is needed"""
    plain = frozenset(v for v in viable if v.action.raise_side is RaiseSide.NONE)
    targets = {"action": viable_action_targets(plain or viable)}
    for side in (RaiseSide.LEFT, RaiseSide.RIGHT):
        targets[side.value] = np.zeros(len(primitives)) if plain else raise_targets(viable, side, primitives)
    return targets


def sample_controller_batch(model: Model, rng: np.random.Generator, count: int):
    """pairs with at least one viable action, with their targets"""
    cfg = model.config.types
    batch = []
    while len(batch) < count:
        t0, t1 = model.calculus.sample_controller_pair(rng, component_depth(model), cfg.recurse_prob)
        viable: frozenset = viable_actions(t0, t1, model.calculus.primitives)
        if viable:
            batch.append((t0, t1, controller_targets(viable, model.calculus.primitives)))
    return batch


def controller_loss(model: Model, batch) -> Tensor:
    weights = model.types
    with no_grad():
        encoded = encode_types(weights, [t for t0, t1, _ in batch for t in (t0, t1)])
    pairs = F.reshape(encoded, (len(batch), -1))
    action_target = Tensor(np.stack([targets["action"] for _, _, targets in batch]))
    loss = -F.tsum(action_target * F.log_softmax(weights.action(pairs)))

    width = weights.m_type
    for offset, side in ((0, RaiseSide.LEFT), (width, RaiseSide.RIGHT)):
        target = np.stack([targets[side.value] for _, _, targets in batch])
        rows = [i for i in range(len(batch)) if target[i].sum() > 0]
        if not rows:
            continue
        raised = F.take(F.take(pairs, rows, axis=0), list(range(offset, offset + width)), axis=1)
        loss = loss - F.tsum(Tensor(target[rows]) * F.log_softmax(weights.raise_head(raised)))
    return loss / float(len(batch))


def train_controller(model: Model) -> List[float]:
    cfg = model.config.types
    optimizer = Adam(model.types.controller_parameters(), lr=cfg.lr)
    rng = np.random.default_rng([model.config.seed, CONTROLLER_STREAM])

    history = []
    for epoch in range(cfg.epochs):
        total = 0.0
        for _ in range(_steps_per_epoch(model)):
            loss = controller_loss(model, sample_controller_batch(model, rng, cfg.batch_size))
            backward(loss)
            optimizer.step()
            total += loss.item()
        history.append(total / _steps_per_epoch(model))
        logger.info("controller epoch %d/%d: cross-entropy %.5f", epoch + 1, cfg.epochs, history[-1])
    return history


def train_type_grammar(model: Model) -> Dict[str, List[float]]:
    """autoencoder, then combinator decoders, then controller"""
    history = {
        "autoencoder": train_type_autoencoder(model),
        "decoders": train_combinator_decoders(model),
        "controller": train_controller(model),
    }
    model.stages["types"] = True
    return history
