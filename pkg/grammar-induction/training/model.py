import logging
from pathlib import Path
from typing import Dict, Iterable, Optional, Sequence

import numpy as np

from autodiff.checkpoint import load_checkpoint, read_manifest, save_checkpoint
from autodiff.engine import no_grad, set_default_dtype
from autodiff.layers import Module
from calculus.universe import TypeCalculus
from chart.vector_chart import ParserWeights, SentenceChart, build_chart, predict_acceptability
from coherence.losses import CoherenceContext, InterpreterWeights
from corpus.embeddings import EmbeddingProvider
from corpus.records import DatasetRecord
from typegrammar.weights import TypeGrammarWeights
from utils.config import TrainConfig
from utils.errors import ConfigError, StageOrderError, UntrainedModelError

logger = logging.getLogger(__name__)

STAGES = ("parser", "types", "interpreter")
# settings that fix the shapes of the type grammar weights
TYPE_GRAMMAR_SETTINGS = ("primitives", "decoder_depth", "type_cell", "encoder_layers", "dims.m_type", "dims.m_interp")


def _setting(config: TrainConfig, dotted: str):
    value = config
    for part in dotted.split("."):
        value = getattr(value, part)
    return value


def vocabulary_of(records: Iterable[DatasetRecord]) -> list:
    return sorted({t for r in records for t in r.tokens})


class Model(Module):
    """embeddings, parser, type grammar and interpreter, plus which stages have run"""

    def __init__(self, config: TrainConfig, vocabulary: Sequence[str] = (),
                 embeddings_file: Optional[Path] = None):
        set_default_dtype(config.dtype)
        rng = np.random.default_rng(config.seed)
        dims = config.dims
        self.config = config
        self.calculus = TypeCalculus(config.primitives)
        self.embeddings_file = embeddings_file
        if embeddings_file is not None:
            self.embeddings = EmbeddingProvider.from_file(embeddings_file)
            if self.embeddings.m_lex != dims.m_lex:
                raise ConfigError(
                    f"external vectors have width {self.embeddings.m_lex}, dims.m_lex is {dims.m_lex}"
                )
        else:
            self.embeddings = EmbeddingProvider.lookup(vocabulary, dims.m_lex, rng)
        self.parser = ParserWeights(dims.m_lex, dims.m_node, rng, dims.m_attention)
        self.types = TypeGrammarWeights(
            self.calculus, dims.m_type, dims.m_interp, rng, config.decoder_depth,
            cell=config.type_cell, encoder_layers=config.encoder_layers,
        )
        self.interpreter = InterpreterWeights(dims.m_node, dims.m_interp, rng)
        self.stages: Dict[str, bool] = {stage: False for stage in STAGES}
        for name, p in self.named_parameters():
            p.name = name

    @classmethod
    def for_records(cls, config: TrainConfig, records: Iterable[DatasetRecord],
                    embeddings_file: Optional[Path] = None) -> "Model":
        return cls(config, vocabulary_of(records), embeddings_file)

    def keep_type_grammar(self, previous: "Model") -> None:
        """take the type grammar and its stage flag from an earlier checkpoint.

        the interpreter reads parser vectors, so it is not carried over.
        """
        mismatched = [
            name for name in TYPE_GRAMMAR_SETTINGS
            if _setting(self.config, name) != _setting(previous.config, name)
        ]
        if mismatched:
            raise ConfigError(
                f"checkpoint type grammar was built with different {', '.join(mismatched)}; "
                "remove the checkpoint to start over"
            )
        self.types = previous.types
        self.stages["types"] = previous.stages["types"]

    def require(self, *stages: str) -> None:
        missing = [s for s in stages if not self.stages.get(s)]
        if missing:
            raise StageOrderError(f"run stage(s) {', '.join(missing)} first")

    def chart(self, tokens: Sequence[str]) -> SentenceChart:
        return build_chart(self.parser, self.embeddings(tokens), tokens)

    def predict(self, tokens: Sequence[str]) -> float:
        with no_grad():
            return predict_acceptability(self.parser, self.chart(tokens)).item()

    def coherence(self, chart: SentenceChart, divergence: Optional[str] = None) -> CoherenceContext:
        return CoherenceContext.build(
            self.types, self.interpreter, chart, divergence or self.config.interpreter.divergence
        )

    def save(self, directory: Path) -> None:
        manifest = {
            "stages": dict(self.stages),
            "config": self.config.snapshot(),
            "config_fingerprint": self.config.fingerprint(),
            "embedding_mode": self.embeddings.mode,
            "embeddings_file": str(self.embeddings_file) if self.embeddings_file else None,
            "vocabulary": self.embeddings.vocabulary,
        }
        save_checkpoint(Path(directory), self.named_parameters(), manifest)

    @classmethod
    def load(cls, directory: Path) -> "Model":
        directory = Path(directory)
        manifest = read_manifest(directory)
        if not manifest:
            raise UntrainedModelError(f"no checkpoint in {directory}")
        config = TrainConfig.model_validate(manifest["config"])
        embeddings_file = manifest.get("embeddings_file")
        model = cls(config, manifest.get("vocabulary", ()), Path(embeddings_file) if embeddings_file else None)
        load_checkpoint(directory, model.named_parameters())
        model.stages.update({k: bool(v) for k, v in manifest["stages"].items() if k in model.stages})
        logger.info("loaded model from %s (stages: %s)", directory,
                    ", ".join(s for s in STAGES if model.stages[s]) or "none")
        return model
