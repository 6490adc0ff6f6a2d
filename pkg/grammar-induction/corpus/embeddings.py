"""token vectors for the chart: a trainable lookup table or vectors imported from a file"""

import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import orjson

from autodiff import engine as F
from autodiff.engine import Tensor
from autodiff.layers import Module, Parameter, glorot
from utils.errors import DatasetError, ShapeError

logger = logging.getLogger(__name__)

UNK = "<unk>"


def load_embeddings_jsonl(path: Path) -> Dict[Tuple[str, ...], np.ndarray]:
    """one {id, tokens, vectors} object per line, keyed by token sequence"""
    table: Dict[Tuple[str, ...], np.ndarray] = {}
    try:
        lines = Path(path).read_bytes().splitlines()
    except OSError as e:
        raise DatasetError(f"cannot read embeddings {path}: {e}") from e
    width: Optional[int] = None
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            item = orjson.loads(line)
            tokens = tuple(str(t).lower() for t in item["tokens"])
            vectors = np.asarray(item["vectors"], dtype=np.float64)
        except (orjson.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise DatasetError(f"bad embedding line: {e}", row=number) from e
        if vectors.ndim != 2 or vectors.shape[0] != len(tokens):
            raise DatasetError(f"expected {len(tokens)} vectors, got shape {vectors.shape}", row=number)
        if width is not None and vectors.shape[1] != width:
            raise DatasetError(f"vector width {vectors.shape[1]} differs from {width}", row=number)
        width = vectors.shape[1]
        table[tokens] = vectors
    logger.info("loaded external vectors for %d sentences from %s", len(table), path)
    return table


class EmbeddingProvider(Module):
    """x_0 .. x_{n-1} for a token sequence"""

    def __init__(self, mode: str, m_lex: int, vocabulary: Sequence[str] = (),
                 table: Optional[Parameter] = None,
                 external: Optional[Dict[Tuple[str, ...], np.ndarray]] = None):
        if mode not in ("lookup", "external"):
            raise ValueError(f"unknown embedding mode {mode!r}")
        self.mode = mode
        self.m_lex = m_lex
        self.vocabulary: List[str] = list(vocabulary)
        self.index = {w: i for i, w in enumerate(self.vocabulary)}
        self.table = table
        self.external = external or {}

    @classmethod
    def lookup(cls, vocabulary: Iterable[str], m_lex: int, rng: np.random.Generator) -> "EmbeddingProvider":
        """row 0 is the shared unknown-token row; the rest follow sorted vocabulary"""
        words = [UNK] + sorted(set(vocabulary) - {UNK})
        table = Parameter(glorot(rng, len(words), m_lex, (len(words), m_lex)), name="embeddings")
        return cls("lookup", m_lex, words, table=table)

    @classmethod
    def from_file(cls, path: Path) -> "EmbeddingProvider":
        external = load_embeddings_jsonl(path)
        if not external:
            raise DatasetError(f"no vectors in {path}")
        m_lex = next(iter(external.values())).shape[1]
        return cls("external", m_lex, external=external)

    def token_ids(self, tokens: Sequence[str]) -> List[int]:
        return [self.index.get(t, 0) for t in tokens]

    def __call__(self, tokens: Sequence[str]) -> Tensor:
        if self.mode == "lookup":
            return F.take(self.table, self.token_ids(tokens), axis=0)
        key = tuple(tokens)
        if key not in self.external:
            raise DatasetError(f"no external vectors for sentence {' '.join(tokens)!r}")
        vectors = self.external[key]
        if vectors.shape[1] != self.m_lex:
            raise ShapeError("external vector width", vectors.shape, (self.m_lex,))
        return Tensor(vectors)
