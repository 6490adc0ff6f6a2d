"""acceptability records in the verb / frame / sentence / acceptability_norm tsv schema"""

import csv
import logging
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd

from utils.errors import DatasetError, ThresholdError

logger = logging.getLogger(__name__)

COLUMNS: Tuple[str, ...] = ("verb", "frame", "sentence", "acceptability_norm")

_TERMINAL_PUNCTUATION = re.compile(r"[.!?]+$")


@dataclass(frozen=True)
class DatasetRecord:
    verb: str
    frame: str
    tokens: Tuple[str, ...]
    acceptability: float

    @property
    def sentence(self) -> str:
        return " ".join(self.tokens)


def tokenize(sentence: str) -> Tuple[str, ...]:
    """lowercase, whitespace split, terminal punctuation stripped"""
    tokens = sentence.lower().split()
    if tokens:
        last = _TERMINAL_PUNCTUATION.sub("", tokens[-1])
        tokens = tokens[:-1] + ([last] if last else [])
    return tuple(tokens)


def load_dataset(path: Path) -> List[DatasetRecord]:
    """read the tsv in file order; errors name the 1-based data row"""
    path = Path(path)
    try:
        frame = pd.read_csv(path, sep="\t", dtype=str, keep_default_na=False, quoting=csv.QUOTE_NONE)
    except FileNotFoundError as e:
        raise DatasetError(f"dataset not found: {path}") from e
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise DatasetError(f"cannot parse {path}: {e}") from e
    except pd.errors.EmptyDataError as e:
        raise DatasetError(f"{path} has no header") from e

    missing = [c for c in COLUMNS if c not in frame.columns]
    if missing:
        raise DatasetError(f"{path} is missing column(s) {', '.join(missing)}")

    records = []
    for number, row in enumerate(frame.itertuples(index=False), start=1):
        raw = getattr(row, "acceptability_norm").strip()
        try:
            score = float(raw)
        except ValueError:
            raise DatasetError(f"acceptability {raw!r} is not a number", row=number) from None
        if not math.isfinite(score):
            raise DatasetError(f"acceptability {raw!r} is not finite", row=number)
        tokens = tokenize(getattr(row, "sentence"))
        if not tokens:
            raise DatasetError("empty sentence", row=number)
        records.append(DatasetRecord(getattr(row, "verb"), getattr(row, "frame"), tokens, score))
    logger.info("loaded %d records from %s", len(records), path)
    return records


def write_records_tsv(records: Sequence[DatasetRecord], path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(
        [(r.verb, r.frame, r.sentence, repr(float(r.acceptability))) for r in records],
        columns=list(COLUMNS),
    )
    frame.to_csv(path, sep="\t", index=False, quoting=csv.QUOTE_NONE, lineterminator="\n")


def percentile_threshold(records: Sequence[DatasetRecord], threshold: float) -> float:
    if not records:
        raise ThresholdError("cannot filter an empty dataset")
    if not 0.0 <= threshold <= 100.0:
        raise ThresholdError(f"percentile {threshold} outside [0, 100]")
    scores = np.array([r.acceptability for r in records], dtype=np.float64)
    return float(np.percentile(scores, threshold, method="linear"))


def percentile_filter(records: Sequence[DatasetRecord], threshold: float = 90.0) -> List[DatasetRecord]:
    """records scoring at or above the threshold-th percentile, order kept"""
    cutoff = percentile_threshold(records, threshold)
    kept = [r for r in records if r.acceptability >= cutoff]
    logger.info("percentile %.1f keeps %d of %d records (cutoff %.4f)", threshold, len(kept), len(records), cutoff)
    return kept
