"""analysis exports: span vectors for external projection, and decoded-type reports"""

import csv
import logging
from collections import Counter
from pathlib import Path
from typing import TYPE_CHECKING, Any, Dict, Iterable, List, Sequence, Tuple

import orjson
import pandas as pd

from autodiff.engine import no_grad
from calculus.types import format_type
from typegrammar.kbest import k_best_types
from utils.errors import ExportError, UntrainedModelError

from .records import DatasetRecord

if TYPE_CHECKING:
    from training.model import Model

logger = logging.getLogger(__name__)

SpanPattern = Tuple[str, ...]


def parse_span_spec(items: Iterable[str]) -> List[SpanPattern]:
    """"do something" -> ("do", "something"); blanks are dropped"""
    patterns = []
    for item in items:
        tokens = tuple(item.lower().split())
        if tokens and tokens not in patterns:
            patterns.append(tokens)
    return patterns


def find_spans(tokens: Sequence[str], patterns: Sequence[SpanPattern]) -> List[Tuple[int, int, SpanPattern]]:
    found = []
    for pattern in patterns:
        width = len(pattern)
        for i in range(len(tokens) - width + 1):
            if tuple(tokens[i:i + width]) == pattern:
                found.append((i, i + width, pattern))
    return found


def _write_tsv(frame: pd.DataFrame, path: Path) -> None:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, sep="\t", index=False, quoting=csv.QUOTE_NONE, lineterminator="\n")
    except OSError as e:
        raise ExportError(f"cannot write {path}: {e}") from e


def export_spans(model: "Model", records: Sequence[DatasetRecord], patterns: Sequence[SpanPattern],
                 path: Path) -> int:
    """one row per (record, matching span): ids, expression text, then the span vector"""
    model.require("parser")
    width = 2 * model.config.dims.m_node
    columns = ["sentence_id", "start", "end", "expression", "verb", "frame"] + [f"h{i}" for i in range(width)]
    rows: List[List[Any]] = []
    with no_grad():
        for sentence_id, record in enumerate(records):
            spans = find_spans(record.tokens, patterns)
            if not spans:
                continue
            chart = model.chart(record.tokens)
            table = chart.span_table().data
            for i, j, pattern in spans:
                vector = table[chart.span_row(i, j)]
                rows.append([sentence_id, i, j, " ".join(pattern), record.verb, record.frame] + [repr(float(v)) for v in vector])
    _write_tsv(pd.DataFrame(rows, columns=columns), path)
    logger.info("exported %d span vectors to %s", len(rows), path)
    return len(rows)


def decode_types_report(model: "Model", records: Sequence[DatasetRecord], patterns: Sequence[SpanPattern],
                        k: int, json_path: Path, tsv_path: Path) -> Dict[str, Any]:
    """top-k identity decodings per matching span, and top-1 proportions per (expression, frame)"""
    if not all(model.stages.values()):
        raise UntrainedModelError("decoding types needs all three training stages")
    tokenings: List[Dict[str, Any]] = []
    tsv_rows: List[List[Any]] = []
    counts: Dict[Tuple[str, str], Counter] = {}
    with no_grad():
        for sentence_id, record in enumerate(records):
            spans = find_spans(record.tokens, patterns)
            if not spans:
                continue
            chart = model.chart(record.tokens)
            context = model.coherence(chart)
            for i, j, pattern in spans:
                ranked = k_best_types(context.parent, k, row=chart.span_row(i, j))
                expression = " ".join(pattern)
                tokenings.append({
                    "sentence_id": sentence_id,
                    "start": i,
                    "end": j,
                    "expression": expression,
                    "frame": record.frame,
                    "types": [{"type": format_type(t), "log_prob": lp} for t, lp in ranked],
                })
                for rank, (t, lp) in enumerate(ranked, start=1):
                    tsv_rows.append([sentence_id, i, j, expression, record.frame, rank, format_type(t), repr(lp)])
                counts.setdefault((expression, record.frame), Counter())[format_type(ranked[0][0])] += 1

    groups = []
    for (expression, frame), counter in sorted(counts.items()):
        total = sum(counter.values())
        groups.append({
            "expression": expression,
            "frame": frame,
            "count": total,
            "proportions": {t: c / total for t, c in sorted(counter.items(), key=lambda kv: (-kv[1], kv[0]))},
        })
    report = {"k": k, "groups": groups, "tokenings": tokenings}

    columns = ["sentence_id", "start", "end", "expression", "frame", "rank", "type", "log_prob"]
    _write_tsv(pd.DataFrame(tsv_rows, columns=columns), tsv_path)
    try:
        Path(json_path).write_bytes(orjson.dumps(report, option=orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY))
    except OSError as e:
        raise ExportError(f"cannot write {json_path}: {e}") from e
    logger.info("decoded %d tokenings into %d groups", len(tokenings), len(groups))
    return report
