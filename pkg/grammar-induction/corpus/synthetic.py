"""a bleached toy fragment and a seeded acceptability dataset sampled from it.

clean sentences come from a handful of clausal-embedding frames and are
derivable to <s,t> under the shipped ccg lexicon. every clean item is
followed by a corruption of itself (adjacent swaps and deletions) scored by
token edit distance.
"""

import logging
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np
import orjson

from calculus.combinators import Combinator
from calculus.types import parse_type
from chart.symbolic import CcgGrammar

from .records import DatasetRecord

logger = logging.getLogger(__name__)

VP = "<e,<s,t>>"
PROP = "<s,t>"
QUANT = f"<{VP},{PROP}>"

FRAGMENT_LEXICON: Dict[str, Tuple[str, ...]] = {
    "someone": (QUANT,),
    "something": (QUANT,),
    "happened": (VP,),
    "happen": (VP,),
    "that": (f"<{PROP},{PROP}>",),
    "whether": (f"<{PROP},{PROP}>",),
    "believed": (f"<{PROP},{VP}>",),
    "thought": (f"<{PROP},{VP}>",),
    "said": (f"<{PROP},{VP}>",),
    "asked": (f"<{PROP},{VP}>",),
    "wondered": (f"<{PROP},{VP}>",),
    "knew": (f"<{PROP},{VP}>", f"<{QUANT},{VP}>"),
    "saw": (f"<{QUANT},{VP}>",),
    "to": (f"<{VP},{VP}>",),
    "do": (f"<{QUANT},{VP}>",),
    "have": (f"<{QUANT},{VP}>",),
    "forced": (f"<{QUANT},<{VP},{VP}>>",),
    "told": (f"<{QUANT},<{VP},{VP}>>",),
    "wanted": (f"<{VP},{VP}>",),
    "tried": (f"<{VP},{VP}>",),
}

# frame -> (verbs, template); NP, S and VP are filled in per sentence
FRAMES: Dict[str, Tuple[Tuple[str, ...], Tuple[str, ...]]] = {
    "NP __ that S": (("believed", "thought", "said", "knew"), ("NP", "V", "that", "S")),
    "NP __ whether S": (("asked", "wondered", "knew"), ("NP", "V", "whether", "S")),
    "NP __ NP to VP": (("forced", "told"), ("NP", "V", "NP", "to", "VP")),
    "NP __ to VP": (("wanted", "tried"), ("NP", "V", "to", "VP")),
    "NP __ NP": (("knew", "saw"), ("NP", "V", "NP")),
    "NP __": (("happened",), ("NP", "V")),
}

NOUN_PHRASES: Tuple[Tuple[str, ...], ...] = (("someone",), ("something",))
CLAUSES: Tuple[Tuple[str, ...], ...] = (("someone", "happened"), ("something", "happened"))
VERB_PHRASES: Tuple[Tuple[str, ...], ...] = (("happen",), ("do", "something"), ("have", "something"))

CORRUPTION_SLOPE = 0.4
CORRUPTION_FLOOR = -1.0


def fragment_grammar() -> CcgGrammar:
    lexicon = {w: [parse_type(t) for t in types] for w, types in FRAGMENT_LEXICON.items()}
    return CcgGrammar(lexicon, (Combinator.APPLY, Combinator.COMPOSE))


def fragment_roots() -> frozenset:
    return frozenset({parse_type(PROP)})


def write_fragment(path: Path) -> None:
    data = fragment_grammar().to_json()
    data["roots"] = [PROP]
    Path(path).write_bytes(orjson.dumps(data, option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS))


def edit_distance(a: Sequence[str], b: Sequence[str]) -> int:
    """token-level levenshtein distance"""
    previous = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        current = [i]
        for j, y in enumerate(b, start=1):
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (x != y)))
        previous = current
    return previous[-1]


def _choose(rng: np.random.Generator, options: Sequence):
    return options[int(rng.integers(len(options)))]


def sample_clean(rng: np.random.Generator) -> Tuple[str, str, Tuple[str, ...]]:
    frame = _choose(rng, sorted(FRAMES))
    verbs, template = FRAMES[frame]
    verb = _choose(rng, verbs)
    tokens: List[str] = []
    for slot in template:
        if slot == "V":
            tokens.append(verb)
        elif slot == "NP":
            tokens.extend(_choose(rng, NOUN_PHRASES))
        elif slot == "S":
            tokens.extend(_choose(rng, CLAUSES))
        elif slot == "VP":
            tokens.extend(_choose(rng, VERB_PHRASES))
        else:
            tokens.append(slot)
    return verb, frame, tuple(tokens)


def corrupt(rng: np.random.Generator, tokens: Sequence[str]) -> Tuple[str, ...]:
    """one or two adjacent swaps or deletions; never returns the input"""
    while True:
        out = list(tokens)
        for _ in range(int(rng.integers(1, 3))):
            if len(out) > 1 and rng.random() < 0.5:
                i = int(rng.integers(len(out) - 1))
                out[i], out[i + 1] = out[i + 1], out[i]
            elif len(out) > 1:
                del out[int(rng.integers(len(out)))]
        if tuple(out) != tuple(tokens):
            return tuple(out)


def corruption_score(original: Sequence[str], corrupted: Sequence[str]) -> float:
    return max(1.0 - CORRUPTION_SLOPE * edit_distance(original, corrupted), CORRUPTION_FLOOR)


def generate_synthetic(seed: int, size: int) -> List[DatasetRecord]:
    """clean items at even positions (score 1.0), their corruptions at odd ones"""
    if size < 10:
        raise ValueError("the synthetic dataset needs at least 10 items")
    rng = np.random.default_rng(seed)
    records: List[DatasetRecord] = []
    while len(records) < size:
        verb, frame, tokens = sample_clean(rng)
        records.append(DatasetRecord(verb, frame, tokens, 1.0))
        if len(records) < size:
            bad = corrupt(rng, tokens)
            records.append(DatasetRecord(verb, frame, bad, corruption_score(tokens, bad)))
    logger.info("generated %d synthetic records with seed %d", len(records), seed)
    return records

