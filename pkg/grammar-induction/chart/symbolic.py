"""set-valued inside/outside (cky recognition) over a cfg or a ccg lexicon.

N_ij holds what w[i:j] could be on its own; O_ij what the rest of the
sentence allows it to be. for ccg grammars the outside candidates are drawn
from the types occurring in some inside cell, which keeps O_ij finite.
"""

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Hashable, Iterable, Iterator, List, Mapping, Optional, Sequence, Set, Tuple

import orjson

from calculus.combinators import Combinator, combine_types
from calculus.types import SemType, format_type, parse_type
from utils.errors import DatasetError

Label = Hashable
Span = Tuple[int, int]


class CfgGrammar:
    """chomsky normal form rules: A -> B C and A -> 'w'"""

    def __init__(self, binary: Iterable[Tuple[str, str, str]], lexical: Iterable[Tuple[str, str]]):
        self.binary: Dict[Tuple[str, str], Set[str]] = {}
        for parent, left, right in binary:
            self.binary.setdefault((left, right), set()).add(parent)
        self.lexical: Dict[str, Set[str]] = {}
        for parent, word in lexical:
            self.lexical.setdefault(word, set()).add(parent)

    @classmethod
    def from_text(cls, text: str) -> "CfgGrammar":
        binary, lexical = [], []
        for number, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            match = re.fullmatch(r"(\S+)\s*->\s*'([^']+)'", line)
            if match:
                lexical.append((match.group(1), match.group(2)))
                continue
            match = re.fullmatch(r"(\S+)\s*->\s*(\S+)\s+(\S+)", line)
            if not match:
                raise DatasetError(f"not a CNF rule: {line!r}", row=number)
            binary.append((match.group(1), match.group(2), match.group(3)))
        return cls(binary, lexical)

    def unary(self, word: str) -> FrozenSet[Label]:
        return frozenset(self.lexical.get(word, ()))

    def combine(self, left: Iterable[Label], right: Iterable[Label]) -> FrozenSet[Label]:
        out: Set[Label] = set()
        right = list(right)
        for b in left:
            for c in right:
                out |= self.binary.get((b, c), set())
        return frozenset(out)

    def split_right(self, outer: Iterable[Label], sibling: Iterable[Label], universe: Iterable[Label]) -> FrozenSet[Label]:
        outer, sibling = set(outer), set(sibling)
        return frozenset(b for (b, c), parents in self.binary.items() if c in sibling and parents & outer)

    def split_left(self, outer: Iterable[Label], sibling: Iterable[Label], universe: Iterable[Label]) -> FrozenSet[Label]:
        outer, sibling = set(outer), set(sibling)
        return frozenset(c for (b, c), parents in self.binary.items() if b in sibling and parents & outer)


class CcgGrammar:
    """a lexicon of types per word plus a set of binary combinators"""

    def __init__(self, lexicon: Mapping[str, Iterable[SemType]],
                 combinators: Sequence[Combinator] = (Combinator.APPLY, Combinator.COMPOSE)):
        self.lexicon: Dict[str, FrozenSet[SemType]] = {w: frozenset(ts) for w, ts in lexicon.items()}
        self.combinators = tuple(combinators)

    def unary(self, word: str) -> FrozenSet[Label]:
        return self.lexicon.get(word, frozenset())

    def combine_pair(self, t0: SemType, t1: SemType) -> FrozenSet[SemType]:
        out: Set[SemType] = set()
        for c in self.combinators:
            out |= combine_types(c, t0, t1)
        return frozenset(out)

    def combine(self, left: Iterable[Label], right: Iterable[Label]) -> FrozenSet[Label]:
        out: Set[SemType] = set()
        right = list(right)
        for t0 in left:
            for t1 in right:
                out |= self.combine_pair(t0, t1)
        return frozenset(out)

    def split_right(self, outer: Iterable[Label], sibling: Iterable[Label], universe: Iterable[Label]) -> FrozenSet[Label]:
        outer, sibling = set(outer), list(sibling)
        return frozenset(b for b in universe if any(self.combine_pair(b, c) & outer for c in sibling))

    def split_left(self, outer: Iterable[Label], sibling: Iterable[Label], universe: Iterable[Label]) -> FrozenSet[Label]:
        outer, sibling = set(outer), list(sibling)
        return frozenset(c for c in universe if any(self.combine_pair(b, c) & outer for b in sibling))

    def to_json(self) -> Dict[str, object]:
        return {
            "combinators": [c.value for c in self.combinators],
            "lexicon": {w: sorted(format_type(t) for t in ts) for w, ts in sorted(self.lexicon.items())},
        }

    @classmethod
    def from_json(cls, data: Mapping[str, object], primitives: Optional[Sequence[str]] = None) -> "CcgGrammar":
        lexicon = {w: [parse_type(t, primitives) if primitives else parse_type(t) for t in ts]
                   for w, ts in data["lexicon"].items()}
        combinators = [Combinator(c) for c in data.get("combinators", ["apply", "compose"])]
        return cls(lexicon, combinators)

    @classmethod
    def load(cls, path: Path) -> "CcgGrammar":
        try:
            data = orjson.loads(Path(path).read_bytes())
        except (OSError, orjson.JSONDecodeError) as e:
            raise DatasetError(f"cannot read ccg lexicon {path}: {e}") from e
        return cls.from_json(data)


@dataclass
class SymbolicChart:
    tokens: List[str]
    inside: Dict[Span, FrozenSet[Label]] = field(default_factory=dict)
    outside: Dict[Span, FrozenSet[Label]] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.tokens)

    def derivable(self, roots: Optional[Iterable[Label]] = None) -> bool:
        whole = self.inside.get((0, self.n), frozenset())
        return bool(whole) if roots is None else bool(whole & set(roots))

    def universe(self) -> FrozenSet[Label]:
        return frozenset().union(*self.inside.values()) if self.inside else frozenset()

    def constituents(self, i: int, j: int) -> FrozenSet[Label]:
        """N_ij & O_ij: what w[i:j] can be in the context of the whole sentence"""
        return self.inside[(i, j)] & self.outside.get((i, j), frozenset())


def symbolic_inside(grammar, tokens: Sequence[str]) -> SymbolicChart:
    chart = SymbolicChart(tokens=list(tokens))
    n = len(tokens)
    for i, word in enumerate(tokens):
        chart.inside[(i, i + 1)] = grammar.unary(word)
    for w in range(2, n + 1):
        for i in range(n - w + 1):
            j = i + w
            cell: Set[Label] = set()
            for k in range(i + 1, j):
                cell |= grammar.combine(chart.inside[(i, k)], chart.inside[(k, j)])
            chart.inside[(i, j)] = frozenset(cell)
    return chart


def symbolic_outside(grammar, chart: SymbolicChart, roots: Iterable[Label]) -> SymbolicChart:
    n = chart.n
    universe = chart.universe()
    chart.outside[(0, n)] = frozenset(roots)
    for w in range(n - 1, 0, -1):
        for i in range(n - w + 1):
            j = i + w
            cell: Set[Label] = set()
            for m in range(j + 1, n + 1):
                cell |= grammar.split_right(chart.outside[(i, m)], chart.inside[(j, m)], universe)
            for m in range(0, i):
                cell |= grammar.split_left(chart.outside[(m, j)], chart.inside[(m, i)], universe)
            chart.outside[(i, j)] = frozenset(cell)
    return chart


# brute-force oracle: enumerate bracketings one by one

Bracketing = Tuple  # nested ((i, j), left, right) or (i, j) for a leaf


def enumerate_bracketings(i: int, j: int) -> Iterator[Bracketing]:
    if j - i == 1:
        yield (i, j)
        return
    for k in range(i + 1, j):
        for left in enumerate_bracketings(i, k):
            for right in enumerate_bracketings(k, j):
                yield ((i, j), left, right)


def _span_of(node: Bracketing) -> Span:
    return node if isinstance(node[0], int) else node[0]


def _labels_bottom_up(grammar, tokens: Sequence[str], node: Bracketing, table: Dict[Span, FrozenSet[Label]]) -> FrozenSet[Label]:
    if isinstance(node[0], int):
        labels = grammar.unary(tokens[node[0]])
    else:
        span, left, right = node
        labels = grammar.combine(_labels_bottom_up(grammar, tokens, left, table),
                                 _labels_bottom_up(grammar, tokens, right, table))
    table[_span_of(node)] = labels
    return labels


def _labels_top_down(grammar, node: Bracketing, allowed: FrozenSet[Label],
                     table: Dict[Span, FrozenSet[Label]], out: Dict[Span, Set[Label]]) -> None:
    span = _span_of(node)
    out.setdefault(span, set()).update(allowed)
    if isinstance(node[0], int):
        return
    _, left, right = node
    left_labels, right_labels = table[_span_of(left)], table[_span_of(right)]
    left_ok = {b for b in left_labels if any(grammar.combine([b], [c]) & allowed for c in right_labels)}
    right_ok = {c for c in right_labels if any(grammar.combine([b], [c]) & allowed for b in left_labels)}
    # a left label only survives paired with a right label that survives, and vice versa
    _labels_top_down(grammar, left, frozenset(left_ok), table, out)
    _labels_top_down(grammar, right, frozenset(right_ok), table, out)


def brute_force_charts(grammar, tokens: Sequence[str], roots: Iterable[Label]) -> Tuple[Dict[Span, Set[Label]], Dict[Span, Set[Label]]]:
    """per span: labels of any bracketing, and labels used in some complete derivation"""
    n = len(tokens)
    roots = frozenset(roots)
    inside: Dict[Span, Set[Label]] = {(i, i + w): set() for w in range(1, n + 1) for i in range(n - w + 1)}
    used: Dict[Span, Set[Label]] = {span: set() for span in inside}
    for tree in enumerate_bracketings(0, n):
        table: Dict[Span, FrozenSet[Label]] = {}
        root_labels = _labels_bottom_up(grammar, tokens, tree, table)
        for span, labels in table.items():
            inside[span] |= labels
        allowed = root_labels & roots
        if allowed:
            found: Dict[Span, Set[Label]] = {}
            _labels_top_down(grammar, tree, frozenset(allowed), table, found)
            for span, labels in found.items():
                used[span] |= labels
    return inside, used
