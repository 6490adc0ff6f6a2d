"""type constraints: token patterns whose spans must decode to a fixed type"""

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import orjson

from calculus.types import DEFAULT_PRIMITIVES, SemType, depth, format_type, parse_type
from utils.errors import DatasetError, TypeParseError, UnsupportedDepthError

SENTENCE = "SENTENCE"

DEFAULT_ANCHORS: Tuple[Tuple[Any, str], ...] = (
    (SENTENCE, "<s,t>"),
    (("someone",), "<<e,<s,t>>,<s,t>>"),
    (("something",), "<<e,<s,t>>,<s,t>>"),
    (("do", "something"), "<e,<s,t>>"),
    (("have", "something"), "<e,<s,t>>"),
    (("happen",), "<e,<s,t>>"),
    (("happened",), "<e,<s,t>>"),
)


@dataclass(frozen=True)
class Anchor:
    # None stands for the whole sentence
    pattern: Optional[Tuple[str, ...]]
    type: SemType

    def to_json(self) -> Dict[str, Any]:
        return {
            "pattern": SENTENCE if self.pattern is None else list(self.pattern),
            "type": format_type(self.type),
        }


class AnchorTable:
    def __init__(self, anchors: Sequence[Anchor]):
        self.anchors: List[Anchor] = list(anchors)

    def __len__(self) -> int:
        return len(self.anchors)

    @classmethod
    def from_json(cls, items: Sequence[Mapping[str, Any]],
                  primitives: Sequence[str] = DEFAULT_PRIMITIVES) -> "AnchorTable":
        anchors = []
        for number, item in enumerate(items, start=1):
            if not isinstance(item, Mapping) or "pattern" not in item or "type" not in item:
                raise DatasetError("anchor entries need a pattern and a type", row=number)
            pattern = item["pattern"]
            if pattern == SENTENCE:
                tokens = None
            elif isinstance(pattern, list) and pattern and all(isinstance(w, str) for w in pattern):
                tokens = tuple(w.lower() for w in pattern)
            else:
                raise DatasetError(f"anchor pattern must be {SENTENCE!r} or a list of tokens", row=number)
            try:
                anchors.append(Anchor(tokens, parse_type(item["type"], primitives)))
            except TypeParseError as e:
                raise DatasetError(str(e), row=number) from e
        return cls(anchors)

    @classmethod
    def load(cls, path: Path, primitives: Sequence[str] = DEFAULT_PRIMITIVES) -> "AnchorTable":
        try:
            items = orjson.loads(Path(path).read_bytes())
        except (OSError, orjson.JSONDecodeError) as e:
            raise DatasetError(f"cannot read anchor table {path}: {e}") from e
        if not isinstance(items, list):
            raise DatasetError(f"anchor table {path} must hold a JSON list")
        return cls.from_json(items, primitives)

    @classmethod
    def default(cls) -> "AnchorTable":
        return cls.from_json(
            [{"pattern": p if p == SENTENCE else list(p), "type": t} for p, t in DEFAULT_ANCHORS]
        )

    def to_json(self) -> List[Dict[str, Any]]:
        return [a.to_json() for a in self.anchors]

    def check_depth(self, max_depth: int) -> None:
        for anchor in self.anchors:
            if depth(anchor.type) > max_depth:
                raise UnsupportedDepthError(
                    f"anchor type {format_type(anchor.type)} is deeper than the decoder depth {max_depth}"
                )

    def matches(self, tokens: Sequence[str]) -> List[Tuple[int, int, SemType]]:
        """(i, j, type) for every exact occurrence of every pattern"""
        n = len(tokens)
        found = []
        for anchor in self.anchors:
            if anchor.pattern is None:
                found.append((0, n, anchor.type))
                continue
            width = len(anchor.pattern)
            for i in range(n - width + 1):
                if tuple(tokens[i:i + width]) == anchor.pattern:
                    found.append((i, i + width, anchor.type))
        return found
