"""symbolic montague types: primitives and binary constructed types"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

from utils.errors import TypeParseError

DEFAULT_PRIMITIVES: Tuple[str, ...] = ("e", "s", "t")


@dataclass(frozen=True, slots=True)
class PrimitiveType:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class ComplexType:
    left: "SemType"
    right: "SemType"
    constructor: int = 0

    def __str__(self) -> str:
        return format_type(self)


SemType = Union[PrimitiveType, ComplexType]


def fn(left: SemType, right: SemType) -> ComplexType:
    return ComplexType(left, right)


def depth(t: SemType) -> int:
    if isinstance(t, PrimitiveType):
        return 0
    return 1 + max(depth(t.left), depth(t.right))


def format_type(t: SemType) -> str:
    if isinstance(t, PrimitiveType):
        return t.name
    return f"<{format_type(t.left)},{format_type(t.right)}>"


class _TypeReader:
    """recursive descent over  type := name | '<' type ',' type '>'"""

    def __init__(self, text: str, primitives: Optional[Sequence[str]]):
        self.text = text
        self.pos = 0
        self.primitives = set(primitives) if primitives is not None else None

    def fail(self, message: str) -> TypeParseError:
        return TypeParseError(message, self.text, self.pos)

    def skip_space(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def expect(self, char: str) -> None:
        self.skip_space()
        if self.pos >= len(self.text) or self.text[self.pos] != char:
            found = self.text[self.pos] if self.pos < len(self.text) else "end of input"
            raise self.fail(f"expected {char!r}, found {found!r}")
        self.pos += 1

    def read(self) -> SemType:
        self.skip_space()
        if self.pos >= len(self.text):
            raise self.fail("unexpected end of input")
        if self.text[self.pos] == "<":
            self.pos += 1
            left = self.read()
            self.expect(",")
            right = self.read()
            self.expect(">")
            return ComplexType(left, right)

        start = self.pos
        while self.pos < len(self.text) and (self.text[self.pos].isalnum() or self.text[self.pos] == "_"):
            self.pos += 1
        name = self.text[start:self.pos]
        if not name:
            raise self.fail(f"unexpected character {self.text[self.pos]!r}")
        if self.primitives is not None and name not in self.primitives:
            self.pos = start
            raise self.fail(f"unknown primitive type {name!r}")
        return PrimitiveType(name)


def parse_type(text: str, primitives: Optional[Sequence[str]] = DEFAULT_PRIMITIVES) -> SemType:
    reader = _TypeReader(text, primitives)
    result = reader.read()
    reader.skip_space()
    if reader.pos != len(text):
        raise reader.fail(f"trailing input {text[reader.pos:]!r}")
    return result
