"""the type universe over a fixed primitive set: ordering, enumeration and sampling"""

from functools import lru_cache
from typing import List, Sequence, Tuple

import numpy as np

from utils.errors import EnumerationLimitError

from .combinators import Combinator, apply_types, compose_types
from .types import DEFAULT_PRIMITIVES, ComplexType, PrimitiveType, SemType

MAX_ENUMERATION_DEPTH = 3


def count_types(max_depth: int, num_primitives: int = len(DEFAULT_PRIMITIVES)) -> int:
    """N(0) = |P|, N(d) = |P| + N(d-1)^2"""
    count = num_primitives
    for _ in range(max_depth):
        count = num_primitives + count * count
    return count


class TypeCalculus:
    """primitives, the singleton constructor set, and everything defined over them"""

    def __init__(self, primitives: Sequence[str] = DEFAULT_PRIMITIVES):
        self.primitive_names: Tuple[str, ...] = tuple(primitives)
        self.primitives: Tuple[PrimitiveType, ...] = tuple(PrimitiveType(p) for p in primitives)
        self.index = {p: i for i, p in enumerate(self.primitives)}
        self.num_constructors = 1

    def __len__(self) -> int:
        return len(self.primitives)

    def primitive(self, name: str) -> PrimitiveType:
        return self.primitives[self.primitive_names.index(name)]

    def type_key(self, t: SemType) -> tuple:
        """enumeration order: primitives as declared, then (left, right) recursively"""
        if isinstance(t, PrimitiveType):
            return (0, self.index[t])
        return (1, self.type_key(t.left), self.type_key(t.right))

    def enumerate_types(self, max_depth: int) -> List[SemType]:
        if max_depth < 0:
            raise ValueError("max_depth must be non-negative")
        if max_depth > MAX_ENUMERATION_DEPTH:
            raise EnumerationLimitError(
                f"refusing to enumerate types of depth {max_depth}: "
                f"{count_types(max_depth, len(self.primitives))} types"
            )
        return list(self._enumerate(max_depth))

    @lru_cache(maxsize=None)
    def _enumerate(self, max_depth: int) -> Tuple[SemType, ...]:
        if max_depth == 0:
            return self.primitives
        smaller = self._enumerate(max_depth - 1)
        return self.primitives + tuple(ComplexType(a, b) for a in smaller for b in smaller)

    def sample_type(self, rng: np.random.Generator, max_depth: int = 4, recurse_prob: float = 0.4) -> SemType:
        """geometric recursion: complex with recurse_prob above max_depth, else a uniform primitive"""
        if not 0.0 <= recurse_prob < 1.0:
            raise ValueError("recurse_prob must lie in [0, 1)")

        def draw(level: int) -> SemType:
            if level < max_depth and rng.random() < recurse_prob:
                left = draw(level + 1)
                right = draw(level + 1)
                return ComplexType(left, right)
            return self.primitives[int(rng.integers(len(self.primitives)))]

        return draw(0)

    def sample_viable_pair(
        self,
        rng: np.random.Generator,
        combinator: Combinator,
        max_depth: int = 2,
        recurse_prob: float = 0.4,
    ) -> Tuple[SemType, SemType, frozenset]:
        """a pair built to be in the combinator's domain, with its symbolic outputs"""
        a = self.sample_type(rng, max_depth, recurse_prob)
        b = self.sample_type(rng, max_depth, recurse_prob)
        if combinator is Combinator.APPLY:
            pair = (ComplexType(a, b), a)
        elif combinator is Combinator.COMPOSE:
            c = self.sample_type(rng, max_depth, recurse_prob)
            pair = (ComplexType(a, b), ComplexType(b, c))
        else:
            raise ValueError("identity takes a single type")
        if rng.random() < 0.5:
            pair = (pair[1], pair[0])
        outputs = apply_types(*pair) if combinator is Combinator.APPLY else compose_types(*pair)
        return pair[0], pair[1], outputs

    def sample_controller_pair(
        self,
        rng: np.random.Generator,
        max_depth: int = 2,
        recurse_prob: float = 0.4,
    ) -> Tuple[SemType, SemType]:
        """mix of apply-ready, compose-ready, raise-then-compose and unrelated pairs"""
        scenario = int(rng.integers(4))
        if scenario == 0:
            t0, t1, _ = self.sample_viable_pair(rng, Combinator.APPLY, max_depth, recurse_prob)
        elif scenario == 1:
            t0, t1, _ = self.sample_viable_pair(rng, Combinator.COMPOSE, max_depth, recurse_prob)
        elif scenario == 2:
            # raising t0 with r makes <<t0,r>,r> compose with <r,x>
            t0 = self.sample_type(rng, max_depth, recurse_prob)
            r = self.primitives[int(rng.integers(len(self.primitives)))]
            x = self.sample_type(rng, max_depth, recurse_prob)
            t1 = ComplexType(r, x)
            if rng.random() < 0.5:
                t0, t1 = t1, t0
        else:
            t0 = self.sample_type(rng, max_depth, recurse_prob)
            t1 = self.sample_type(rng, max_depth, recurse_prob)
        return t0, t1
