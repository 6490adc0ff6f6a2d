"""exact k-best decoding over a type distribution.

every node keeps a lazily extended list of its subtrees, best first. a
complex candidate at a node is a pair (a, b) of positions in the two child
lists; its successors (a+1, b) and (a, b+1) are never better, so a frontier
heap yields the pairs in order. ties are broken by enumeration order, which
is also monotone along successors, so the ranking is exact.
"""

import heapq
from typing import Dict, List, Optional, Set, Tuple

from calculus.types import ComplexType, PrimitiveType, SemType

from .decoder import TypeDistribution

Candidate = Tuple[SemType, float]


def enumeration_key(primitives, t: SemType) -> tuple:
    index = {p: i for i, p in enumerate(primitives)}

    def key(u: SemType) -> tuple:
        if isinstance(u, PrimitiveType):
            return (0, index[u])
        return (1, key(u.left), key(u.right))

    return key(t)


class _NodeList:
    def __init__(self, search: "_KBestSearch", level: int, j: int):
        self.search = search
        self.level = level
        self.j = j
        self.items: List[Tuple[SemType, float, tuple]] = []
        self.heap: List[tuple] = []
        self.seen: Set[Tuple[int, int]] = set()

        dist, row = search.dist, search.row
        stop = 0.0 if level == dist.depth else float(dist.log_simple[level].data[row, j])
        for k, p in enumerate(dist.primitives):
            value = stop + float(dist.log_prim[level].data[row, j, k])
            heapq.heappush(self.heap, (-value, (0, k), -1, -1, p))

        self.left: Optional[_NodeList] = None
        self.right: Optional[_NodeList] = None
        if level < dist.depth:
            self.log_complex = float(dist.log_complex[level].data[row, j])
            self.left = search.node(level + 1, 2 * j)
            self.right = search.node(level + 1, 2 * j + 1)
            self._push_pair(0, 0)

    def _push_pair(self, a: int, b: int) -> None:
        if (a, b) in self.seen:
            return
        left, right = self.left.get(a), self.right.get(b)
        if left is None or right is None:
            return
        self.seen.add((a, b))
        value = self.log_complex + (left[1] + right[1])
        heapq.heappush(self.heap, (-value, (1, left[2], right[2]), a, b, ComplexType(left[0], right[0])))

    def get(self, i: int) -> Optional[Tuple[SemType, float, tuple]]:
        while len(self.items) <= i and self.heap:
            neg_value, key, a, b, t = heapq.heappop(self.heap)
            self.items.append((t, -neg_value, key))
            if a >= 0:
                self._push_pair(a + 1, b)
                self._push_pair(a, b + 1)
        return self.items[i] if i < len(self.items) else None


class _KBestSearch:
    def __init__(self, dist: TypeDistribution, row: int):
        self.dist = dist
        self.row = row
        self.nodes: Dict[Tuple[int, int], _NodeList] = {}

    def node(self, level: int, j: int) -> _NodeList:
        if (level, j) not in self.nodes:
            self.nodes[(level, j)] = _NodeList(self, level, j)
        return self.nodes[(level, j)]


def k_best_types(dist: TypeDistribution, k: int, row: int = 0) -> List[Candidate]:
    """the k most probable types of row `row`, best first, with log probabilities"""
    if k < 1:
        raise ValueError("k must be at least 1")
    root = _KBestSearch(dist, row).node(0, 0)
    out: List[Candidate] = []
    for i in range(k):
        item = root.get(i)
        if item is None:
            break
        out.append((item[0], item[1]))
    return out


def best_type(dist: TypeDistribution, row: int = 0) -> SemType:
    return k_best_types(dist, 1, row)[0][0]
