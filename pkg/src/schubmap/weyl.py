"""Permutation matrices, their free variables, orderings, levels and reductions.

A permutation ``w`` of ``1..r`` is given in one-line notation; row ``k`` of the
matrix holds a one in column ``w(k)``. The free variables sit at the cells
``(w^-1(a), b)`` with ``a < b`` and ``w^-1(a) > w^-1(b)``.

>>> w = Permutation.parse("2,5,4,1,3")
>>> [str(v) for v in free_variables(w, "succ")]
['n[1,2]', 'n[1,4]', 'n[3,4]', 'n[4,5]', 'n[1,5]', 'n[3,5]']
>>> level(w, VarIndex(1, 5))
4
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

from .errors import MalformedPermutation, NoReduction
from .ratfunc import MAX_R

__all__ = [
    "Permutation",
    "VarIndex",
    "One",
    "Entry",
    "MatrixPattern",
    "Reduction",
    "pattern",
    "free_variables",
    "order_key",
    "level",
    "level_partition",
    "reduce_hat",
    "reduce_tilde",
    "longest",
    "all_permutations",
    "sample_permutations",
    "parse_permutation",
    "build_pattern",
    "free_variable_orders",
]


class VarIndex(NamedTuple):
    a: int
    b: int

    def __str__(self) -> str:
        return f"n[{self.a},{self.b}]"


class One(NamedTuple):
    j: int

    def __str__(self) -> str:
        return f"1_{self.j}"


Entry = "VarIndex | One | None"


@dataclass(frozen=True)
class Permutation:
    images: tuple[int, ...]
    inverse: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        imgs = tuple(int(x) for x in self.images)
        r = len(imgs)
        if r < 1:
            raise MalformedPermutation("empty permutation")
        if r > MAX_R:
            raise MalformedPermutation(f"size {r} exceeds the supported maximum {MAX_R}")
        if sorted(imgs) != list(range(1, r + 1)):
            raise MalformedPermutation(f"{imgs} is not a permutation of 1..{r}")
        inv = [0] * r
        for k, v in enumerate(imgs, 1):
            inv[v - 1] = k
        object.__setattr__(self, "images", imgs)
        object.__setattr__(self, "inverse", tuple(inv))

    @classmethod
    def parse(cls, text: str) -> "Permutation":
        """Accepts ``"2,5,4,1,3"``, ``"2 5 4 1 3"`` or ``"25413"`` (single digits)."""
        s = text.strip().strip("()[]")
        if "," in s or " " in s:
            parts = [p for p in s.replace(",", " ").split() if p]
        else:
            parts = list(s)
        try:
            return cls(tuple(int(p) for p in parts))
        except ValueError:
            raise MalformedPermutation(f"cannot parse permutation {text!r}") from None

    @property
    def r(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i - 1]

    def inv(self, i: int) -> int:
        return self.inverse[i - 1]

    def one_line(self) -> str:
        return ",".join(map(str, self.images))

    def __str__(self) -> str:
        return self.one_line()

    def sign(self) -> int:
        return -1 if len(inversions(self)) % 2 else 1


def inversions(w: Permutation) -> list[tuple[int, int]]:
    return [(i, j) for i in range(1, w.r + 1) for j in range(i + 1, w.r + 1) if w(i) > w(j)]


def longest(r: int) -> Permutation:
    return Permutation(tuple(range(r, 0, -1)))


def all_permutations(r: int) -> Iterator[Permutation]:
    for p in itertools.permutations(range(1, r + 1)):
        yield Permutation(p)


def sample_permutations(r: int, count: int, seed: int) -> list[Permutation]:
    """``count`` distinct permutations drawn with a seeded generator, in draw order."""
    rng = random.Random(seed)
    seen: set[tuple[int, ...]] = set()
    out = []
    total = 1
    for k in range(2, r + 1):
        total *= k
    count = min(count, total)
    while len(out) < count:
        p = list(range(1, r + 1))
        rng.shuffle(p)
        t = tuple(p)
        if t not in seen:
            seen.add(t)
            out.append(Permutation(t))
    return out


def is_free(w: Permutation, a: int, b: int) -> bool:
    return a < b and w.inv(a) > w.inv(b)


def free_set(w: Permutation) -> list[VarIndex]:
    r = w.r
    return [VarIndex(a, b) for b in range(1, r + 1) for a in range(1, b) if w.inv(a) > w.inv(b)]


def order_key(w: Permutation, kind: str):
    """Sort key putting the largest element first under ``succ`` or ``square``."""
    if kind == "succ":
        return lambda v: (v.b, w.inv(v.a))
    if kind == "square":
        return lambda v: (v.b, -w.inv(v.a))
    raise ValueError(f"unknown ordering {kind!r}")


def free_variables(w: Permutation, ordering: str = "succ") -> list[VarIndex]:
    """Free variables of ``w``, largest first under the named total order."""
    return sorted(free_set(w), key=order_key(w, ordering))


@dataclass(frozen=True)
class MatrixPattern:
    """The r x r grid of zeros, labelled ones and free variables of ``w``."""

    w: Permutation
    cells: tuple[tuple[object, ...], ...]

    @property
    def r(self) -> int:
        return self.w.r

    def at(self, row: int, col: int):
        return self.cells[row - 1][col - 1]

    def position(self, entry) -> tuple[int, int]:
        if isinstance(entry, One):
            return (self.w.inv(entry.j), entry.j)
        return (self.w.inv(entry.a), entry.b)

    def nonzero_cells(self) -> list[tuple[int, int]]:
        return [
            (i, j)
            for i in range(1, self.r + 1)
            for j in range(1, self.r + 1)
            if self.cells[i - 1][j - 1] is not None
        ]

    def to_text(self) -> str:
        width = 7
        lines = []
        for row in self.cells:
            lines.append("".join(("." if e is None else str(e)).rjust(width) for e in row))
        return "\n".join(lines)


_PATTERNS: dict[Permutation, MatrixPattern] = {}


def pattern(w: Permutation) -> MatrixPattern:
    hit = _PATTERNS.get(w)
    if hit is not None:
        return hit
    r = w.r
    grid = [[None] * r for _ in range(r)]
    for j in range(1, r + 1):
        grid[w.inv(j) - 1][j - 1] = One(j)
    for v in free_set(w):
        grid[w.inv(v.a) - 1][v.b - 1] = v
    pat = MatrixPattern(w, tuple(tuple(row) for row in grid))
    _PATTERNS[w] = pat
    return pat


def _h(w: Permutation, row: int, col: int) -> int:
    # ones strictly below and strictly right of (row, col)
    return sum(1 for j in range(col + 1, w.r + 1) if w.inv(j) > row)


def level(w: Permutation, v: VarIndex) -> int:
    if not is_free(w, v.a, v.b):
        raise ValueError(f"{v} is not a free variable of {w}")
    row = w.inv(v.a)
    return row + v.b + _h(w, row, v.b) - w.r


def level_partition(w: Permutation) -> dict[int, frozenset[VarIndex]]:
    """Blocks ``B(i)`` for ``i = 2..r``; empty blocks are kept."""
    blocks: dict[int, set[VarIndex]] = {i: set() for i in range(2, w.r + 1)}
    for v in free_set(w):
        blocks[level(w, v)].add(v)
    return {i: frozenset(s) for i, s in blocks.items()}


@dataclass(frozen=True)
class Reduction:
    """A smaller permutation and how indices of the parent map into it.

    ``row_map`` / ``col_map`` send surviving parent rows / columns to child
    ones; ``index_map`` sends parent free variables to child free variables.
    """

    parent: Permutation
    child: Permutation
    mode: str
    row_map: dict[int, int]
    col_map: dict[int, int]
    index_map: dict[VarIndex, VarIndex]

    def value_map(self, j: int) -> int:
        """Relabel a column value (the alphabet of one-line notation)."""
        return self.col_map[j]


def reduce_hat(w: Permutation) -> Reduction:
    """Drop the bottom row and the column of its one."""
    r = w.r
    if r < 2:
        raise NoReduction("cannot reduce a 1x1 matrix")
    last = w(r)

    def phi(i: int) -> int:
        return i if i < last else i - 1

    child = Permutation(tuple(phi(w(i)) for i in range(1, r)))
    col_map = {j: phi(j) for j in range(1, r + 1) if j != last}
    row_map = {i: i for i in range(1, r)}
    index_map = {}
    for v in free_set(w):
        if w.inv(v.a) < r:
            index_map[v] = VarIndex(phi(v.a), phi(v.b))
    return Reduction(w, child, "hat", row_map, col_map, index_map)


def reduce_tilde(w: Permutation) -> Reduction:
    """Drop the rightmost column and the row of its one."""
    r = w.r
    if r < 2:
        raise NoReduction("cannot reduce a 1x1 matrix")
    k = w.inv(r)
    child = Permutation(tuple(w(i) if i < k else w(i + 1) for i in range(1, r)))
    row_map = {i: (i if i < k else i - 1) for i in range(1, r + 1) if i != k}
    col_map = {j: j for j in range(1, r)}
    index_map = {v: v for v in free_set(w) if v.b < r}
    return Reduction(w, child, "tilde", row_map, col_map, index_map)


def perm_from_sequence(seq: Sequence[int]) -> Permutation:
    return Permutation(tuple(seq))


def parse_permutation(text: str) -> Permutation:
    return Permutation.parse(text)


def build_pattern(w: Permutation) -> MatrixPattern:
    return pattern(w)


def free_variable_orders(w: Permutation) -> tuple[frozenset[VarIndex], list[VarIndex], list[VarIndex]]:
    """``V_w`` with its ``succ`` and ``square`` orderings, largest first."""
    return frozenset(free_set(w)), free_variables(w, "succ"), free_variables(w, "square")
