"""Disjoint up/left path systems in the grid of ``wn`` and their path sums.

Two nonzero cells are neighbours when they share a row or a column with no
nonzero cell between them. Paths step only up or left, so every one cell is a
sink: nothing nonzero sits above it or to its left.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

from .errors import EndpointError
from .ratfunc import MultiPoly, mono_of, nvar
from .weyl import MatrixPattern, One, Permutation, VarIndex, is_free, pattern

__all__ = [
    "Cell",
    "PathSet",
    "OriginDestination",
    "Adjacency",
    "adjacency",
    "row_data",
    "origins_destinations",
    "enumerate_path_sets",
    "path_sets_for",
    "path_sum",
    "classify",
]

Cell = tuple[int, int]


@dataclass(frozen=True)
class PathSet:
    paths: tuple[tuple[Cell, ...], ...]
    u_product: MultiPoly

    def first_step(self, origin: Cell) -> str | None:
        """``"left"``, ``"up"`` or ``None`` for a length-0 path."""
        for p in self.paths:
            if p[0] == origin:
                if len(p) == 1:
                    return None
                return "left" if p[1][0] == origin[0] else "up"
        raise KeyError(origin)

    def cells(self) -> set[Cell]:
        return {c for p in self.paths for c in p}

    def to_text(self, pat: MatrixPattern | None = None) -> str:
        lines = []
        for p in self.paths:
            if pat is None:
                lines.append(" -> ".join(f"({i},{j})" for i, j in p))
            else:
                lines.append(" -> ".join(str(pat.at(i, j)) for i, j in p))
        return "\n".join(lines)


@dataclass(frozen=True)
class Adjacency:
    up: dict[Cell, Cell]
    left: dict[Cell, Cell]
    down: dict[Cell, Cell]
    right: dict[Cell, Cell]


@lru_cache(maxsize=None)
def adjacency(w: Permutation) -> Adjacency:
    pat = pattern(w)
    r = w.r
    up, left, down, right = {}, {}, {}, {}
    for i in range(1, r + 1):
        prev = None
        for j in range(1, r + 1):
            if pat.at(i, j) is not None:
                if prev is not None:
                    left[(i, j)] = prev
                    right[prev] = (i, j)
                prev = (i, j)
    for j in range(1, r + 1):
        prev = None
        for i in range(1, r + 1):
            if pat.at(i, j) is not None:
                if prev is not None:
                    up[(i, j)] = prev
                    down[prev] = (i, j)
                prev = (i, j)
    return Adjacency(up, left, down, right)


def _cell_poly(pat: MatrixPattern, cell: Cell) -> MultiPoly:
    e = pat.at(*cell)
    if isinstance(e, VarIndex):
        return MultiPoly.var(nvar(e.a, e.b))
    return MultiPoly.const(1)


def row_data(w: Permutation, j: int) -> tuple[Cell, MultiPoly]:
    """``gamma(1_j)``, the rightmost nonzero cell of the row of ``1_j``, and ``rho(1_j)``."""
    pat = pattern(w)
    row = w.inv(j)
    gamma = None
    rho = 0
    for col in range(1, w.r + 1):
        e = pat.at(row, col)
        if e is None:
            continue
        gamma = (row, col)
        if isinstance(e, VarIndex):
            rho += mono_of(nvar(e.a, e.b))
    return gamma, MultiPoly.monomial(rho)


@dataclass(frozen=True)
class OriginDestination:
    alpha: VarIndex
    D: frozenset[Cell]
    O: frozenset[Cell]
    O1: frozenset[Cell]
    D1: frozenset[Cell]
    bottom_origin: Cell
    rows: tuple[int, int]
    cols: tuple[int, int]

    @property
    def t(self) -> int:
        return len(self.D) - 1

    def origins_up(self, k: int) -> frozenset[Cell]:
        return frozenset(c for c in self.O if c[0] <= k)

    def origins_down(self, k: int) -> frozenset[Cell]:
        return frozenset(c for c in self.O if c[0] >= k)

    def destinations_up(self, k: int) -> frozenset[Cell]:
        return frozenset(c for c in self.D if c[0] <= k)

    def destinations_down(self, k: int) -> frozenset[Cell]:
        return frozenset(c for c in self.D if c[0] >= k)


@lru_cache(maxsize=None)
def _od(w: Permutation, alpha: VarIndex) -> OriginDestination:
    a, b = alpha
    if not is_free(w, a, b):
        raise ValueError(f"{alpha} is not a free variable of {w}")
    r = w.r
    top, bottom = w.inv(b), w.inv(a)
    D = frozenset((w.inv(j), j) for j in range(b, r + 1) if top <= w.inv(j) <= bottom)
    bottom_origin, _ = row_data(w, a)
    O = {bottom_origin}
    for cell in D:
        if cell[1] != b:
            O.add(row_data(w, cell[1])[0])
    O = frozenset(O)
    O1 = set()
    pat = pattern(w)
    for c in O:
        t, col = c
        if col == r and t < bottom and t >= 2:
            above = pat.at(t - 1, r)
            if isinstance(above, VarIndex) and (t - 1, r) not in O:
                O1.add(c)
    D1 = frozenset(d for d in D if any(d[0] == o[0] for o in O1))
    return OriginDestination(alpha, D, O, frozenset(O1), D1, bottom_origin, (top, bottom), (b, r))


def origins_destinations(w: Permutation, alpha: VarIndex) -> OriginDestination:
    return _od(w, VarIndex(*alpha))


def enumerate_path_sets(w: Permutation, A: Iterable[Cell], B: Iterable[Cell]) -> list[PathSet]:
    """All systems of pairwise disjoint up/left paths matching ``A`` onto ``B``."""
    pat = pattern(w)
    A = sorted(set(A), key=lambda c: (-c[0], -c[1]))
    B = frozenset(B)
    if len(A) != len(B) or not A:
        raise EndpointError(f"need |A| = |B| >= 1, got {len(A)} and {len(B)}")
    for c in list(A) + list(B):
        if not (1 <= c[0] <= w.r and 1 <= c[1] <= w.r) or pat.at(*c) is None:
            raise EndpointError(f"{c} is not a nonzero cell")
    adj = adjacency(w)
    weights = {c: (mono_of(nvar(e.a, e.b)) if isinstance(e, VarIndex) else 0)
               for c in pat.nonzero_cells() for e in [pat.at(*c)]}
    out: list[PathSet] = []
    used: set[Cell] = set(A)
    chosen: list[tuple[Cell, ...]] = []

    def extend(k: int, path: list[Cell], mono: int) -> None:
        cur = path[-1]
        if cur in B:
            chosen.append(tuple(path))
            place(k + 1, mono)
            chosen.pop()
            return
        for nxt in (adj.up.get(cur), adj.left.get(cur)):
            if nxt is None or nxt in used:
                continue
            used.add(nxt)
            path.append(nxt)
            extend(k, path, mono + weights[nxt])
            path.pop()
            used.discard(nxt)

    def place(k: int, mono: int) -> None:
        if k == len(A):
            ends = {p[-1] for p in chosen}
            if ends != B:
                return
            out.append(PathSet(tuple(chosen), MultiPoly.monomial(mono)))
            return
        origin = A[k]
        extend(k, [origin], mono + weights[origin])

    place(0, 0)
    for ps in out:
        _assert_valid(ps, adj)
    return out


def _assert_valid(ps: PathSet, adj: Adjacency) -> None:
    seen: set[Cell] = set()
    for p in ps.paths:
        for x, y in zip(p, p[1:]):
            if adj.up.get(x) != y and adj.left.get(x) != y:
                raise AssertionError(f"illegal step {x} -> {y}")
        for c in p:
            if c in seen:
                raise AssertionError(f"paths share cell {c}")
            seen.add(c)


@lru_cache(maxsize=None)
def _path_sets(w: Permutation, alpha: VarIndex) -> tuple[PathSet, ...]:
    od = _od(w, alpha)
    return tuple(enumerate_path_sets(w, od.O, od.D))


def path_sets_for(w: Permutation, alpha: VarIndex) -> tuple[PathSet, ...]:
    return _path_sets(w, VarIndex(*alpha))


def classify(w: Permutation, alpha: VarIndex, ps: PathSet) -> str:
    """Which of ``"L"``, ``"1"``, ``"2"`` the path set belongs to."""
    od = origins_destinations(w, alpha)
    r = w.r
    for p in ps.paths:
        if p[0][1] == r and len(p) > 1 and p[1][0] != p[0][0]:
            break
    else:
        return "L"
    return "1" if ps.first_step(od.bottom_origin) == "left" else "2"


def path_sum(w: Permutation, alpha: VarIndex, variant: str = "P") -> MultiPoly:
    """``P``, ``P_L``, ``P_1`` or ``P_2`` of a free variable."""
    key = {"P": None, "P_L": "L", "P_1": "1", "P_2": "2", "L": "L", "1": "1", "2": "2"}
    if variant not in key:
        raise ValueError(f"unknown variant {variant!r}")
    want = key[variant]
    alpha = VarIndex(*alpha)
    terms: dict[int, int] = {}
    for ps in path_sets_for(w, alpha):
        if want is not None and classify(w, alpha, ps) != want:
            continue
        (m, _), = ps.u_product.terms.items()
        terms[m] = terms.get(m, 0) + 1
    return MultiPoly(terms)


def one_cell(w: Permutation, j: int) -> Cell:
    return (w.inv(j), j)


def label(w: Permutation, cell: Cell):
    return pattern(w).at(*cell)


def is_one(w: Permutation, cell: Cell) -> bool:
    return isinstance(pattern(w).at(*cell), One)
