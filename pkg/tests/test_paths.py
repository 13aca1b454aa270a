import itertools

import pytest
from conftest import permutations
from hypothesis import given

from schubmap.errors import EndpointError
from schubmap.paths import (
    classify,
    enumerate_path_sets,
    origins_destinations,
    path_sets_for,
    path_sum,
    row_data,
)
from schubmap.ratfunc import MultiPoly, nvar
from schubmap.weyl import One, VarIndex, free_variables, longest, parse_permutation, pattern

W3 = longest(3)
W231 = parse_permutation("2,3,1")
W5 = parse_permutation("2,5,4,1,3")
V = VarIndex


def n(a, b):
    return MultiPoly.var(nvar(a, b))


def one(w, j):
    return (w.inv(j), j)


# --- brute-force oracle -----------------------------------------------------

def _single_paths(w, start, ends):
    """Every up/left path from ``start`` to any cell of ``ends``, neighbours read off the grid."""
    pat = pattern(w)
    nz = {(i, j) for i in range(1, w.r + 1) for j in range(1, w.r + 1) if pat.at(i, j) is not None}

    def steps(c):
        i, j = c
        ups = [(k, j) for k in range(i - 1, 0, -1) if (k, j) in nz][:1]
        lefts = [(i, k) for k in range(j - 1, 0, -1) if (i, k) in nz][:1]
        return ups + lefts

    out = []

    def walk(path):
        if path[-1] in ends:
            out.append(tuple(path))
        for nxt in steps(path[-1]):
            walk(path + [nxt])

    walk([start])
    return out


def _oracle_sum(w, A, B):
    pat = pattern(w)
    A = sorted(A)
    B = set(B)
    total = MultiPoly.const(0)
    for combo in itertools.product(*(_single_paths(w, a, B) for a in A)):
        cells = [c for p in combo for c in p]
        if len(cells) != len(set(cells)) or {p[-1] for p in combo} != B:
            continue
        # a path may only end at its first destination cell
        if any(c in B for p in combo for c in p[:-1]):
            continue
        term = MultiPoly.const(1)
        for c in cells:
            e = pat.at(*c)
            if isinstance(e, VarIndex):
                term = term * n(e.a, e.b)
        total = total + term
    return total


# --- examples ---------------------------------------------------------------

def test_row_data_examples():
    assert row_data(W3, 2) == ((2, 3), n(2, 3))
    assert row_data(W5, 2) == ((1, 2), MultiPoly.const(1))
    assert row_data(W5, 1) == ((4, 5), n(1, 2) * n(1, 4) * n(1, 5))


def test_origins_destinations_examples():
    od = origins_destinations(W3, (1, 2))
    assert od.D == {one(W3, 2)} and od.O == {(3, 3)} and od.t == 0
    od = origins_destinations(W231, (1, 2))
    assert od.D == {one(W231, 2), one(W231, 3)} and od.t == 1
    assert od.O == {(3, 3), one(W231, 3)}
    od = origins_destinations(W5, (1, 2))
    assert od.D == {one(W5, j) for j in (2, 4, 5)} and od.t == 2
    pat = pattern(W5)
    assert {str(pat.at(*c)) for c in od.O} == {"n[1,5]", "1_5", "n[4,5]"}


def test_enumerate_examples():
    sets = enumerate_path_sets(W3, [(3, 3)], [one(W3, 2)])
    assert sorted(str(s.u_product) for s in sets) == sorted(map(str, [n(1, 2) * n(1, 3), n(1, 3) * n(2, 3)]))
    od = origins_destinations(W231, (1, 2))
    assert len(enumerate_path_sets(W231, od.O, od.D)) == 1
    c = one(W3, 3)
    (ps,) = enumerate_path_sets(W3, [c], [c])
    assert ps.paths == ((c,),) and ps.u_product == MultiPoly.const(1)


def test_enumerate_rejects_bad_endpoints():
    with pytest.raises(EndpointError):
        enumerate_path_sets(W3, [(3, 3)], [one(W3, 2), one(W3, 3)])
    with pytest.raises(EndpointError):
        enumerate_path_sets(W3, [], [])
    with pytest.raises(EndpointError):
        enumerate_path_sets(W3, [(1, 1)], [one(W3, 2)])


def test_path_sum_examples():
    assert path_sum(W3, (1, 2)) == n(1, 2) * n(1, 3) + n(1, 3) * n(2, 3)
    assert path_sum(W3, (1, 2), "P_L") == n(1, 2) * n(1, 3)
    assert path_sum(W3, (1, 2), "P_1").is_zero()
    assert path_sum(W3, (1, 2), "P_2") == n(1, 3) * n(2, 3)
    w2 = parse_permutation("2,1")
    # the lone path leaves the rightmost column upward, so it is not in P_L
    assert path_sum(w2, (1, 2)) == n(1, 2) == path_sum(w2, (1, 2), "P_2")
    assert path_sum(w2, (1, 2), "P_L").is_zero()
    assert path_sum(W3, (1, 3), "P_2") == path_sum(W3, (1, 3))
    with pytest.raises(ValueError):
        path_sum(W3, (1, 2), "P_3")


# --- properties -------------------------------------------------------------

@given(permutations(2, 4))
def test_path_sum_matches_brute_force(w):
    for v in free_variables(w):
        od = origins_destinations(w, v)
        assert path_sum(w, v) == _oracle_sum(w, od.O, od.D)


@given(permutations(2, 5))
def test_origin_destination_invariants(w):
    for v in free_variables(w):
        od = origins_destinations(w, v)
        assert len(od.O) == len(od.D) >= 1
        assert one(w, v.b) in od.D
        assert all(isinstance(pattern(w).at(*d), One) for d in od.D)
        assert od.O1 <= od.O and od.D1 <= od.D
        assert od.bottom_origin in od.O and od.bottom_origin[0] == w.inv(v.a)


@given(permutations(2, 5))
def test_partition_identity(w):
    for v in free_variables(w):
        parts = [path_sum(w, v, k) for k in ("P_L", "P_1", "P_2")]
        assert parts[0] + parts[1] + parts[2] == path_sum(w, v)
        od = origins_destinations(w, v)
        if all(c[1] != w.r for c in od.O):
            assert parts[0] == path_sum(w, v)
            assert parts[1].is_zero() and parts[2].is_zero()


@given(permutations(2, 5))
def test_path_sets_are_valid_and_unique_through_alpha(w):
    pat = pattern(w)
    for v in free_variables(w):
        sets = path_sets_for(w, v)
        through = [s for s in sets if (w.inv(v.a), v.b) in s.cells()]
        assert len(through) == 1
        for s in sets:
            cells = [c for p in s.paths for c in p]
            assert len(cells) == len(set(cells))
            for p in s.paths:
                for (i0, j0), (i1, j1) in zip(p, p[1:]):
                    assert (i1 == i0 and j1 < j0) or (j1 == j0 and i1 < i0)
                    between = ([(i0, k) for k in range(j1 + 1, j0)] if i1 == i0
                               else [(k, j0) for k in range(i1 + 1, i0)])
                    assert all(pat.at(*c) is None for c in between)
            assert classify(w, v, s) in {"L", "1", "2"}


def test_enumeration_is_deterministic():
    w = parse_permutation("3,5,1,4,2")
    a = [str(path_sum(w, v)) for v in free_variables(w)]
    b = [str(path_sum(w, v)) for v in free_variables(w)]
    assert a == b
    od = origins_destinations(w, free_variables(w)[0])
    first = enumerate_path_sets(w, od.O, od.D)
    assert first == enumerate_path_sets(w, od.O, od.D)
