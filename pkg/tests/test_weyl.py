import math

import pytest
from conftest import permutations
from hypothesis import given
from hypothesis import strategies as st

from schubmap.errors import MalformedPermutation, NoReduction
from schubmap.weyl import (
    One,
    Permutation,
    VarIndex,
    all_permutations,
    build_pattern,
    free_variable_orders,
    free_variables,
    level,
    level_partition,
    longest,
    parse_permutation,
    reduce_hat,
    reduce_tilde,
    sample_permutations,
)

W5 = parse_permutation("2,5,4,1,3")
W3 = longest(3)
V = VarIndex


def test_parse_examples():
    assert W5.inverse == (4, 1, 5, 3, 2)
    assert parse_permutation("1,2,3").images == (1, 2, 3)
    t = parse_permutation("2,1")
    assert t.inverse == (2, 1)
    assert parse_permutation("25413") == W5


@pytest.mark.parametrize("bad", ["1,1", "0,1", "1,3", "", "a,b", ",".join(map(str, range(1, 14)))])
def test_parse_rejects(bad):
    with pytest.raises(MalformedPermutation):
        parse_permutation(bad)


def test_free_variables_examples():
    vw, succ, square = free_variable_orders(W5)
    assert vw == {V(1, 2), V(1, 4), V(1, 5), V(3, 4), V(3, 5), V(4, 5)}
    assert succ == [V(1, 2), V(1, 4), V(3, 4), V(4, 5), V(1, 5), V(3, 5)]
    assert free_variables(parse_permutation("1,2,3")) == []
    assert free_variables(W3, "square") == [V(1, 2), V(1, 3), V(2, 3)]


def test_pattern_examples():
    pat = build_pattern(W3)
    assert pat.cells == ((None, None, One(3)), (None, One(2), V(2, 3)), (One(1), V(1, 2), V(1, 3)))
    pat2 = build_pattern(parse_permutation("2,1"))
    assert pat2.cells == ((None, One(2)), (One(1), V(1, 2)))
    pat5 = build_pattern(W5)
    assert [str(e) if e else "0" for e in pat5.cells[3]] == ["1_1", "n[1,2]", "0", "n[1,4]", "n[1,5]"]
    assert [str(e) if e else "0" for e in pat5.cells[2]] == ["0", "0", "0", "1_4", "n[4,5]"]


def test_level_examples():
    assert level_partition(parse_permutation("2,1")) == {2: {V(1, 2)}}
    assert level_partition(W3) == {2: {V(1, 2), V(2, 3)}, 3: {V(1, 3)}}
    assert level_partition(W5) == {
        2: {V(1, 2)}, 3: {V(1, 4), V(4, 5)}, 4: {V(1, 5), V(3, 4)}, 5: {V(3, 5)}}


def test_reduce_hat_examples():
    red = reduce_hat(W5)
    assert red.child == parse_permutation("2,4,3,1")
    for src, dst in [((1, 2), (1, 2)), ((1, 4), (1, 3)), ((1, 5), (1, 4)), ((4, 5), (3, 4))]:
        assert red.index_map[V(*src)] == V(*dst)
    assert reduce_hat(parse_permutation("2,1")).index_map == {}
    red3 = reduce_hat(W3)
    assert red3.child == parse_permutation("2,1") and red3.index_map == {V(2, 3): V(1, 2)}
    with pytest.raises(NoReduction):
        reduce_hat(parse_permutation("1"))


def test_reduce_tilde_examples():
    red = reduce_tilde(W5)
    assert red.child == parse_permutation("2,4,1,3")
    assert set(red.index_map) == {V(1, 2), V(1, 4), V(3, 4)}
    assert reduce_tilde(parse_permutation("2,1")).child.r == 1
    red3 = reduce_tilde(W3)
    assert red3.child == parse_permutation("2,1") and set(red3.index_map) == {V(1, 2)}
    with pytest.raises(NoReduction):
        reduce_tilde(parse_permutation("1"))


def _level_oracle(w, v):
    # count ones below-right of the variable's cell, straight from the grid
    pat = build_pattern(w)
    row, col = w.inv(v.a), v.b
    h = sum(1 for i in range(row + 1, w.r + 1) for j in range(col + 1, w.r + 1)
            if isinstance(pat.at(i, j), One))
    return row + col + h - w.r


@given(permutations(1, 7))
def test_pattern_invariants(w):
    pat = build_pattern(w)
    for k in range(1, w.r + 1):
        ones = [e for e in pat.cells[k - 1] if isinstance(e, One)]
        assert ones == [One(w(k))]
    inv_count = sum(1 for i in range(1, w.r + 1) for j in range(i + 1, w.r + 1) if w.inv(i) > w.inv(j))
    assert len(free_variables(w)) == inv_count
    for v in free_variables(w):
        assert pat.at(w.inv(v.a), v.b) == v


@given(permutations(2, 7))
def test_level_bounds_and_partition(w):
    blocks = level_partition(w)
    seen = set()
    for i, block in blocks.items():
        assert not (block & seen)
        seen |= block
        for v in block:
            assert 2 <= i <= min(w.inv(v.a), v.b) <= w.r
            assert _level_oracle(w, v) == i
    assert seen == set(free_variables(w))


@given(permutations(2, 7))
def test_hat_level_compatibility(w):
    red = reduce_hat(w)
    for v in free_variables(w):
        if w.inv(v.a) == w.r:
            assert level(w, v) == v.b
        else:
            assert level(w, v) == level(red.child, red.index_map[v])


@given(permutations(2, 7))
def test_tilde_level_compatibility(w):
    red = reduce_tilde(w)
    assert set(free_variables(red.child)) == {v for v in free_variables(w) if v.b < w.r}
    for v in free_variables(w):
        if v.b < w.r:
            assert level(w, v) == level(red.child, v)
        else:
            assert level(w, v) == w.inv(v.a)


@given(permutations(1, 7), st.sampled_from(["succ", "square"]))
def test_orders_are_total_and_match_keys(w, kind):
    vs = free_variables(w, kind)
    assert len(set(vs)) == len(vs)
    # largest first: key (-b, -pi^-1(a)) for succ and (-b, pi^-1(a)) for square, descending
    sgn = -1 if kind == "succ" else 1
    keys = [(-v.b, sgn * w.inv(v.a)) for v in vs]
    assert keys == sorted(keys, reverse=True)
    assert len(set(keys)) == len(keys)


@pytest.mark.parametrize("r", range(1, 7))
def test_all_permutations_count(r):
    perms = list(all_permutations(r))
    assert len(perms) == math.factorial(r) == len(set(perms))


def test_sampling_is_deterministic():
    a = sample_permutations(7, 50, seed=3)
    assert a == sample_permutations(7, 50, seed=3)
    assert len(set(a)) == 50
    assert a != sample_permutations(7, 50, seed=4)
    assert len(sample_permutations(3, 100, seed=0)) == 6


def test_permutation_sign_and_inverse():
    for w in all_permutations(4):
        assert all(w.inv(w(i)) == i for i in range(1, 5))
        assert w.sign() == (-1) ** sum(1 for i in range(1, 5) for j in range(i + 1, 5) if w(i) > w(j))
    assert Permutation((2, 1)).sign() == -1
