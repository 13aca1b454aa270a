import random
from fractions import Fraction

import pytest
from conftest import permutations
from hypothesis import given
from hypothesis import strategies as st

from schubmap.biratmap import (
    delta_product,
    diag_closed_form,
    diag_derivative_closed_form,
    domain_bounds,
    exponents,
    forward_map,
    forward_split,
    inverse_export,
    inverse_map,
    jacobian,
    k_system,
    rightmost_column_closed_form,
    superdiag_closed_form,
    udl_blocks,
    udl_decompose,
)
from schubmap.errors import PoleError
from schubmap.ratfunc import MultiPoly, RatFunc, decode, nvar, parse, uvar
from schubmap.paths import origins_destinations
from schubmap.weyl import VarIndex, all_permutations, free_variables, longest, parse_permutation

W2 = parse_permutation("2,1")
W3 = longest(3)
W231 = parse_permutation("2,3,1")
W5 = parse_permutation("2,5,4,1,3")
V = VarIndex


def P(text):
    return parse(text)


def n(a, b):
    return RatFunc.var(nvar(a, b))


def rand_point(w, rng):
    pt = {}
    for v in free_variables(w):
        x = Fraction(rng.randint(1, 40), rng.randint(1, 9))
        pt[nvar(v.a, v.b)] = x if rng.random() < 0.5 else -x
    return pt


# --- independent UDL oracle ---------------------------------------------------

def _ldu(m):
    """Doolittle LDU of a square Fraction matrix with nonzero leading minors."""
    r = len(m)
    a = [row[:] for row in m]
    L = [[Fraction(int(i == j)) for j in range(r)] for i in range(r)]
    for k in range(r):
        if a[k][k] == 0:
            return None
        for i in range(k + 1, r):
            f = a[i][k] / a[k][k]
            L[i][k] = f
            for j in range(k, r):
                a[i][j] -= f * a[k][j]
    return L, [a[k][k] for k in range(r)]


def _udl_oracle(mat):
    """Superdiagonal of the upper unipotent factor and the diagonal of ``mat = x b n_-``."""
    r = len(mat)
    flipped = [[mat[r - 1 - i][r - 1 - j] for j in range(r)] for i in range(r)]
    res = _ldu(flipped)
    if res is None:
        return None
    L, D = res
    diag = [D[r - 1 - i] for i in range(r)]
    superdiag = [L[r - 1 - i][r - 2 - i] for i in range(r - 1)]
    return superdiag, diag


# --- examples -----------------------------------------------------------------

def test_forward_examples():
    assert forward_map(W2)[(1, 2)] == n(1, 2)
    fm = forward_map(W3)
    assert fm[(1, 2)] == P("n[1,3]*(n[1,2]+n[2,3])/n[2,3]")
    assert fm[(1, 3)] == n(1, 3) * n(2, 3)
    assert fm[(2, 3)] == n(2, 3)
    fm = forward_map(W231)
    assert fm[(1, 2)] == -n(1, 2) * n(1, 3)
    assert fm[(1, 3)] == n(1, 3)
    assert parse(forward_map(W5).export()["u[3,5]"]) == n(4, 5) * n(1, 5) * n(3, 5)


def test_forward_split_examples():
    z = RatFunc.const(0)
    assert forward_split(W3, (1, 2)) == (n(1, 2) * n(1, 3) / n(2, 3), z, n(1, 3))
    assert forward_split(W3, (1, 3)) == (z, z, forward_map(W3)[(1, 3)])
    checked = 0
    for w in all_permutations(4):
        for v in free_variables(w):
            if all(c[1] != w.r for c in origins_destinations(w, v).O):
                assert forward_split(w, v) == (forward_map(w)[v], z, z)
                checked += 1
    assert checked > 0


def test_udl_blocks_examples():
    b = udl_blocks(W3, 2)
    assert b.det_T == -n(1, 2) * n(1, 3)
    assert b.delta == MultiPoly.var(nvar(1, 2)) * MultiPoly.var(nvar(1, 3))
    assert b.L_det == -1
    b = udl_blocks(W5, 1)
    assert b.T == ((n(4, 5) * n(1, 5) * n(3, 5),),)
    assert b.delta == (n(1, 5) * n(3, 5) * n(4, 5)).num and b.L_det == 1
    b = udl_blocks(W2, 1)
    assert b.T == ((n(1, 2),),) and b.F == ((RatFunc.const(1),),)
    with pytest.raises(IndexError):
        udl_blocks(W3, 3)
    with pytest.raises(IndexError):
        udl_blocks(W3, 0)


def test_udl_decompose_examples():
    x, b = udl_decompose(W3)
    assert x == [1 / n(1, 2) + 1 / n(2, 3), 1 / n(1, 3)]
    assert b == [1 / (n(1, 2) * n(1, 3)), -n(1, 2) / n(2, 3), n(1, 3) * n(2, 3)]
    assert udl_decompose(W2) == ([1 / n(1, 2)], [-1 / n(1, 2), n(1, 2)])
    assert udl_decompose(W231)[0] == [1 / n(1, 2), 1 / n(1, 3)]


def test_k_system_examples():
    ks = k_system(W5, (1, 2))
    assert ks.cols == (2, 4, 5)
    assert ks.det_set == {V(1, 2), V(1, 4), V(1, 5)}
    assert ks.kappa_det == -1
    ks = k_system(W2, (1, 2))
    assert ks.K == ((MultiPoly.var(uvar(1, 2)),),) and ks.kappa == ((1,),) and ks.det_set == {V(1, 2)}
    ks = k_system(W3, (1, 2))
    assert ks.cols == (2, 3)
    fm = forward_map(W3)
    subst = {uvar(v.a, v.b): fm[v] for v in free_variables(W3)}
    assert RatFunc(ks.det_K).substitute(subst) == -n(1, 2) * n(1, 3)
    assert ks.kappa_det * ks.det_set_product() == -(n(1, 2) * n(1, 3)).num
    with pytest.raises(ValueError):
        k_system(W3, (1, 1))


def test_inverse_examples():
    inv = inverse_map(W3)
    assert inv[V(2, 3)].expand() == P("u[2,3]")
    assert inv[V(1, 3)].expand() == P("u[1,3]/u[2,3]")
    assert inv[V(1, 2)].expand() == P("u[1,2]*u[2,3]^2/u[1,3] - u[2,3]")
    assert inverse_map(W2)[V(1, 2)].expand() == P("u[1,2]")
    assert parse(inverse_export(W3, expand=True)["n[1,2]"]) == inv[V(1, 2)].expand()


def test_numeric_round_trip_example():
    fm = forward_map(W3)
    pt = {nvar(1, 2): 2, nvar(1, 3): 3, nvar(2, 3): 5}
    u = {v: fm[v].evaluate(pt) for v in free_variables(W3)}
    assert (u[V(1, 2)], u[V(1, 3)], u[V(2, 3)]) == (Fraction(21, 5), 15, 5)
    upt = {uvar(v.a, v.b): x for v, x in u.items()}
    back = {v: f.evaluate(upt) for v, f in inverse_map(W3).items()}
    assert back == {V(1, 2): 2, V(1, 3): 3, V(2, 3): 5}


def test_forward_rejects_poles():
    with pytest.raises(PoleError):
        forward_map(W3)[(1, 2)].evaluate({nvar(1, 2): 1, nvar(1, 3): 1, nvar(2, 3): 0})


def test_jacobian_examples():
    j = jacobian(W3)
    assert j.det_diag == n(1, 3) == j.det_full == j.predicted and j.t_w == 0
    j = jacobian(W2)
    assert j.det_diag == RatFunc.const(1)
    j = jacobian(W231)
    assert j.det_diag == -n(1, 3) == j.predicted and j.t_w == 1


def test_exponent_examples():
    data = exponents(W3, lam=(1, 0, -1), delta=(0, 0, 0))
    assert data.totals() == {V(1, 2): 0, V(1, 3): 1, V(2, 3): 0}
    mu = Fraction(3, 7)
    (e,) = exponents(W2).entries
    assert e.char.evaluate((mu, -mu)) == 2 * mu - 1
    assert exponents(parse_permutation("1,2,3")).entries == ()
    with pytest.raises(ValueError):
        exponents(W3, lam=(1, 2))
    with pytest.raises(ValueError):
        exponents(W3, delta=(0, 1))
    assert str(exponents(W3).entries[0].total) == "λ1-λ2-1"


def test_domain_bound_examples():
    for M in (1, Fraction(3, 2)):
        assert domain_bounds(W2, M).h == (RatFunc.const(M),)
        db = domain_bounds(W3, M)
        assert db.order == (V(1, 2), V(1, 3), V(2, 3))
        assert db.h == (n(2, 3) * (M + n(1, 3)) / n(1, 3), M / n(2, 3), RatFunc.const(M))
        assert domain_bounds(W231, M).h[0] == M / n(1, 3)
    with pytest.raises(ValueError):
        domain_bounds(W3, 0)


# --- properties -----------------------------------------------------------------

@given(permutations(2, 5), st.integers(0, 2**32))
def test_udl_matches_doolittle_oracle(w, seed):
    rng = random.Random(seed)
    fm = forward_map(w)
    x, b = udl_decompose(w)
    pt = rand_point(w, rng)
    try:
        mat = [[e.evaluate(pt) for e in row] for row in fm.wu]
        xv = [f.evaluate(pt) for f in x]
        bv = [f.evaluate(pt) for f in b]
    except PoleError:
        return
    ref = _udl_oracle(mat)
    if ref is None:
        return
    assert (xv, bv) == ref


@given(permutations(2, 5))
def test_udl_matches_closed_forms(w):
    x, b = udl_decompose(w)
    assert x == superdiag_closed_form(w)
    assert b == diag_closed_form(w)
    prod = RatFunc.const(1)
    for f in b:
        prod = prod * f
    assert prod == RatFunc.const(w.sign())
    for i in range(1, w.r):
        blk = udl_blocks(w, i)
        assert blk.det_T == RatFunc(delta_product(w, i) * blk.L_det)


@given(permutations(1, 5))
def test_jacobian_triangular_with_predicted_det(w):
    j = jacobian(w)
    assert j.is_upper_triangular() and j.first_below_diagonal() is None
    assert j.det_diag == j.predicted == j.det_full
    for k, v in enumerate(j.order):
        assert j.matrix[k][k] == diag_derivative_closed_form(w, v)


@given(permutations(2, 5), st.integers(0, 2**32))
def test_inverse_undoes_forward_at_points(w, seed):
    rng = random.Random(seed)
    fm = forward_map(w)
    inv = inverse_map(w)
    for _ in range(3):
        pt = rand_point(w, rng)
        u = {uvar(v.a, v.b): fm[v].evaluate(pt) for v in free_variables(w)}
        for v, f in inv.items():
            assert f.evaluate(u) == pt[nvar(v.a, v.b)]


@given(permutations(2, 4))
def test_inverse_undoes_forward_symbolically(w):
    fm = forward_map(w)
    subst = {uvar(v.a, v.b): fm[v] for v in free_variables(w)}
    for v, f in inverse_map(w).items():
        assert f.expand().substitute(subst) == n(v.a, v.b)


@given(permutations(2, 5))
def test_k_determinant_and_rightmost_column(w):
    fm = forward_map(w)
    subst = {uvar(v.a, v.b): fm[v] for v in free_variables(w)}
    for v in free_variables(w):
        ks = k_system(w, v)
        assert ks.cols[0] == v.b and ks.K[-1][0] == MultiPoly.var(uvar(v.a, v.b))
        assert RatFunc(ks.det_K).substitute(subst) == RatFunc(ks.det_set_product() * ks.kappa_det)
        if v.b == w.r:
            assert fm[v] == rightmost_column_closed_form(w, w.inv(v.a))


@given(permutations(1, 5), st.integers(1, 5))
def test_domain_bound_structure(w, M):
    db = domain_bounds(w, M)
    if not db.order:
        return
    assert db.h[-1] == RatFunc.const(M)
    for j, h in enumerate(db.h):
        for earlier in db.order[: j + 1]:
            assert h.diff(nvar(earlier.a, earlier.b)).is_zero()
        later = {nvar(v.a, v.b) for v in db.order[j + 1:]}
        assert h.variables() <= later
        # denominator a single monomial, numerator multilinear
        assert len(h.den.terms) == 1
        for m in h.num.terms:
            assert all(e <= 1 for _, e in decode(m))


@given(permutations(2, 5), st.sampled_from([(1, 0, -1, 2, 3), (Fraction(1, 2), 0, 0, 0, 0)]))
def test_exponents_are_linear_in_lambda(w, lam):
    lam = lam[: w.r]
    data = exponents(w, lam=lam)
    rho = [Fraction(w.r + 1 - 2 * k, 2) for k in range(1, w.r + 1)]
    for e in data.entries:
        a, b = e.alpha
        assert e.measure == b - a - 1
        assert data.totals()[e.alpha] == (lam[a - 1] - rho[a - 1]) - (lam[b - 1] - rho[b - 1]) + b - a - 1
