import cmath
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from schubmap.biratmap import forward_map
from schubmap.errors import DivergentRegion, InsufficientRegularization
from schubmap.jacquet import (
    BumpSpec,
    IBPScheme,
    QuadratureParams,
    bessel_kernel,
    gl2_continued,
    gl2_direct,
    gl2_reference,
    gl3_change_of_variables_check,
    is_monomial,
    product_bump,
    tau_factorization_check,
    transformed_integrand,
)
from schubmap.ratfunc import RatFunc, nvar, parse
from schubmap.weyl import VarIndex, all_permutations, longest, parse_permutation

W3 = longest(3)
V = VarIndex


def rel(a, b):
    return abs(complex(a) - complex(b)) / abs(complex(b))


def mp_reference(mu):
    mu = mpmath.mpmathify(mu)
    return complex(2 * mpmath.pi ** mu * mpmath.rgamma(mu) * mpmath.besselk(mu - 0.5, 2 * mpmath.pi))


# --- GL(2) reference and quadrature -------------------------------------------

def test_reference_closed_forms():
    assert rel(gl2_reference(1), math.pi * math.exp(-2 * math.pi)) < 1e-14
    k0 = float(mpmath.besselk(0, 2 * mpmath.pi))
    assert rel(gl2_reference(0.5), 2 * math.sqrt(math.pi) / math.gamma(0.5) * k0) < 1e-13


@pytest.mark.parametrize("mu", [0.25, -0.5, 1.5, 0.7 + 0.4j, -2.3 - 1j, 3])
def test_reference_matches_mpmath(mu):
    assert rel(gl2_reference(mu), mp_reference(mu)) < 1e-12


def test_reference_vanishes_at_gamma_poles():
    # 1/Gamma is entire, so nonpositive integers give zero rather than a pole
    for mu in (0, -1, -2):
        assert abs(gl2_reference(mu)) < 1e-15


@pytest.mark.parametrize("mu", [1, 2, 0.8 + 0.5j])
def test_direct_matches_reference(mu):
    res = gl2_direct(mu)
    assert rel(res.value, gl2_reference(mu)) < 1e-8
    assert res.error >= 0


def test_direct_rejects_divergent_region():
    with pytest.raises(DivergentRegion):
        gl2_direct(0.4)
    with pytest.raises(DivergentRegion):
        gl2_direct(0.5 + 3j)


def test_continued_targets():
    assert rel(gl2_continued(1, 0).value, gl2_direct(1).value) < 1e-8
    assert rel(gl2_continued(0.25, 4).value, gl2_reference(0.25)) < 1e-5
    assert rel(gl2_continued(-0.5, IBPScheme(8)).value, gl2_reference(-0.5)) < 1e-4


def test_continued_needs_enough_depth():
    with pytest.raises(InsufficientRegularization):
        gl2_continued(-0.5, 1)
    with pytest.raises(InsufficientRegularization):
        gl2_continued(0.5, 0)
    gl2_continued(-0.4, 2)


def test_depths_agree_in_overlap():
    mu = 0.75
    vals = [gl2_continued(mu, k).value for k in range(5)]
    for a, b in zip(vals, vals[1:]):
        assert abs(a - b) < 1e-10
    assert abs(vals[0] - gl2_direct(mu).value) < 1e-10


def test_continued_with_other_bump_and_complex_mu():
    mu = 0.3 - 0.6j
    v = gl2_continued(mu, 3, BumpSpec(0.5, 3.0)).value
    assert rel(v, gl2_reference(mu)) < 1e-8


def test_parameter_validation():
    with pytest.raises(ValueError):
        QuadratureParams(epsabs=0)
    with pytest.raises(ValueError):
        QuadratureParams(radius=-1)
    with pytest.raises(ValueError):
        BumpSpec(2, 1)
    with pytest.raises(ValueError):
        IBPScheme(-1)


@pytest.mark.parametrize("k", range(9))
def test_ibp_operator_identity(k):
    s = IBPScheme(k)
    assert s.verify()
    assert s.m[k] == 1 and s.m[0] == (1 if k == 0 else 0)


def test_ibp_coefficients_by_sympy():
    # apply (-x^2/(2 pi i) d/dx)^k to e(1/x) and compare with sum_j q_j x^(j+k) D^j e(1/x)
    import sympy
    x = sympy.symbols("x", positive=True)
    e = sympy.exp(2 * sympy.pi * sympy.I / x)
    for k in range(1, 5):
        s = IBPScheme(k)
        expr = sum(s.m[j] * (sympy.I / (2 * sympy.pi)) ** k * x ** (j + k) * sympy.diff(e, x, j)
                   for j in range(k + 1))
        assert sympy.simplify(expr / e - 1) == 0


@given(st.floats(0, 4))
def test_bump_invariants(x):
    b = BumpSpec()
    val = float(b.phi(x))
    assert 0 <= val <= 1
    if x <= b.r0:
        assert val == 1
    if x >= b.r1:
        assert val == 0


def test_bump_is_even_and_smooth_at_ends():
    b = BumpSpec()
    xs = np.linspace(-3, 3, 61)
    assert np.allclose(b.phi(xs), b.phi(-xs))
    assert 0.999 < b.phi(1.001) <= 1 and 0 <= b.phi(1.999) < 1e-3


# --- descriptors ----------------------------------------------------------------

def test_transformed_integrand_examples():
    d = transformed_integrand(W3, lam=(1, 0, -1), delta=(0, 0, 0))
    assert d.variables == (V(1, 2), V(1, 3), V(2, 3))
    assert d.exponents == {V(1, 2): 0, V(1, 3): 1, V(2, 3): 0}
    assert [v for v, _ in d.reciprocal] == list(d.variables)
    assert d.global_sign == 1
    mu = Fraction(2, 5)
    g2 = transformed_integrand(parse_permutation("2,1"), lam=(mu, -mu))
    assert g2.exponents == {V(1, 2): 2 * mu - 1}
    assert g2.reciprocal == ((V(1, 2), 1),)
    empty = transformed_integrand(parse_permutation("1,2,3"))
    assert empty.variables == () and empty.exponents == {}


def test_transformed_integrand_symbolic_document():
    doc = transformed_integrand(W3).to_document()
    assert doc["weyl"] == "3,2,1"
    assert doc["exponents"]["n[1,2]"] == "λ1-λ2-1"
    assert doc["parity"]["n[1,3]"] == "δ1+δ3"
    assert doc["global_sign"].startswith("parity(")
    assert doc["phase"]["polynomial"] is None


@pytest.mark.parametrize("w", list(all_permutations(3)) + [parse_permutation("2,4,1,3")])
def test_reciprocal_phase_enumerates_free_variables(w):
    d = transformed_integrand(w)
    fm = forward_map(w)
    assert {v for v, _ in d.reciprocal} == set(fm.images)


def test_bessel_kernel_examples():
    k = bessel_kernel(parse_permutation("2,3,1"))
    assert k.poly_phase == parse("-n[1,2]*n[1,3]")
    assert k.poly_coeff == "ζ3"
    assert k.exponents[V(1, 2)] == "ν1-1"
    assert bessel_kernel(W3).poly_phase == parse("n[1,3]*(n[1,2]+n[2,3])/n[2,3] + n[2,3]")
    assert bessel_kernel(parse_permutation("2,1")).poly_phase == RatFunc.var(nvar(1, 2))
    k = bessel_kernel(W3, nu=(1, 2, 3), zeta=(1, -1, 2, 5))
    assert k.exponents == {V(1, 2): 0, V(1, 3): 1, V(2, 3): 2}
    assert k.poly_coeff == 5
    with pytest.raises(ValueError):
        bessel_kernel(W3, nu=(1, 2))
    with pytest.raises(ValueError):
        bessel_kernel(W3, zeta=(1, 2))


@pytest.mark.parametrize("text", ["3,1,2", "4,1,2,3", "2,3,1", "2,3,4,1"])
def test_voronoi_elements_give_monomial_phase(text):
    k = bessel_kernel(parse_permutation(text))
    assert is_monomial(k.poly_phase)


def test_longest_phase_is_not_monomial():
    assert not is_monomial(bessel_kernel(W3).poly_phase)


# --- pointwise factorization and GL(3) ----------------------------------------------

def test_tau_at_fixed_point():
    pt = {nvar(1, 2): Fraction(2), nvar(1, 3): Fraction(3), nvar(2, 3): Fraction(5)}
    res = tau_factorization_check(W3, at=[pt], lam=(0.4 + 0.2j, 0.1, -0.7j))
    assert res.ok and res.points == 1 and res.numeric_max_rel < 1e-12


@pytest.mark.parametrize("text", ["2,1", "2,3,1", "3,1,2", "4,3,2,1", "2,4,1,3", "3,5,1,4,2"])
def test_tau_for_other_elements(text):
    res = tau_factorization_check(parse_permutation(text), points=20, seed=2)
    assert res.ok and res.witness is None
    assert res.numeric_max_rel < 1e-10


def test_gl3_degenerate_G():
    res = gl3_change_of_variables_check(G=0, tau_points=0)
    assert (res.lh, res.rh) == (0.0, 0.0) and res.ok


@pytest.mark.parametrize("text", ["2,1", "2,3,1"])
def test_change_of_variables_small(text):
    res = gl3_change_of_variables_check(w=parse_permutation(text), log2_samples=16, tau_points=5)
    assert res.rel_error < 1e-3, res


def test_product_bump_integral():
    G = product_bump()
    import scipy.integrate as si
    val, _ = si.quad(lambda t: float(G(np.array([[t]]))[0]), -1, 1, points=[-0.9, -0.2, 0.2, 0.9], limit=200)
    assert val == pytest.approx(G.one_dim, rel=1e-10)
    assert G(np.array([[0.1, 0.5, 0.5]]))[0] == 0
    assert G(np.array([[0.5, -0.5, 0.6]]))[0] == pytest.approx(1)


def test_quad_result_is_complex():
    res = gl2_direct(1.5)
    assert isinstance(complex(res), complex)
    assert cmath.isfinite(complex(res))
