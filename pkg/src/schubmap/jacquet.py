"""Jacquet integrals at desk scale.

GL(2): the integral ``∫ e(x) (1 + x^2)^-mu dx`` computed directly for
``Re mu > 1/2`` and continued to ``Re mu > (1 - k)/2`` by splitting off a
bump near the origin and integrating by parts ``k`` times against
``e(1/x)``. A K-Bessel closed form is the reference.

GL(3) and beyond: the integrand in ``n`` coordinates produced by the
birational map (phase, exponents, signs), exact pointwise checks of that
factorization, and a quasi-Monte Carlo check of the measure transformation.
"""
from __future__ import annotations

import cmath
import math
import random
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy.stats import qmc

from .biratmap import (
    domain_bounds,
    exponents,
    forward_map,
    rho_vector,
    udl_decompose,
)
from .errors import DivergentRegion, InsufficientRegularization, PoleError
from .jets import Jet, smooth_step, variable
from .ratfunc import RatFunc, nvar
from .special import besselk, rgamma_complex
from .weyl import Permutation, VarIndex, free_variables

__all__ = [
    "QuadratureParams",
    "QuadResult",
    "BumpSpec",
    "IBPScheme",
    "IntegrandDescriptor",
    "gl2_reference",
    "gl2_direct",
    "gl2_continued",
    "transformed_integrand",
    "bessel_kernel",
    "tau_factorization_check",
    "TauCheck",
    "gl3_change_of_variables_check",
    "GL3Check",
    "product_bump",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class QuadratureParams:
    """Tolerances for the adaptive rules.

    ``radius`` is where the finite oscillatory rule hands over to the
    Fourier-integral rule on the infinite tail.
    """

    epsabs: float = 1e-14
    epsrel: float = 1e-11
    radius: float = 4.0
    limit: int = 400

    def __post_init__(self):
        if not (self.epsabs > 0 and self.epsrel > 0 and self.radius > 0 and self.limit > 0):
            raise ValueError("quadrature tolerances, radius and limit must be positive")


@dataclass(frozen=True)
class QuadResult:
    value: complex
    error: float
    warnings: tuple[str, ...] = ()

    def __complex__(self) -> complex:
        return complex(self.value)


@dataclass(frozen=True)
class BumpSpec:
    """``phi(x) = S((r1 - |x|) / (r1 - r0))`` with ``S`` built from ``exp(-1/t)``."""

    r0: float = 1.0
    r1: float = 2.0

    def __post_init__(self):
        if not 0 < self.r0 < self.r1:
            raise ValueError("need 0 < r0 < r1")

    def phi(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        y = (self.r1 - x) / (self.r1 - self.r0)
        return smooth_step(variable(np.atleast_1d(y), 0)).c[0].real.reshape(np.shape(x))

    def psi_jet(self, x: Jet) -> Jet:
        """Jet of ``1 - phi(1/x)`` for ``x > 0``."""
        return smooth_step((1.0 / x - self.r0) * (1.0 / (self.r1 - self.r0)))


def _oscillatory(f: Callable[[float], complex], a: float, b: float, weight: str, q: QuadratureParams,
                 complex_valued: bool, notes: list[str]) -> tuple[complex, float]:
    """``∫_a^b f(t) w(2 pi t) dt`` with ``w`` in {cos, sin}; ``b`` may be inf.

    QUADPACK warnings are appended to ``notes`` instead of being printed.
    """
    parts = [lambda t: f(t).real]
    if complex_valued:
        parts.append(lambda t: f(t).imag)
    vals, errs = [], []
    for g in parts:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", integrate.IntegrationWarning)
            if math.isinf(b):
                v, e = integrate.quad(g, a, b, weight=weight, wvar=TWO_PI, epsabs=q.epsabs,
                                      limlst=200, limit=q.limit)
            else:
                v, e = integrate.quad(g, a, b, weight=weight, wvar=TWO_PI, epsabs=q.epsabs,
                                      epsrel=q.epsrel, limit=q.limit)
        notes.extend(f"[{a}, {b}]: {str(c.message).split(chr(10))[0].strip()}" for c in caught)
        vals.append(v)
        errs.append(e)
    value = vals[0] + (1j * vals[1] if complex_valued else 0)
    return value, math.hypot(*errs)


def _weight_power(mu: complex):
    """``t -> (1 + t^2)^-mu`` with the principal branch."""
    return lambda t: cmath.exp(-mu * math.log1p(t * t))


# --- GL(2) ------------------------------------------------------------------

def gl2_reference(mu) -> complex:
    """``2 pi^mu / Gamma(mu) * K_{mu - 1/2}(2 pi)``.

    ``1/Gamma`` is entire, so the expression has no poles; at ``mu = 0, -1, ...``
    it is exactly zero.
    """
    mu = complex(mu)
    return 2 * cmath.exp(mu * math.log(math.pi)) * rgamma_complex(mu) * besselk(mu - 0.5, TWO_PI)


def gl2_direct(mu, q: QuadratureParams = QuadratureParams()) -> QuadResult:
    """``∫_R e(x) (1 + x^2)^-mu dx`` for ``Re mu > 1/2``."""
    mu = complex(mu)
    if mu.real <= 0.5:
        raise DivergentRegion(f"direct integral diverges for Re mu = {mu.real} <= 1/2")
    f = _weight_power(mu)
    cplx = mu.imag != 0
    notes: list[str] = []
    head, e1 = _oscillatory(f, 0.0, q.radius, "cos", q, cplx, notes)
    tail, e2 = _oscillatory(f, q.radius, math.inf, "cos", q, cplx, notes)
    return QuadResult(2 * (head + tail), 2 * (e1 + e2), tuple(notes))


@dataclass(frozen=True)
class IBPScheme:
    """Coefficients of ``L^k = sum_j q_j x^(j+k) D^j`` for ``L = -(x^2 / 2 pi i) D``.

    ``q_j = m_j * (i / 2 pi)^k`` with integers ``m_j`` from
    ``m[k+1, j] = (j + k) m[k, j] + m[k, j-1]``. Since ``L e(1/x) = e(1/x)``,
    ``e(1/x) = L^k e(1/x)``.
    """

    k: int
    m: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("depth must be nonnegative")
        object.__setattr__(self, "m", _ibp_integers(self.k))

    def q(self, j: int) -> complex:
        return self.m[j] * (1j / TWO_PI) ** self.k

    def exact_coefficients(self) -> dict[int, str]:
        return {j: f"{self.m[j]}*(i/(2*pi))^{self.k}" for j in range(self.k + 1) if self.m[j]}

    def verify(self) -> bool:
        """Check ``sum_j q_j x^(j+k) D^j e(a/x) = e(a/x)`` symbolically in ``a`` and ``1/x``.

        ``D^j e(a/x) = P_j(a, z) e(a/x)`` with ``z = 1/x``; ``P`` is kept as a
        Laurent polynomial ``{(power of a, power of z): integer}``.
        """
        k = self.k
        P = {(0, 0): 1}
        total: dict[tuple[int, int], int] = {}
        for j in range(k + 1):
            if self.m[j]:
                # q_j x^(j+k) = m_j (-1)^k a^-k z^-(j+k)
                c = self.m[j] * (-1) ** k
                for (pa, pz), v in P.items():
                    key = (pa - k, pz - j - k)
                    total[key] = total.get(key, 0) + c * v
            nxt: dict[tuple[int, int], int] = {}
            for (pa, pz), v in P.items():
                if pz:
                    nxt[(pa, pz + 1)] = nxt.get((pa, pz + 1), 0) - pz * v
                nxt[(pa + 1, pz + 2)] = nxt.get((pa + 1, pz + 2), 0) - v
            P = {key: v for key, v in nxt.items() if v}
        total = {key: v for key, v in total.items() if v}
        return total == {(0, 0): 1}


@lru_cache(maxsize=None)
def _ibp_integers(k: int) -> tuple[int, ...]:
    m = [1]
    for kk in range(k):
        new = [0] * (kk + 2)
        for j in range(kk + 2):
            if j < len(m):
                new[j] += (j + kk) * m[j]
            if j >= 1:
                new[j] += m[j - 1]
        m = new
    return tuple(m)


def _power_coeffs(p: complex, x0: float, n: int) -> list[complex]:
    """Taylor coefficients of ``x^p`` at ``x0 > 0`` up to order ``n``."""
    out = [cmath.exp(p * math.log(x0))]
    for i in range(1, n + 1):
        out.append(out[-1] * (p - i + 1) / (i * x0))
    return out


def _regularized_integrand(mu: complex, scheme: IBPScheme, bump: BumpSpec):
    """``t -> sum_j (-1)^j m_j D^j[x^(j+k) g](1/t) / t^2`` where
    ``g(x) = x^(2mu-2) (1 + x^2)^-mu (1 - phi(1/x))``.

    ``x^(2mu-2+j+k)`` has a closed-form jet, so only the bounded factor
    ``(1 + x^2)^-mu (1 - phi(1/x))`` goes through jet arithmetic.
    """
    k = scheme.k
    signed = [(j, (-1) ** j * scheme.m[j] * math.factorial(j)) for j in range(k + 1) if scheme.m[j]]

    def F(t: float) -> complex:
        x0 = 1.0 / t
        x = variable([x0], k)
        base = ((x * x + 1.0).log() * (-mu)).exp()
        if x0 > 1.0 / bump.r1:
            base = base * bump.psi_jet(x)
        B = base.c[:, 0]
        acc = 0j
        for j, c in signed:
            P = _power_coeffs(2 * mu - 2 + j + k, x0, j)
            acc += c * sum(P[i] * B[j - i] for i in range(j + 1))
        return acc / (t * t)

    return F


def gl2_continued(mu, scheme: IBPScheme | int = 0, bump: BumpSpec = BumpSpec(),
                  q: QuadratureParams = QuadratureParams()) -> QuadResult:
    """Continuation of the GL(2) integral to ``Re mu > (1 - k)/2``.

    The compact piece ``∫ e(x) (1+x^2)^-mu phi(x) dx`` is integrated as is. In
    the rest, ``x -> 1/x`` gives ``∫ e(1/x) g(x) dx`` with ``g`` supported in
    ``|x| <= 1/r0``; ``e(1/x)`` is replaced by ``L^k e(1/x)`` and the ``k``
    derivatives are moved onto ``g``. Derivatives come from Taylor jets.
    """
    if isinstance(scheme, int):
        scheme = IBPScheme(scheme)
    mu = complex(mu)
    k = scheme.k
    if mu.real <= (1 - k) / 2:
        raise InsufficientRegularization(
            f"depth k = {k} reaches Re mu > {(1 - k) / 2}, asked for Re mu = {mu.real}")
    cplx = mu.imag != 0
    base = _weight_power(mu)

    notes: list[str] = []
    inner, e1 = _oscillatory(base, 0.0, bump.r0, "cos", q, cplx, notes)
    ring, e2 = _oscillatory(lambda t: base(t) * float(bump.phi(t)), bump.r0, bump.r1, "cos", q, cplx, notes)
    compact = 2 * (inner + ring)

    F = _regularized_integrand(mu, scheme, bump)
    weight = "cos" if k % 2 == 0 else "sin"
    sign = -1 if (k + 1) // 2 % 2 else 1
    pre = 2 * sign / TWO_PI ** k
    # tolerance on the unscaled integrals
    qf = replace(q, epsabs=q.epsabs / abs(pre))
    near, e3 = _oscillatory(F, bump.r0, bump.r1, weight, qf, cplx, notes)
    far, e4 = _oscillatory(F, bump.r1, math.inf, weight, qf, cplx, notes)
    value = compact + pre * (near + far)
    return QuadResult(value, 2 * (e1 + e2) + abs(pre) * (e3 + e4), tuple(notes))


# --- integrand descriptors --------------------------------------------------

@dataclass(frozen=True)
class IntegrandDescriptor:
    """``∫ e(phase) prod |n_alpha|^(t_alpha) sgn(n_alpha)^(eta_alpha) dn`` up to a global sign."""

    w: Permutation
    variables: tuple[VarIndex, ...]
    reciprocal: tuple[tuple[VarIndex, object], ...]
    poly_phase: RatFunc | None
    poly_coeff: object
    exponents: dict
    parity: dict
    global_sign: object

    def to_document(self) -> dict:
        def s(x):
            if isinstance(x, complex):
                return f"{x.real:.15g}{x.imag:+.15g}i"
            if isinstance(x, float):
                return f"{x:.15g}"
            return str(x)

        name = lambda v: f"n[{v.a},{v.b}]"
        return {
            "weyl": self.w.one_line(),
            "variables": [name(v) for v in self.variables],
            "phase": {
                "reciprocal": [{"var": name(v), "coeff": s(c)} for v, c in self.reciprocal],
                "polynomial": None if self.poly_phase is None else str(self.poly_phase),
                "polynomial_coeff": None if self.poly_phase is None else s(self.poly_coeff),
            },
            "exponents": {name(v): s(t) for v, t in self.exponents.items()},
            "parity": {name(v): s(e) for v, e in self.parity.items()},
            "global_sign": s(self.global_sign),
        }


def transformed_integrand(w: Permutation, lam: Sequence | None = None,
                          delta: Sequence[int] | None = None) -> IntegrandDescriptor:
    """Jacquet integrand after the change of variables.

    Without ``lam`` the exponents are linear forms in ``λ``; without ``delta``
    the parities are listed as sums of ``δ`` indices and the global sign as a
    parity vector.
    """
    ex = exponents(w, lam, delta)
    variables = tuple(free_variables(w, "square"))
    expo = {e.alpha: (e.total if lam is None else e.total.evaluate(ex.lam)) for e in ex.entries}
    if delta is None:
        parity = {e.alpha: "+".join(f"δ{k}" for k in e.eta) for e in ex.entries}
        gsign = "parity(" + ",".join(map(str, ex.sign_parity)) + ")"
    else:
        parity = {e.alpha: e.eta_value(ex.delta) for e in ex.entries}
        gsign = ex.global_sign()
    return IntegrandDescriptor(w, variables, tuple((v, 1) for v in variables), None, None,
                               expo, parity, gsign)


def _superdiagonal_phase(w: Permutation) -> RatFunc:
    images = forward_map(w).images
    f = RatFunc.const(0)
    for l in range(1, w.r):
        if VarIndex(l, l + 1) in images:
            f = f + images[VarIndex(l, l + 1)]
    return f


def bessel_kernel(w: Permutation, nu: Sequence | None = None, zeta: Sequence | None = None) -> IntegrandDescriptor:
    """Bessel integrand ``prod |n_l|^(nu_l - 1) e(zeta_{d+1} f + sum zeta_l / n_l)``.

    ``f`` is the sum of the superdiagonal entries of ``wu`` written in ``n``.
    """
    variables = tuple(free_variables(w, "square"))
    d = len(variables)
    if nu is not None and len(nu) != d:
        raise ValueError(f"nu has length {len(nu)}, expected {d}")
    if zeta is not None and len(zeta) != d + 1:
        raise ValueError(f"zeta has length {len(zeta)}, expected {d + 1}")
    zl = [f"ζ{l}" for l in range(1, d + 2)] if zeta is None else list(zeta)
    if nu is None:
        expo = {v: f"ν{l}-1" for l, v in enumerate(variables, 1)}
    else:
        expo = {v: nu[l] - 1 for l, v in enumerate(variables)}
    return IntegrandDescriptor(
        w,
        variables,
        tuple(zip(variables, zl[:d])),
        _superdiagonal_phase(w),
        zl[d],
        expo,
        {v: 0 for v in variables},
        1,
    )


def is_monomial(f: RatFunc) -> bool:
    return len(f.num.terms) == 1 and len(f.den.terms) == 1


# --- pointwise factorization ------------------------------------------------

@dataclass(frozen=True)
class TauCheck:
    points: int
    phase_ok: bool
    magnitude_ok: bool
    constant_ok: bool
    sign_ok: bool
    numeric_max_rel: float
    witness: dict | None = None

    @property
    def ok(self) -> bool:
        return self.phase_ok and self.magnitude_ok and self.constant_ok and self.sign_ok


def _random_point(rng: random.Random, variables) -> dict[int, Fraction]:
    out = {}
    for v in variables:
        num = 0
        while num == 0:
            num = rng.randint(-40, 40)
        out[nvar(v.a, v.b)] = Fraction(num, rng.randint(1, 25))
    return out


def _int_power(x: Fraction, e) -> Fraction:
    e = Fraction(e)
    if e.denominator != 1:
        raise ValueError("exact check needs an integer exponent")
    return x ** int(e)


def tau_factorization_check(w: Permutation, points: int = 100, seed: int = 0,
                            lam: Sequence | None = None, delta: Sequence[int] | None = None,
                            at: Sequence[dict] | None = None) -> TauCheck:
    """Compare ``tau(wu)`` written through the UDL factors with the ``n`` form.

    Exact parts at each rational point: the phase ``sum x_{i,i+1} = sum 1/n``;
    ``|b_jj| = prod |n_alpha|^(e_alpha,j)`` with ``e`` read off the character
    exponents; the constant exponents equal ``-sum coeff * rho`` (squared to
    stay rational); and the sign identity for every ``delta`` in ``{0,1}^r``.
    A floating point comparison of the full factor at ``lam`` follows.
    """
    r = w.r
    lam = tuple(lam) if lam is not None else tuple(complex(0.3 * k, 0.1 * k) for k in range(r, 0, -1))
    ex = exponents(w)
    rho = rho_vector(r)
    fm = forward_map(w)
    superdiag, diag = udl_decompose(w, fm)
    variables = [e.alpha for e in ex.entries]
    rng = random.Random(seed)
    pts = list(at) if at is not None else [_random_point(rng, variables) for _ in range(points)]
    deltas = [tuple((m >> j) & 1 for j in range(r)) for m in range(2 ** r)]
    if delta is not None:
        deltas = [tuple(int(d) % 2 for d in delta)]

    const_ok = all(
        e.char.const == -sum(c * p for c, p in zip(e.char.coeffs, rho)) for e in ex.entries)
    phase_ok = mag_ok = sign_ok = True
    worst = 0.0
    witness = None
    for P in pts:
        try:
            xs = [x.evaluate(P) for x in superdiag]
            bs = [b.evaluate(P) for b in diag]
        except PoleError:
            continue
        n = {e.alpha: P[nvar(e.alpha.a, e.alpha.b)] for e in ex.entries}
        if sum(xs, Fraction(0)) != sum((1 / v for v in n.values()), Fraction(0)):
            phase_ok = False
            witness = witness or {"part": "phase", "point": {str(k): str(v) for k, v in n.items()}}
        for j in range(1, r + 1):
            rhs = Fraction(1)
            for e in ex.entries:
                rhs *= _int_power(abs(n[e.alpha]), -e.char.coeffs[j - 1])
            if abs(bs[j - 1]) != rhs:
                mag_ok = False
                witness = witness or {"part": "magnitude", "j": j}
        for dl in deltas:
            lhs = 1
            for j in range(r):
                if dl[j] and bs[j] < 0:
                    lhs = -lhs
            rhs = ex.global_sign(dl)
            for e in ex.entries:
                if e.eta_value(dl) and n[e.alpha] < 0:
                    rhs = -rhs
            if lhs != rhs:
                sign_ok = False
                witness = witness or {"part": "sign", "delta": dl}
        # numeric: full character value on both sides
        dl = deltas[-1]
        lhs = cmath.exp(2j * math.pi * float(sum(xs, Fraction(0))))
        for j in range(r):
            b = float(bs[j])
            lhs *= (-1 if dl[j] and b < 0 else 1) * cmath.exp(-(lam[j] - float(rho[j])) * math.log(abs(b)))
        rhs = cmath.exp(2j * math.pi * sum(1 / float(v) for v in n.values())) * ex.global_sign(dl)
        for e in ex.entries:
            v = float(n[e.alpha])
            rhs *= (-1 if e.eta_value(dl) and v < 0 else 1) * cmath.exp(complex(e.char.evaluate(lam)) * math.log(abs(v)))
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    return TauCheck(len(pts), phase_ok, mag_ok, const_ok, sign_ok, worst, witness)


# --- change of variables ----------------------------------------------------

def product_bump(lo: float = 0.2, hi: float = 0.9, ramp: float = 0.2):
    """``G(u) = prod g(u_k)`` where ``g`` is supported on ``lo < |t| < hi``.

    ``g`` rises smoothly over ``[lo, lo + ramp]``, is 1 on the plateau and
    falls over ``[hi - ramp, hi]``.
    """

    def g(t):
        a = np.abs(np.asarray(t, dtype=float)).ravel()
        up = smooth_step(variable((a - lo) / ramp, 0)).c[0].real
        down = smooth_step(variable((hi - a) / ramp, 0)).c[0].real
        return (up * down).reshape(np.shape(t))

    def G(U: np.ndarray) -> np.ndarray:
        return np.prod(g(U), axis=-1)

    one_dim, _ = integrate.quad(lambda t: float(g(t)), lo, hi, epsabs=1e-15, epsrel=1e-13,
                                points=[lo + ramp, hi - ramp])
    G.one_dim = 2 * one_dim
    return G


@dataclass(frozen=True)
class GL3Check:
    lh: float
    rh: float
    rh_error: float
    rel_error: float
    tau: TauCheck | None
    samples: int
    seed: int

    @property
    def ok(self) -> bool:
        tau_ok = self.tau is None or self.tau.ok
        return tau_ok and (self.rel_error <= 1e-3 if self.lh else self.rh == 0)


def gl3_change_of_variables_check(lam: Sequence | None = None, q: QuadratureParams = QuadratureParams(),
                                  seed: int = 0, *, w: Permutation | None = None, M=1,
                                  log2_samples: int = 22, G=None, tau_points: int = 100) -> GL3Check:
    """``∫ G(u) du`` against ``∫ G(R(n)) prod |n|^(b-a-1) dn`` over the nested region.

    The right side maps scrambled Sobol points in the unit cube onto the region
    cut out by the domain bounds, innermost variable last, with weight
    ``prod 2 h_j``. ``G`` defaults to a product of bumps on ``0.2 < |u| < 0.9``;
    passing ``G = 0`` gives the degenerate case. The pointwise factorization
    check at ``lam`` runs alongside.
    """
    w = Permutation.parse("3,2,1") if w is None else w
    tau = tau_factorization_check(w, tau_points, seed, lam) if tau_points else None
    if isinstance(G, (int, float)) and G == 0:
        return GL3Check(0.0, 0.0, 0.0, 0.0, tau, 0, seed)
    G = product_bump() if G is None else G
    db = domain_bounds(w, M)
    fm = forward_map(w)
    order = db.order
    d = len(order)
    if d == 0:
        return GL3Check(1.0, 1.0, 0.0, 0.0, tau, 0, seed)
    lh = G.one_dim ** d if hasattr(G, "one_dim") else float("nan")
    reps = 8
    estimates = []
    for rep in range(reps):
        S = qmc.Sobol(d, scramble=True, seed=np.random.default_rng([seed, rep])).random_base2(log2_samples - 3)
        N: dict[int, np.ndarray] = {}
        weight = np.ones(S.shape[0])
        with np.errstate(divide="ignore", invalid="ignore"):
            for j in range(d - 1, -1, -1):
                v = order[j]
                h = np.asarray(db.h[j].evaluate({k: np.abs(x) for k, x in N.items()}) * np.ones(S.shape[0]), dtype=float)
                N[nvar(v.a, v.b)] = h * (2 * S[:, j] - 1)
                weight = weight * 2 * h
            U = np.stack([np.asarray(fm.images[v].evaluate(N) * np.ones(S.shape[0]), dtype=float)
                          for v in order], axis=-1)
            meas = np.ones(S.shape[0])
            for v in order:
                meas = meas * np.abs(N[nvar(v.a, v.b)]) ** (v.b - v.a - 1)
            vals = G(U) * meas * weight
        vals = np.where(np.isfinite(vals), vals, 0.0)
        estimates.append(float(np.mean(vals)))
    rh = float(np.mean(estimates))
    err = float(np.std(estimates, ddof=1) / math.sqrt(reps))
    rel = abs(lh - rh) / abs(lh) if lh else abs(rh)
    return GL3Check(lh, rh, err, rel, tau, reps * 2 ** (log2_samples - 3), seed)
