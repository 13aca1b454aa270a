"""Modified Bessel function ``K_nu(x)`` for complex order and real ``x > 0``.

The order is split as ``nu = n + mu`` with ``|Re mu| <= 1/2``. ``K_mu`` and
``K_{mu+1}`` come from Temme's series when ``x < 2`` and from Steed's
continued fraction otherwise; upward recurrence then reaches ``K_nu``.
"""
from __future__ import annotations

import cmath
import math

from scipy.special import rgamma

from .errors import ConvergenceError

__all__ = ["besselk", "rgamma_complex"]

_EPS = 1e-16
_MAXIT = 10_000

# Taylor coefficients of 1/Gamma(1+z) about z = 0
_C = (
    1.0,
    0.5772156649015329,
    -0.6558780715202538,
    -0.0420026350340952,
    0.1665386113822915,
    -0.0421977345555443,
    -0.0096219715278770,
    0.0072189432466630,
    -0.0011651675918591,
    -0.0002152416741149,
    0.0001280502823882,
    -0.0000201348547807,
    -0.0000012504934821,
    0.0000011330272320,
    -0.0000002056338417,
    0.0000000061160950,
    0.0000000050020075,
    -0.0000000011812746,
    0.0000000001043427,
    0.0000000000077823,
    -0.0000000000036968,
    0.0000000000005100,
    -0.0000000000000206,
    -0.0000000000000054,
    0.0000000000000014,
    0.0000000000000001,
)


def rgamma_complex(z) -> complex:
    return complex(rgamma(complex(z)))


def _gammas(mu: complex):
    """``gam1, gam2, 1/Gamma(1+mu), 1/Gamma(1-mu)`` without cancellation."""
    if abs(mu) >= 0.25:
        gp, gm = rgamma_complex(1 + mu), rgamma_complex(1 - mu)
        return (gm - gp) / (2 * mu), (gm + gp) / 2, gp, gm
    # even part and odd part / mu of the series, both in powers of mu^2
    even = odd = 0j
    p = 1 + 0j
    mu2 = mu * mu
    for k in range(0, len(_C), 2):
        even += _C[k] * p
        if k + 1 < len(_C):
            odd += _C[k + 1] * p
        p *= mu2
    gam1 = -odd
    gam2 = even
    return gam1, gam2, gam2 - mu * gam1, gam2 + mu * gam1


def _temme(mu: complex, x: float):
    x2 = 0.5 * x
    pimu = math.pi * mu
    fact = 1.0 if abs(pimu) < _EPS else pimu / cmath.sin(pimu)
    d = -math.log(x2)
    e = mu * d
    fact2 = 1.0 if abs(e) < _EPS else cmath.sinh(e) / e
    gam1, gam2, gampl, gammi = _gammas(mu)
    ff = fact * (gam1 * cmath.cosh(e) + gam2 * fact2 * d)
    total = ff
    e = cmath.exp(e)
    p = 0.5 * e / gampl
    q = 0.5 / (e * gammi)
    c = 1.0
    dd = x2 * x2
    total1 = p
    mu2 = mu * mu
    for i in range(1, _MAXIT):
        ff = (i * ff + p + q) / (i * i - mu2)
        c *= dd / i
        p /= i - mu
        q /= i + mu
        delta = c * ff
        total += delta
        total1 += c * (p - i * ff)
        if abs(delta) < abs(total) * _EPS:
            return total, total1 * 2.0 / x
    raise ConvergenceError("Temme series did not converge")


def _steed(mu: complex, x: float):
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = delh = d
    q1, q2 = 0.0, 1.0
    a1 = 0.25 - mu * mu
    q = c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, _MAXIT):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < _EPS:
            break
    else:
        raise ConvergenceError("continued fraction did not converge")
    h = a1 * h
    kmu = math.sqrt(math.pi / (2.0 * x)) * math.exp(-x) / s
    k1 = kmu * (mu + x + 0.5 - h) / x
    return kmu, k1


def besselk(nu, x: float) -> complex:
    """``K_nu(x)`` for complex ``nu`` and real ``x > 0``."""
    x = float(x)
    if not x > 0:
        raise ValueError("x must be positive")
    nu = complex(nu)
    if nu.real < 0:
        nu = -nu
    n = int(math.floor(nu.real + 0.5))
    mu = nu - n
    kmu, k1 = _temme(mu, x) if x < 2.0 else _steed(mu, x)
    for i in range(1, n + 1):
        kmu, k1 = k1, (mu + i) * (2.0 / x) * k1 + kmu
    return complex(kmu)
