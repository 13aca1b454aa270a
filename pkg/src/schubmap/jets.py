"""Truncated Taylor series ("jets") evaluated at many points at once.

A ``Jet`` holds coefficients ``c[0..K]`` with ``f(x0 + h) = sum c[n] h^n``,
stored as an array of shape ``(K + 1, npoints)``. Arithmetic follows the usual
series recurrences, so derivatives of closed-form expressions come out exact
up to rounding, with no finite differences.
"""
from __future__ import annotations

import math

import numpy as np

__all__ = ["Jet", "variable", "smooth_step"]


class Jet:
    __slots__ = ("c",)

    def __init__(self, coeffs):
        self.c = np.asarray(coeffs, dtype=complex)

    @property
    def order(self) -> int:
        return self.c.shape[0] - 1

    @staticmethod
    def constant(value, order: int, npts: int) -> "Jet":
        c = np.zeros((order + 1, npts), dtype=complex)
        c[0] = value
        return Jet(c)

    def derivative(self, n: int) -> np.ndarray:
        """Value of the n-th derivative at the expansion points."""
        return self.c[n] * math.factorial(n)

    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, self.order, self.c.shape[1])

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.c + other.c)
        c = self.c.copy()
        c[0] = c[0] + other
        return Jet(c)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c * other)
        a, b = self.c, other.c
        K = self.order
        out = np.zeros_like(a)
        for n in range(K + 1):
            out[n] = np.sum(a[: n + 1] * b[n::-1], axis=0)
        return Jet(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c / other)
        a, b = self.c, other.c
        out = np.zeros_like(a)
        for n in range(self.order + 1):
            s = a[n] - np.sum(b[1 : n + 1] * out[n - 1 :: -1][:n], axis=0) if n else a[0]
            out[n] = s / b[0]
        return Jet(out)

    def __rtruediv__(self, other):
        return self._lift(other) / self

    def exp(self) -> "Jet":
        a = self.c
        out = np.zeros_like(a)
        out[0] = np.exp(a[0])
        for n in range(1, self.order + 1):
            k = np.arange(1, n + 1).reshape(-1, *([1] * (a.ndim - 1)))
            out[n] = np.sum(k * a[1 : n + 1] * out[n - 1 :: -1][:n], axis=0) / n
        return Jet(out)

    def log(self) -> "Jet":
        a = self.c
        out = np.zeros_like(a)
        out[0] = np.log(a[0])
        for n in range(1, self.order + 1):
            s = a[n]
            if n > 1:
                k = np.arange(1, n).reshape(-1, *([1] * (a.ndim - 1)))
                s = s - np.sum(k * out[1:n] * a[n - 1 : 0 : -1], axis=0) / n
            out[n] = s / a[0]
        return Jet(out)

    def __pow__(self, s):
        """Principal power; the constant term must avoid the branch cut."""
        if isinstance(s, int) and s >= 0:
            out = Jet.constant(1.0, self.order, self.c.shape[1])
            for _ in range(s):
                out = out * self
            return out
        return (self.log() * s).exp()


def variable(x0, order: int) -> Jet:
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    c = np.zeros((order + 1, x0.size), dtype=complex)
    c[0] = x0
    if order >= 1:
        c[1] = 1.0
    return Jet(c)


def _bridge(y: Jet) -> Jet:
    """``exp(-1/y)`` extended by zero for ``y <= 0``."""
    y0 = y.c[0].real
    live = y0 > 1e-3
    safe = Jet(np.where(live, y.c, np.where(np.arange(y.order + 1)[:, None] == 0, 1.0, 0.0)))
    val = (-1.0 / safe).exp()
    return Jet(np.where(live, val.c, 0.0))


def smooth_step(y: Jet) -> Jet:
    """Smooth function equal to 0 for ``y <= 0`` and 1 for ``y >= 1``."""
    a = _bridge(y)
    b = _bridge(1.0 - y)
    out = (a / (a + b)).c
    # complex division need not round a/a to exactly 1; pin the flat parts
    y0 = y.c[0].real
    unit = (np.arange(y.order + 1) == 0)[:, None].astype(complex)
    out = np.where(y0 >= 1, unit, np.where(y0 <= 0, 0.0, out))
    return Jet(out)
