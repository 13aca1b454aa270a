"""Exact multivariate polynomials and rational functions over the integers.

Variables are the coordinates ``n[a,b]`` and ``u[a,b]`` with ``1 <= a < b <= 12``.
A monomial is packed into one Python int holding a 16-bit exponent field per
variable, so multiplying monomials is integer addition.

>>> x, y = nvar(1, 2), nvar(2, 3)
>>> p = (MultiPoly.var(x) + MultiPoly.var(y)) ** 2
>>> str(p)
'n[1,2]^2 + 2*n[1,2]*n[2,3] + n[2,3]^2'
>>> f = RatFunc(p, MultiPoly.var(y))
>>> str(f.diff(x))
'(2*n[1,2] + 2*n[2,3])/n[2,3]'
"""
from __future__ import annotations

import math
import re
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping

from .errors import NotExactDivision, ParseError, PoleError

__all__ = [
    "MAX_R",
    "MultiPoly",
    "RatFunc",
    "Factored",
    "nvar",
    "uvar",
    "var_info",
    "var_name",
    "parse",
    "det",
    "determinant",
    "PolyMinors",
    "poly_arith",
    "ratfunc_arith",
    "differentiate",
    "evaluate",
]

MAX_R = 12
BITS = 16
MASK = (1 << BITS) - 1
_PER_KIND = MAX_R * (MAX_R - 1) // 2
NSLOTS = 2 * _PER_KIND
_GUARD = sum(1 << (BITS * k + BITS - 1) for k in range(NSLOTS))
_KINDS = ("n", "u")


def _slot(kind: int, a: int, b: int) -> int:
    if not (1 <= a < b <= MAX_R):
        raise ValueError(f"variable index ({a},{b}) out of range")
    return kind * _PER_KIND + (b - 1) * (b - 2) // 2 + (a - 1)


def nvar(a: int, b: int) -> int:
    """Slot id of ``n[a,b]``."""
    return _slot(0, a, b)


def uvar(a: int, b: int) -> int:
    """Slot id of ``u[a,b]``."""
    return _slot(1, a, b)


def _build_info():
    out = [None] * NSLOTS
    for kind in (0, 1):
        for b in range(2, MAX_R + 1):
            for a in range(1, b):
                out[_slot(kind, a, b)] = (_KINDS[kind], a, b)
    return tuple(out)


_INFO = _build_info()


def var_info(v: int) -> tuple[str, int, int]:
    """Return ``(kind, a, b)`` for a slot id."""
    return _INFO[v]


def var_name(v: int) -> str:
    k, a, b = _INFO[v]
    return f"{k}[{a},{b}]"


# --- packed monomials -------------------------------------------------------

def mono_of(v: int, e: int = 1) -> int:
    return e << (BITS * v)


@lru_cache(maxsize=1 << 16)
def decode(m: int) -> tuple[tuple[int, int], ...]:
    """Sparse ``((slot, exp), ...)`` view of a packed monomial."""
    out = []
    slot = 0
    while m:
        low = m & 0xFFFFFFFFFFFFFFFF
        if low == 0:
            m >>= 64
            slot += 4
            continue
        e = m & MASK
        if e:
            out.append((slot, e))
        m >>= BITS
        slot += 1
    return tuple(out)


def encode(pairs: Iterable[tuple[int, int]]) -> int:
    m = 0
    for v, e in pairs:
        if e < 0 or e > MASK >> 1:
            raise OverflowError("exponent out of range")
        m += e << (BITS * v)
    return m


def mono_divides(d: int, m: int) -> bool:
    return ((m | _GUARD) - d) & _GUARD == _GUARD


def mono_degree(m: int) -> int:
    return sum(e for _, e in decode(m))


def mono_gcd(m1: int, m2: int) -> int:
    if m1 == 0 or m2 == 0:
        return 0
    d2 = dict(decode(m2))
    return encode((v, min(e, d2[v])) for v, e in decode(m1) if v in d2)


def mono_lcm(m1: int, m2: int) -> int:
    d = dict(decode(m1))
    for v, e in decode(m2):
        if e > d.get(v, 0):
            d[v] = e
    return encode(d.items())


def _sort_key(v: int) -> int:
    # canonical variable order: kind, then column, then row
    k, a, b = _INFO[v]
    return (_KINDS.index(k) * 100 + b) * 100 + a


def _display_key(m: int):
    pairs = sorted(decode(m), key=lambda p: _sort_key(p[0]))
    deg = sum(e for _, e in pairs)
    return (deg, tuple((-_sort_key(v), e) for v, e in pairs))


def mono_str(m: int) -> str:
    parts = []
    for v, e in sorted(decode(m), key=lambda p: _sort_key(p[0])):
        parts.append(var_name(v) if e == 1 else f"{var_name(v)}^{e}")
    return "*".join(parts)


# --- polynomials ------------------------------------------------------------

class MultiPoly:
    """Sparse polynomial with integer coefficients, stored as ``{monomial: coeff}``."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[int, int] | None = None):
        self.terms: dict[int, int] = {m: c for m, c in (terms or {}).items() if c}

    @classmethod
    def _raw(cls, terms: dict[int, int]) -> "MultiPoly":
        p = cls.__new__(cls)
        p.terms = terms
        return p

    @classmethod
    def const(cls, c: int) -> "MultiPoly":
        return cls._raw({0: int(c)} if c else {})

    @classmethod
    def var(cls, v: int) -> "MultiPoly":
        return cls._raw({mono_of(v): 1})

    @classmethod
    def monomial(cls, m: int, c: int = 1) -> "MultiPoly":
        return cls._raw({m: c} if c else {})

    @staticmethod
    def lift(x) -> "MultiPoly":
        if isinstance(x, MultiPoly):
            return x
        if isinstance(x, int):
            return MultiPoly.const(x)
        raise TypeError(f"cannot lift {type(x).__name__} to a polynomial")

    # predicates
    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and 0 in self.terms)

    def constant_value(self) -> int:
        return self.terms.get(0, 0)

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    # arithmetic
    def __add__(self, other):
        if isinstance(other, int):
            other = MultiPoly.const(other)
        elif not isinstance(other, MultiPoly):
            return NotImplemented
        if len(other.terms) > len(self.terms):
            big, small = other.terms, self.terms
        else:
            big, small = self.terms, other.terms
        out = dict(big)
        for m, c in small.items():
            s = out.get(m, 0) + c
            if s:
                out[m] = s
            else:
                del out[m]
        return MultiPoly._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly._raw({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, int):
            other = MultiPoly.const(other)
        elif not isinstance(other, MultiPoly):
            return NotImplemented
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m, 0) - c
            if s:
                out[m] = s
            else:
                del out[m]
        return MultiPoly._raw(out)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            if other == 0:
                return MultiPoly()
            return MultiPoly._raw({m: c * other for m, c in self.terms.items()})
        if not isinstance(other, MultiPoly):
            return NotImplemented
        a, b = self.terms, other.terms
        if len(a) < len(b):
            a, b = b, a
        if len(b) == 1:
            (m2, c2), = b.items()
            return MultiPoly._raw({m + m2: c * c2 for m, c in a.items()})
        out: dict[int, int] = {}
        get = out.get
        for m2, c2 in b.items():
            for m1, c1 in a.items():
                k = m1 + m2
                out[k] = get(k, 0) + c1 * c2
        return MultiPoly._raw({m: c for m, c in out.items() if c})

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            raise ValueError("negative power of a polynomial")
        result = MultiPoly.const(1)
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, int):
            other = MultiPoly.const(other)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def shift(self, m: int, c: int = 1) -> "MultiPoly":
        """Multiply by the monomial ``c * m``."""
        return MultiPoly._raw({k + m: v * c for k, v in self.terms.items()})

    # structure
    def variables(self) -> set[int]:
        out: set[int] = set()
        for m in self.terms:
            out.update(v for v, _ in decode(m))
        return out

    def degree_in(self, v: int) -> int:
        sh = BITS * v
        return max(((m >> sh) & MASK for m in self.terms), default=0)

    def total_degree(self) -> int:
        return max((mono_degree(m) for m in self.terms), default=0)

    def content(self) -> int:
        g = 0
        for c in self.terms.values():
            g = math.gcd(g, c)
        return g

    def mono_content(self) -> int:
        """Largest monomial dividing every term."""
        it = iter(self.terms)
        try:
            g = next(it)
        except StopIteration:
            return 0
        for m in it:
            if g == 0:
                break
            g = mono_gcd(g, m)
        return g

    def lead(self) -> tuple[int, int]:
        m = max(self.terms)
        return m, self.terms[m]

    def divexact(self, other: "MultiPoly") -> "MultiPoly":
        """Exact quotient ``self / other``; raises ``NotExactDivision`` otherwise."""
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        lm, lc = other.lead()
        if len(other.terms) == 1:
            out = {}
            for m, c in self.terms.items():
                if not mono_divides(lm, m) or c % lc:
                    raise NotExactDivision("not divisible")
                out[m - lm] = c // lc
            return MultiPoly._raw(out)
        rem = dict(self.terms)
        quot: dict[int, int] = {}
        while rem:
            m = max(rem)
            c = rem[m]
            if not mono_divides(lm, m) or c % lc:
                raise NotExactDivision("not divisible")
            qm, qc = m - lm, c // lc
            quot[qm] = qc
            for om, oc in other.terms.items():
                k = om + qm
                s = rem.get(k, 0) - oc * qc
                if s:
                    rem[k] = s
                else:
                    rem.pop(k, None)
        return MultiPoly._raw(quot)

    def diff(self, v: int) -> "MultiPoly":
        sh = BITS * v
        unit = 1 << sh
        out = {}
        for m, c in self.terms.items():
            e = (m >> sh) & MASK
            if e:
                out[m - unit] = c * e
        return MultiPoly._raw(out)

    def evaluate(self, values: Mapping[int, object]):
        """Evaluate at ``values`` (slot -> number or numpy array)."""
        if values and all(isinstance(x, (int, Fraction)) for x in values.values()):
            return self._evaluate_exact(values)
        total = 0
        cache: dict[tuple[int, int], object] = {}
        for m, c in self.terms.items():
            t = c
            for v, e in decode(m):
                key = (v, e)
                p = cache.get(key)
                if p is None:
                    try:
                        x = values[v]
                    except KeyError:
                        raise KeyError(f"no value for {var_name(v)}") from None
                    p = x if e == 1 else x**e
                    cache[key] = p
                t = t * p
            total = total + t
        return total

    def _evaluate_exact(self, values: Mapping[int, object]) -> Fraction:
        # clear denominators so the inner loop is integer arithmetic
        degs: dict[int, int] = {}
        for m in self.terms:
            for v, e in decode(m):
                if e > degs.get(v, 0):
                    degs[v] = e
        nums, dens = {}, {}
        for v in degs:
            try:
                x = Fraction(values[v])
            except KeyError:
                raise KeyError(f"no value for {var_name(v)}") from None
            nums[v], dens[v] = x.numerator, x.denominator
        ppow: dict[tuple[int, int], int] = {}
        qpow: dict[tuple[int, int], int] = {}
        total = 0
        for m, c in self.terms.items():
            t = c
            seen = dict(decode(m))
            for v, d in degs.items():
                e = seen.get(v, 0)
                if e:
                    k = (v, e)
                    if k not in ppow:
                        ppow[k] = nums[v] ** e
                    t *= ppow[k]
                if d - e:
                    k = (v, d - e)
                    if k not in qpow:
                        qpow[k] = dens[v] ** (d - e)
                    t *= qpow[k]
            total += t
        scale = 1
        for v, d in degs.items():
            scale *= dens[v] ** d
        return Fraction(total, scale)

    def substitute(self, mapping: Mapping[int, "RatFunc"]) -> "RatFunc":
        total = RatFunc.const(0)
        powers: dict[tuple[int, int], RatFunc] = {}
        for m, c in self.terms.items():
            t = RatFunc.const(c)
            for v, e in decode(m):
                if v in mapping:
                    key = (v, e)
                    if key not in powers:
                        powers[key] = RatFunc.lift(mapping[v]) ** e
                    t = t * powers[key]
                else:
                    t = t * RatFunc(MultiPoly.monomial(mono_of(v, e)))
            total = total + t
        return total

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda mc: _display_key(mc[0]), reverse=True)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        out = []
        for i, (m, c) in enumerate(self.sorted_terms()):
            sign = "-" if c < 0 else "+"
            a = abs(c)
            if m == 0:
                body = str(a)
            elif a == 1:
                body = mono_str(m)
            else:
                body = f"{a}*{mono_str(m)}"
            if i == 0:
                out.append(body if sign == "+" else "-" + body)
            else:
                out.append(f" {sign} {body}")
        return "".join(out)

    def __repr__(self) -> str:
        return f"MultiPoly({self})"

    def tex(self) -> str:
        return _tex_poly(self)


# --- rational functions -----------------------------------------------------

class RatFunc:
    """Quotient of two ``MultiPoly`` in lowest monomial and integer terms.

    Only the common monomial factor and the common integer content are
    cancelled. Equality is decided by cross multiplication, so it is exact
    regardless of normal form.
    """

    __slots__ = ("num", "den")
    __hash__ = None

    def __init__(self, num, den=None):
        num = MultiPoly.lift(num)
        den = MultiPoly.const(1) if den is None else MultiPoly.lift(den)
        if den.is_zero():
            raise PoleError("zero denominator")
        if num.is_zero():
            self.num, self.den = num, MultiPoly.const(1)
            return
        if not den.is_constant() or den.constant_value() != 1:
            g = mono_gcd(num.mono_content(), den.mono_content())
            if g:
                num = MultiPoly._raw({m - g: c for m, c in num.terms.items()})
                den = MultiPoly._raw({m - g: c for m, c in den.terms.items()})
            k = math.gcd(num.content(), den.content())
            if den.lead()[1] < 0:
                k = -k
            if k != 1:
                num = MultiPoly._raw({m: c // k for m, c in num.terms.items()})
                den = MultiPoly._raw({m: c // k for m, c in den.terms.items()})
        self.num, self.den = num, den

    @classmethod
    def _raw(cls, num, den):
        r = cls.__new__(cls)
        r.num, r.den = num, den
        return r

    @classmethod
    def const(cls, c) -> "RatFunc":
        if isinstance(c, Fraction):
            return cls(MultiPoly.const(c.numerator), MultiPoly.const(c.denominator))
        return cls._raw(MultiPoly.const(int(c)), MultiPoly.const(1))

    @classmethod
    def var(cls, v: int) -> "RatFunc":
        return cls._raw(MultiPoly.var(v), MultiPoly.const(1))

    @staticmethod
    def lift(x) -> "RatFunc":
        if isinstance(x, RatFunc):
            return x
        if isinstance(x, MultiPoly):
            return RatFunc._raw(x, MultiPoly.const(1))
        if isinstance(x, (int, Fraction)):
            return RatFunc.const(x)
        raise TypeError(f"cannot lift {type(x).__name__} to a rational function")

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_polynomial(self) -> bool:
        return self.den.is_constant() and self.den.constant_value() == 1

    def is_laurent(self) -> bool:
        """True when the denominator is a single monomial."""
        return self.den.is_monomial()

    def is_constant(self) -> bool:
        return self.num.is_constant() and self.den.is_constant()

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError("not a constant")
        return Fraction(self.num.constant_value(), self.den.constant_value())

    def variables(self) -> set[int]:
        return self.num.variables() | self.den.variables()

    def __add__(self, other):
        try:
            other = RatFunc.lift(other)
        except TypeError:
            return NotImplemented
        if other.num.is_zero():
            return self
        if self.num.is_zero():
            return other
        d1, d2 = self.den, other.den
        if d1 == d2:
            return RatFunc(self.num + other.num, d1)
        if d1.is_monomial() and d2.is_monomial():
            (m1, c1), = d1.terms.items()
            (m2, c2), = d2.terms.items()
            lm = mono_lcm(m1, m2)
            lc = c1 * c2 // math.gcd(c1, c2)
            num = self.num.shift(lm - m1, lc // c1) + other.num.shift(lm - m2, lc // c2)
            return RatFunc(num, MultiPoly.monomial(lm, lc))
        return RatFunc(self.num * d2 + other.num * d1, d1 * d2)

    __radd__ = __add__

    def __neg__(self):
        return RatFunc._raw(-self.num, self.den)

    def __sub__(self, other):
        try:
            other = RatFunc.lift(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return RatFunc.lift(other) - self

    def __mul__(self, other):
        try:
            other = RatFunc.lift(other)
        except TypeError:
            return NotImplemented
        if self.num.is_zero() or other.num.is_zero():
            return RatFunc.const(0)
        return RatFunc(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def inv(self) -> "RatFunc":
        if self.num.is_zero():
            raise PoleError("inverse of zero")
        return RatFunc(self.den, self.num)

    def __truediv__(self, other):
        try:
            other = RatFunc.lift(other)
        except TypeError:
            return NotImplemented
        return self * other.inv()

    def __rtruediv__(self, other):
        return RatFunc.lift(other) * self.inv()

    def __pow__(self, e: int):
        if e < 0:
            return self.inv() ** (-e)
        return RatFunc._raw(self.num**e, self.den**e) if e != 1 else self

    def __eq__(self, other):
        try:
            other = RatFunc.lift(other)
        except TypeError:
            return NotImplemented
        if self.den == other.den:
            return self.num == other.num
        return self.num * other.den == other.num * self.den

    def diff(self, v: int) -> "RatFunc":
        dn = self.num.diff(v)
        dd = self.den.diff(v)
        if dd.is_zero():
            return RatFunc(dn, self.den)
        if self.den.is_monomial():
            # (p/(c m))' = (p' m - p m') / (c m^2) and m'/m is e/x
            (m, c), = self.den.terms.items()
            e = (m >> (BITS * v)) & MASK
            num = dn.shift(mono_of(v)) - self.num * e
            return RatFunc(num, MultiPoly.monomial(m + mono_of(v), c))
        return RatFunc(dn * self.den - self.num * dd, self.den * self.den)

    def evaluate(self, values: Mapping[int, object]):
        d = self.den.evaluate(values)
        n = self.num.evaluate(values)
        if isinstance(d, (int, Fraction, float, complex)) and d == 0:
            raise PoleError("denominator vanishes at this point")
        if isinstance(n, (int, Fraction)) and isinstance(d, (int, Fraction)):
            return Fraction(n) / d
        return n / d

    def substitute(self, mapping: Mapping[int, "RatFunc"]) -> "RatFunc":
        return self.num.substitute(mapping) / self.den.substitute(mapping)

    def reduced(self) -> "RatFunc":
        """Try to cancel the denominator (or numerator) exactly."""
        if self.den.is_monomial() or self.num.is_zero():
            return self
        try:
            return RatFunc(self.num.divexact(self.den))
        except NotExactDivision:
            pass
        try:
            q = self.den.divexact(self.num)
            return RatFunc(MultiPoly.const(1), q)
        except NotExactDivision:
            return self

    def __str__(self) -> str:
        if self.is_polynomial():
            return str(self.num)
        ns = str(self.num)
        if len(self.num) > 1:
            ns = f"({ns})"
        d = self.den
        ds = str(d)
        simple = False
        if len(d) == 1:
            (m, c), = d.terms.items()
            simple = c == 1 and len(decode(m)) == 1 and decode(m)[0][1] == 1
            simple = simple or (m == 0 and c > 0)
        if not simple:
            ds = f"({ds})"
        return f"{ns}/{ds}"

    def __repr__(self) -> str:
        return f"RatFunc({self})"

    def tex(self) -> str:
        if self.is_polynomial():
            return _tex_poly(self.num)
        return r"\frac{%s}{%s}" % (_tex_poly(self.num), _tex_poly(self.den))


def _tex_mono(m: int) -> str:
    out = []
    for v, e in sorted(decode(m), key=lambda p: _sort_key(p[0])):
        k, a, b = _INFO[v]
        out.append(f"{k}_{{{a}{b}}}" + (f"^{{{e}}}" if e != 1 else ""))
    return " ".join(out)


def _tex_poly(p: MultiPoly) -> str:
    if p.is_zero():
        return "0"
    out = []
    for i, (m, c) in enumerate(p.sorted_terms()):
        a = abs(c)
        body = str(a) if m == 0 else (_tex_mono(m) if a == 1 else f"{a} {_tex_mono(m)}")
        if i == 0:
            out.append(("-" if c < 0 else "") + body)
        else:
            out.append((" - " if c < 0 else " + ") + body)
    return "".join(out)


# --- factored products ------------------------------------------------------

def _normalize_factor(p: MultiPoly) -> tuple[int, MultiPoly]:
    k = p.content()
    if p.lead()[1] < 0:
        k = -k
    if k != 1:
        p = MultiPoly._raw({m: c // k for m, c in p.terms.items()})
    return k, p


class Factored:
    """A product ``coeff * prod(f ** e)`` of polynomial factors.

    Monomial factors are split into single variables and every other factor
    is made primitive with a positive leading coefficient, so repeated
    factors merge.
    """

    __slots__ = ("coeff", "factors")

    def __init__(self, coeff=1, factors: Mapping[MultiPoly, int] | None = None):
        self.coeff = Fraction(coeff)
        self.factors: dict[MultiPoly, int] = {}
        for f, e in (factors or {}).items():
            self._absorb(f, e)

    def _absorb(self, p: MultiPoly, e: int) -> None:
        if e == 0:
            return
        if p.is_zero():
            if e < 0:
                raise PoleError("zero factor with negative exponent")
            self.coeff = Fraction(0)
            return
        if p.is_monomial():
            (m, c), = p.terms.items()
            self.coeff *= Fraction(c) ** e
            for v, k in decode(m):
                self._bump(MultiPoly.var(v), k * e)
            return
        g = p.mono_content()
        if g:
            for v, k in decode(g):
                self._bump(MultiPoly.var(v), k * e)
            p = MultiPoly._raw({m - g: c for m, c in p.terms.items()})
        k, q = _normalize_factor(p)
        self.coeff *= Fraction(k) ** e
        self._bump(q, e)

    def _bump(self, q: MultiPoly, e: int) -> None:
        s = self.factors.get(q, 0) + e
        if s:
            self.factors[q] = s
        else:
            self.factors.pop(q, None)

    @classmethod
    def of(cls, p) -> "Factored":
        if isinstance(p, Factored):
            return p
        if isinstance(p, (int, Fraction)):
            return cls(p)
        return cls(1, {MultiPoly.lift(p): 1})

    def __mul__(self, other):
        other = Factored.of(other)
        out = Factored(self.coeff * other.coeff)
        out.factors = dict(self.factors)
        for f, e in other.factors.items():
            out._bump(f, e)
        return out

    __rmul__ = __mul__

    def __pow__(self, e: int):
        out = Factored(self.coeff**e)
        out.factors = {f: k * e for f, k in self.factors.items()} if e else {}
        return out

    def inv(self) -> "Factored":
        if self.coeff == 0:
            raise PoleError("inverse of zero")
        return self ** -1

    def __truediv__(self, other):
        return self * Factored.of(other).inv()

    def __neg__(self):
        out = Factored(-self.coeff)
        out.factors = dict(self.factors)
        return out

    def expand(self) -> RatFunc:
        num = MultiPoly.const(self.coeff.numerator)
        den = MultiPoly.const(self.coeff.denominator)
        for f, e in self.factors.items():
            if e > 0:
                num = num * f**e
            else:
                den = den * f ** (-e)
        return RatFunc(num, den)

    def evaluate(self, values: Mapping[int, object]):
        out = self.coeff
        if out.denominator == 1:
            out = out.numerator
        for f, e in self.factors.items():
            x = f.evaluate(values)
            if e < 0 and isinstance(x, (int, Fraction, float, complex)) and x == 0:
                raise PoleError("factor vanishes at this point")
            if isinstance(x, int) and e < 0:
                x = Fraction(x)
            out = out * x**e
        return out

    def evaluate_float(self, values: Mapping[int, object]):
        """Floating-point evaluation; works elementwise on numpy arrays."""
        out = float(self.coeff)
        for f, e in self.factors.items():
            out = out * f.evaluate(values) ** e
        return out

    def substitute(self, mapping: Mapping[int, RatFunc]) -> RatFunc:
        out = RatFunc.const(self.coeff)
        for f, e in self.factors.items():
            out = out * f.substitute(mapping) ** e
        return out

    def __str__(self) -> str:
        ups = sorted(((f, e) for f, e in self.factors.items() if e > 0), key=lambda t: str(t[0]))
        downs = sorted(((f, -e) for f, e in self.factors.items() if e < 0), key=lambda t: str(t[0]))

        def show(f, e):
            s = str(f)
            if len(f) > 1:
                s = f"({s})"
            return s if e == 1 else f"{s}^{e}"

        c = self.coeff
        num = [show(f, e) for f, e in ups]
        if abs(c.numerator) != 1 or not num:
            num.insert(0, str(abs(c.numerator)))
        s = ("-" if c < 0 else "") + "*".join(num)
        den = [show(f, e) for f, e in downs]
        if c.denominator != 1:
            den.insert(0, str(c.denominator))
        if den:
            d = "*".join(den)
            s += "/" + (f"({d})" if len(den) > 1 or "^" in d else d)
        return s

    def __repr__(self) -> str:
        return f"Factored({self})"


# --- parsing ----------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+)|([nu])\[(\d+),(\d+)\]|(\*\*|[-+*/^()]))")


def _tokenize(text: str):
    pos = 0
    out = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected input at offset {pos}: {text[pos:pos + 12]!r}")
        if m.group(1):
            out.append(("int", int(m.group(1))))
        elif m.group(2):
            kind, a, b = m.group(2), int(m.group(3)), int(m.group(4))
            try:
                v = nvar(a, b) if kind == "n" else uvar(a, b)
            except ValueError as exc:
                raise ParseError(str(exc)) from None
            out.append(("var", v))
        else:
            op = m.group(5)
            out.append(("op", "^" if op == "**" else op))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, tokens):
        self.toks = tokens
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self):
        t = self.peek()
        self.i += 1
        return t

    def expr(self) -> RatFunc:
        val = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            rhs = self.term()
            val = val + rhs if op == "+" else val - rhs
        return val

    def term(self) -> RatFunc:
        val = self.factor()
        while self.peek() in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            rhs = self.factor()
            val = val * rhs if op == "*" else val / rhs
        return val

    def factor(self) -> RatFunc:
        t = self.peek()
        if t == ("op", "-"):
            self.take()
            return -self.factor()
        if t == ("op", "+"):
            self.take()
            return self.factor()
        return self.power()

    def power(self) -> RatFunc:
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            sign = 1
            if self.peek() == ("op", "-"):
                self.take()
                sign = -1
            kind, val = self.take()
            if kind != "int":
                raise ParseError("exponent must be an integer literal")
            base = base ** (sign * val)
        return base

    def atom(self) -> RatFunc:
        kind, val = self.take()
        if kind == "int":
            return RatFunc.const(val)
        if kind == "var":
            return RatFunc.var(val)
        if (kind, val) == ("op", "("):
            inner = self.expr()
            if self.take() != ("op", ")"):
                raise ParseError("missing closing parenthesis")
            return inner
        raise ParseError(f"unexpected token {val!r}")


def parse(text: str) -> RatFunc:
    """Parse the canonical text form back into a ``RatFunc``."""
    p = _Parser(_tokenize(text))
    if not p.toks:
        raise ParseError("empty expression")
    out = p.expr()
    if p.i != len(p.toks):
        raise ParseError(f"trailing input after token {p.i}")
    return out


# --- determinants -----------------------------------------------------------

class PolyMinors:
    """Memoized Laplace minors of a square polynomial matrix.

    ``minor(rows, cols)`` expands along the first listed row; sub-minors are
    cached by ``(rows, cols)`` so every determinant sharing a block of rows
    reuses the same work.
    """

    def __init__(self, matrix):
        self.m = [[MultiPoly.lift(x) for x in row] for row in matrix]
        self.memo: dict[tuple[tuple[int, ...], tuple[int, ...]], MultiPoly] = {}

    def minor(self, rows, cols) -> MultiPoly:
        rows, cols = tuple(rows), tuple(cols)
        if len(rows) != len(cols):
            raise ValueError("minor must be square")
        return self._minor(rows, cols)

    def _minor(self, rows, cols) -> MultiPoly:
        if not rows:
            return MultiPoly.const(1)
        key = (rows, cols)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        r0, rest = rows[0], rows[1:]
        row = self.m[r0]
        total = MultiPoly()
        for k, c in enumerate(cols):
            entry = row[c]
            if entry.is_zero():
                continue
            sub = self._minor(rest, cols[:k] + cols[k + 1:])
            if sub.is_zero():
                continue
            term = entry * sub
            total = total + (term if k % 2 == 0 else -term)
        self.memo[key] = total
        return total


def _bareiss(mat: list[list[MultiPoly]]) -> MultiPoly:
    n = len(mat)
    a = [list(r) for r in mat]
    sign = 1
    prev = MultiPoly.const(1)
    for k in range(n - 1):
        if a[k][k].is_zero():
            for i in range(k + 1, n):
                if not a[i][k].is_zero():
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return MultiPoly()
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]).divexact(prev)
        prev = a[k][k]
    return a[n - 1][n - 1] * sign if n else MultiPoly.const(1)


def _row_scaled(matrix) -> tuple[list[list[MultiPoly]], MultiPoly]:
    """Clear denominators row by row; return the polynomial matrix and the scale."""
    out = []
    scale = RatFunc.const(1)
    for row in matrix:
        row = [RatFunc.lift(x) for x in row]
        dens = [x.den for x in row if not x.is_zero()]
        if all(d.is_monomial() for d in dens):
            lm, lc = 0, 1
            for d in dens:
                (m, c), = d.terms.items()
                lm = mono_lcm(lm, m)
                lc = lc * c // math.gcd(lc, c)
            L = MultiPoly.monomial(lm, lc)
            new = []
            for x in row:
                if x.is_zero():
                    new.append(MultiPoly())
                else:
                    (m, c), = x.den.terms.items()
                    new.append(x.num.shift(lm - m, lc // c))
        else:
            L = MultiPoly.const(1)
            seen: list[MultiPoly] = []
            for d in dens:
                if d not in seen:
                    seen.append(d)
                    L = L * d
            new = [MultiPoly() if x.is_zero() else x.num * L.divexact(x.den) for x in row]
        out.append(new)
        scale = scale * RatFunc(L)
    return out, scale


def det(matrix, method: str = "laplace") -> RatFunc:
    """Exact determinant of a square matrix of ``RatFunc`` / ``MultiPoly`` / int entries."""
    n = len(matrix)
    if any(len(r) != n for r in matrix):
        raise ValueError("matrix is not square")
    if n == 0:
        return RatFunc.const(1)
    poly, scale = _row_scaled(matrix)
    if method == "laplace":
        # sparse rows first keeps the memo small
        order = sorted(range(n), key=lambda i: sum(1 for x in poly[i] if x.is_zero()), reverse=True)
        sign = _perm_sign(order)
        d = PolyMinors(poly).minor(order, range(n))
        if sign < 0:
            d = -d
    elif method == "bareiss":
        d = _bareiss(poly)
    else:
        raise ValueError(f"unknown method {method!r}")
    return RatFunc(d) / scale


def _perm_sign(p) -> int:
    p = list(p)
    sign = 1
    seen = [False] * len(p)
    for i in range(len(p)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = p[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


# --- functional front end ---------------------------------------------------

def _var_id(v) -> int:
    """Accept a packed variable id or an ``(a, b)`` pair meaning ``n[a,b]``."""
    if isinstance(v, int):
        return v
    a, b = v
    return nvar(a, b)


def poly_arith(op: str, f: MultiPoly, g: MultiPoly) -> MultiPoly:
    if op == "add":
        return f + g
    if op == "sub":
        return f - g
    if op == "mul":
        return f * g
    raise ValueError(f"unknown polynomial operation {op!r}")


def ratfunc_arith(op: str, f, g):
    """``add``, ``sub``, ``mul``, ``div`` or ``eq`` on rational functions."""
    f, g = RatFunc.lift(f), RatFunc.lift(g)
    if op == "eq":
        return f == g
    if op == "div":
        return f / g
    return {"add": f.__add__, "sub": f.__sub__, "mul": f.__mul__}[op](g)


def differentiate(f, alpha) -> RatFunc:
    return RatFunc.lift(f).diff(_var_id(alpha))


def evaluate(f, assignment):
    """Exact value of ``f``; keys may be variable ids or ``(a, b)`` pairs for ``n[a,b]``."""
    return RatFunc.lift(f).evaluate({_var_id(k): v for k, v in assignment.items()})


determinant = det
