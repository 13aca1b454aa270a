"""The birational map ``n -> u`` attached to a Weyl element and its structure.

The forward image of each free variable is a signed path sum over a product
of row monomials. Everything else here (UDL blocks, the K system and the
inverse, the Jacobian, exponents, domain bounds) is derived from it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

from .errors import DegenerateDecomposition
from .paths import origins_destinations, path_sum, row_data
from .ratfunc import (
    Factored,
    MultiPoly,
    PolyMinors,
    RatFunc,
    _perm_sign,
    _row_scaled,
    det,
    nvar,
    uvar,
)
from .weyl import (
    One,
    Permutation,
    VarIndex,
    free_set,
    free_variables,
    is_free,
    level_partition,
    pattern,
)

__all__ = [
    "ForwardMap",
    "forward_map",
    "forward_split",
    "UDLBlocks",
    "udl_blocks",
    "udl_decompose",
    "superdiag_closed_form",
    "diag_closed_form",
    "delta_product",
    "l_det",
    "KSystem",
    "k_system",
    "inverse_map",
    "inverse_export",
    "Jacobian",
    "jacobian",
    "diag_derivative_closed_form",
    "rightmost_column_closed_form",
    "LinearForm",
    "ExponentEntry",
    "ExponentData",
    "exponents",
    "DomainBounds",
    "domain_bounds",
    "n_rat",
    "u_rat",
]


def n_rat(v: VarIndex) -> RatFunc:
    return RatFunc.var(nvar(v.a, v.b))


def u_rat(v: VarIndex) -> RatFunc:
    return RatFunc.var(uvar(v.a, v.b))


# --- forward map ------------------------------------------------------------

@dataclass(frozen=True)
class ForwardTerm:
    sign: int
    pathsum: MultiPoly
    rho: MultiPoly

    def image(self) -> RatFunc:
        return RatFunc(self.pathsum * self.sign, self.rho)


@dataclass(frozen=True)
class ForwardMap:
    w: Permutation
    terms: Mapping[VarIndex, ForwardTerm]
    images: Mapping[VarIndex, RatFunc] = field(compare=False)
    wu: tuple[tuple[RatFunc, ...], ...] = field(compare=False, repr=False)
    mutation: tuple | None = None

    def __getitem__(self, alpha) -> RatFunc:
        return self.images[VarIndex(*alpha)]

    def matrix_entry(self, row: int, col: int) -> RatFunc:
        return self.wu[row - 1][col - 1]

    def mutate(self, alpha, term: int = 0, delta: int = 1) -> "ForwardMap":
        """Copy with one path-sum coefficient of ``alpha`` shifted by ``delta``.

        Terms are indexed in canonical display order.
        """
        alpha = VarIndex(*alpha)
        t = self.terms[alpha]
        mono, _ = t.pathsum.sorted_terms()[term]
        new_sum = t.pathsum + MultiPoly.monomial(mono, delta)
        terms = dict(self.terms)
        terms[alpha] = ForwardTerm(t.sign, new_sum, t.rho)
        return _assemble(self.w, terms, mutation=(alpha, term, delta))

    def export(self) -> dict[str, str]:
        return {f"u[{v.a},{v.b}]": str(self.images[v]) for v in sorted(self.images, key=lambda v: (v.b, v.a))}


def _assemble(w: Permutation, terms, mutation=None) -> ForwardMap:
    images = {v: t.image() for v, t in terms.items()}
    pat = pattern(w)
    one = RatFunc.const(1)
    zero = RatFunc.const(0)
    rows = []
    for i in range(1, w.r + 1):
        row = []
        for j in range(1, w.r + 1):
            e = pat.at(i, j)
            row.append(zero if e is None else one if isinstance(e, One) else images[e])
        rows.append(tuple(row))
    return ForwardMap(w, terms, images, tuple(rows), mutation)


def forward_term(w: Permutation, alpha: VarIndex) -> ForwardTerm:
    od = origins_destinations(w, alpha)
    rho = MultiPoly.const(1)
    for cell in od.D:
        rho = rho * row_data(w, cell[1])[1]
    return ForwardTerm(-1 if od.t % 2 else 1, path_sum(w, alpha, "P"), rho)


@lru_cache(maxsize=4096)
def forward_map(w: Permutation) -> ForwardMap:
    return _assemble(w, {v: forward_term(w, v) for v in free_set(w)})


def _fm(w: Permutation, fm: ForwardMap | None) -> ForwardMap:
    return forward_map(w) if fm is None else fm


def forward_split(w: Permutation, alpha) -> tuple[RatFunc, RatFunc, RatFunc]:
    """``(R_L, R_1, R_2)`` for one free variable, straight from the path sets."""
    alpha = VarIndex(*alpha)
    t = forward_term(w, alpha)
    return tuple(RatFunc(path_sum(w, alpha, k) * t.sign, t.rho) for k in ("P_L", "P_1", "P_2"))


# --- UDL blocks -------------------------------------------------------------

class _MinorCache:
    """Row-scaled polynomial copy of ``wu`` with shared Laplace minors."""

    def __init__(self, fm: ForwardMap):
        self.r = fm.w.r
        poly, _ = _row_scaled(fm.wu)
        self.minors = PolyMinors(poly)
        self.scales = []
        for row in fm.wu:
            p, s = _row_scaled([row])
            self.scales.append(s)

    def det(self, rows: Sequence[int], cols: Sequence[int]) -> RatFunc:
        """Determinant of the block with 1-based ``rows`` and ``cols`` of ``wu``."""
        rows0 = tuple(i - 1 for i in rows)
        cols0 = tuple(j - 1 for j in cols)
        # expand from the bottom row up so lower-right blocks share sub-minors
        order = tuple(reversed(rows0))
        sign = _perm_sign(list(reversed(range(len(order)))))
        val = self.minors.minor(order, cols0)
        scale = RatFunc.const(1)
        for i in rows0:
            scale = scale * self.scales[i]
        return RatFunc(val * sign) / scale


@dataclass(frozen=True)
class UDLBlocks:
    i: int
    S: tuple
    E: tuple
    T: tuple
    F: tuple
    delta: MultiPoly
    L_det: int
    det_T: RatFunc
    det_F: RatFunc


def _block(mat, rows, cols):
    return tuple(tuple(mat[i - 1][j - 1] for j in cols) for i in rows)


def _wn(w: Permutation):
    pat = pattern(w)
    return tuple(
        tuple(
            0 if e is None else 1 if isinstance(e, One) else n_rat(e)
            for e in row
        )
        for row in pat.cells
    )


def delta_product(w: Permutation, i: int) -> MultiPoly:
    """Product of ``n[a,b]`` over free variables with ``a < r-i+1 <= b``."""
    c = w.r - i + 1
    out = MultiPoly.const(1)
    for v in free_set(w):
        if v.a < c <= v.b:
            out = out * MultiPoly.var(nvar(v.a, v.b))
    return out


def l_det(w: Permutation, k: int) -> int:
    """Determinant of ``w`` with the rows and columns of ``1_1..1_k`` removed."""
    cols = list(range(k + 1, w.r + 1))
    rows = sorted(w.inv(j) for j in cols)
    # entry (row, w(row)); permutation sending row index to column index
    perm = [cols.index(w(i)) for i in rows]
    return _perm_sign(perm) if perm else 1


def _t_cols(r: int, i: int) -> list[int]:
    return list(range(r - i + 1, r + 1))


def _f_rows(r: int, i: int) -> list[int]:
    return [r - i] + list(range(r - i + 2, r + 1))


def udl_blocks(w: Permutation, i: int, fm: ForwardMap | None = None) -> UDLBlocks:
    r = w.r
    if not 1 <= i <= r - 1:
        raise IndexError(f"block index {i} outside 1..{r - 1}")
    fm = _fm(w, fm)
    cache = _minor_cache(fm)
    cols = _t_cols(r, i)
    frows = _f_rows(r, i)
    wn = _wn(w)
    return UDLBlocks(
        i=i,
        S=_block(wn, cols, cols),
        E=_block(wn, frows, cols),
        T=_block(fm.wu, cols, cols),
        F=_block(fm.wu, frows, cols),
        delta=delta_product(w, i),
        L_det=l_det(w, r - i),
        det_T=cache.det(cols, cols),
        det_F=cache.det(frows, cols),
    )


_MINOR_CACHES: dict[int, tuple[ForwardMap, _MinorCache]] = {}


def _minor_cache(fm: ForwardMap) -> _MinorCache:
    hit = _MINOR_CACHES.get(id(fm))
    if hit is not None and hit[0] is fm:
        return hit[1]
    if len(_MINOR_CACHES) > 64:
        _MINOR_CACHES.clear()
    mc = _MinorCache(fm)
    _MINOR_CACHES[id(fm)] = (fm, mc)
    return mc


def udl_decompose(w: Permutation, fm: ForwardMap | None = None) -> tuple[list[RatFunc], list[RatFunc]]:
    """Superdiagonal ``x[i,i+1]`` and diagonal ``b[i,i]`` of ``wu = x b``."""
    fm = _fm(w, fm)
    r = w.r
    cache = _minor_cache(fm)
    detT = [RatFunc.const(1)]
    for k in range(1, r + 1):
        cols = _t_cols(r, k)
        d = cache.det(cols, cols)
        if d.is_zero():
            raise DegenerateDecomposition(f"lower-right minor of size {k} vanishes")
        detT.append(d)
    superdiag = []
    for i in range(1, r):
        k = r - i
        superdiag.append(cache.det(_f_rows(r, k), _t_cols(r, k)) / detT[k])
    diag = [detT[r - i + 1] / detT[r - i] for i in range(1, r + 1)]
    return superdiag, diag


def superdiag_closed_form(w: Permutation) -> list[RatFunc]:
    blocks = level_partition(w)
    out = []
    for i in range(1, w.r):
        s = RatFunc.const(0)
        for v in sorted(blocks[i + 1]):
            s = s + n_rat(v).inv()
        out.append(s)
    return out


def diag_closed_form(w: Permutation) -> list[RatFunc]:
    out = []
    for i in range(1, w.r + 1):
        num = MultiPoly.const(-1 if (i + w.inv(i)) % 2 else 1)
        den = MultiPoly.const(1)
        for v in free_set(w):
            if v.b == i:
                num = num * MultiPoly.var(nvar(v.a, v.b)) * -1
            if v.a == i:
                den = den * MultiPoly.var(nvar(v.a, v.b))
        out.append(RatFunc(num, den))
    return out


# --- K system and inverse ---------------------------------------------------

@dataclass(frozen=True)
class KSystem:
    alpha: VarIndex
    cols: tuple[int, ...]
    rows: tuple[int, ...]
    K: tuple[tuple[MultiPoly, ...], ...]
    kappa: tuple[tuple[int, ...], ...]
    kappa_det: int
    det_set: frozenset[VarIndex]
    det_K: MultiPoly

    def det_set_product(self) -> MultiPoly:
        out = MultiPoly.const(1)
        for v in self.det_set:
            out = out * MultiPoly.var(nvar(v.a, v.b))
        return out


def _wu_symbolic(w: Permutation):
    pat = pattern(w)
    return tuple(
        tuple(
            MultiPoly() if e is None else MultiPoly.const(1) if isinstance(e, One) else MultiPoly.var(uvar(e.a, e.b))
            for e in row
        )
        for row in pat.cells
    )


@lru_cache(maxsize=None)
def k_system(w: Permutation, alpha) -> KSystem:
    x, y = alpha
    alpha = VarIndex(x, y)
    if not is_free(w, x, y):
        raise ValueError(f"{alpha} is not a free variable of {w}")
    r = w.r
    px = w.inv(x)
    cols = tuple(j for j in range(y, r + 1) if w.inv(j) <= px)
    t = len(cols)
    rows = tuple(range(px - t + 1, px + 1))
    wu = _wu_symbolic(w)
    K = _block(wu, rows, cols)
    krows = sorted(w.inv(j) for j in cols)
    kappa = tuple(tuple(1 if w(i) == j else 0 for j in cols) for i in krows)
    kdet = _perm_sign([cols.index(w(i)) for i in krows])
    det_set = frozenset(v for v in free_set(w) if v.a < y <= v.b and w.inv(v.a) <= px)
    dK = PolyMinors(K).minor(range(t), range(t))
    return KSystem(alpha, cols, rows, K, kappa, kdet, det_set, dK)


@lru_cache(maxsize=1024)
def inverse_map(w: Permutation) -> dict[VarIndex, Factored]:
    """Each ``n[a,b]`` as a factored rational function of the ``u`` variables."""
    out: dict[VarIndex, Factored] = {}
    by_col: dict[int, list[VarIndex]] = {}
    for v in free_set(w):
        by_col.setdefault(v.b, []).append(v)
    for y in sorted(by_col, reverse=True):
        col = sorted(by_col[y], key=lambda v: w.inv(v.a))
        for k, v in enumerate(col):
            ks = k_system(w, v)
            if k == 0:
                val = Factored(ks.kappa_det) * Factored.of(ks.det_K)
                rest = ks.det_set - {v}
            else:
                v1 = col[k - 1]
                ks1 = k_system(w, v1)
                val = Factored(Fraction(ks1.kappa_det, ks.kappa_det))
                val = val * Factored.of(ks.det_K) / Factored.of(ks1.det_K)
                rest = (ks.det_set - ks1.det_set) - {v}
            for other in sorted(rest):
                val = val / out[other]
            out[v] = val
    return out


def inverse_export(w: Permutation, expand: bool = False) -> dict[str, str]:
    inv = inverse_map(w)
    keys = sorted(inv, key=lambda v: (v.b, v.a))
    if expand:
        return {f"n[{v.a},{v.b}]": str(inv[v].expand().reduced()) for v in keys}
    return {f"n[{v.a},{v.b}]": str(inv[v]) for v in keys}


# --- Jacobian ---------------------------------------------------------------

@dataclass(frozen=True)
class Jacobian:
    order: tuple[VarIndex, ...]
    matrix: tuple[tuple[RatFunc, ...], ...]
    det_diag: RatFunc
    det_full: RatFunc | None
    predicted: RatFunc
    t_w: int

    def is_upper_triangular(self) -> bool:
        d = len(self.order)
        return all(self.matrix[i][j].is_zero() for i in range(d) for j in range(i))

    def first_below_diagonal(self):
        d = len(self.order)
        for i in range(d):
            for j in range(i):
                if not self.matrix[i][j].is_zero():
                    return (i, j)
        return None


def jacobian(w: Permutation, fm: ForwardMap | None = None, full_det: bool = True) -> Jacobian:
    fm = _fm(w, fm)
    order = tuple(free_variables(w, "square"))
    mat = tuple(
        tuple(fm.images[a].diff(nvar(b.a, b.b)) for b in order)
        for a in order
    )
    dd = RatFunc.const(1)
    for i in range(len(order)):
        dd = dd * mat[i][i]
    t_w = sum(origins_destinations(w, v).t for v in order)
    pred = MultiPoly.const(-1 if t_w % 2 else 1)
    for v in order:
        pred = pred * MultiPoly.var(nvar(v.a, v.b)) ** (v.b - v.a - 1)
    full = det(mat) if full_det else None
    return Jacobian(order, mat, dd, full, RatFunc(pred), t_w)


def diag_derivative_closed_form(w: Permutation, alpha) -> RatFunc:
    x, y = alpha
    t = origins_destinations(w, VarIndex(x, y)).t
    num = MultiPoly.const(-1 if t % 2 else 1)
    den = MultiPoly.const(1)
    for d in range(y + 1, w.r + 1):
        if is_free(w, x, d):
            num = num * MultiPoly.var(nvar(x, d))
    for l in range(w.inv(y) + 1, w.inv(x)):
        if is_free(w, w(l), y):
            num = num * MultiPoly.var(nvar(w(l), y))
    for f in range(y + 1, w.r + 1):
        if is_free(w, y, f):
            den = den * MultiPoly.var(nvar(y, f))
    return RatFunc(num, den)


def rightmost_column_closed_form(w: Permutation, a: int) -> RatFunc:
    """``u[w(a), r]`` for a row ``a`` below the one in the last column."""
    r = w.r
    out = MultiPoly.const(1)
    for j in range(w.inv(r) + 1, a + 1):
        out = out * MultiPoly.var(nvar(w(j), r))
    return RatFunc(out)


# --- exponents --------------------------------------------------------------

@dataclass(frozen=True)
class LinearForm:
    """``sum(coeffs[k] * lambda_{k+1}) + const``."""

    coeffs: tuple[Fraction, ...]
    const: Fraction

    def evaluate(self, lam: Sequence):
        total = self.const
        for c, x in zip(self.coeffs, lam):
            if c:
                total = total + c * x
        return total

    def __add__(self, other):
        if isinstance(other, LinearForm):
            return LinearForm(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)), self.const + other.const)
        return LinearForm(self.coeffs, self.const + Fraction(other))

    def __str__(self) -> str:
        parts = []
        for k, c in enumerate(self.coeffs, 1):
            if not c:
                continue
            mag = "" if abs(c) == 1 else f"{abs(c)}*"
            sign = "-" if c < 0 else "+"
            parts.append((sign, f"{mag}λ{k}"))
        if self.const or not parts:
            parts.append(("-" if self.const < 0 else "+", str(abs(self.const))))
        s = "".join(f"{sg}{body}" for sg, body in parts)
        return s[1:] if s.startswith("+") else s


@dataclass(frozen=True)
class ExponentEntry:
    alpha: VarIndex
    measure: int
    char: LinearForm
    eta: tuple[int, ...]

    @property
    def total(self) -> LinearForm:
        return self.char + self.measure

    def eta_value(self, delta: Sequence[int]) -> int:
        return sum(delta[k - 1] for k in self.eta) % 2


@dataclass(frozen=True)
class ExponentData:
    w: Permutation
    entries: tuple[ExponentEntry, ...]
    sign_parity: tuple[int, ...]
    lam: tuple | None = None
    delta: tuple[int, ...] | None = None

    def global_sign(self, delta: Sequence[int] | None = None) -> int:
        delta = self.delta if delta is None else delta
        if delta is None:
            raise ValueError("no delta given")
        return -1 if sum(g * d for g, d in zip(self.sign_parity, delta)) % 2 else 1

    def totals(self, lam: Sequence | None = None) -> dict[VarIndex, object]:
        lam = self.lam if lam is None else lam
        if lam is None:
            return {e.alpha: e.total for e in self.entries}
        return {e.alpha: e.total.evaluate(lam) for e in self.entries}

    def report(self) -> dict[str, dict[str, str]]:
        out = {}
        for e in self.entries:
            row = {
                "measure": str(e.measure),
                "character": str(e.char),
                "total": str(e.total),
                "eta": "+".join(f"δ{k}" for k in e.eta),
            }
            if self.lam is not None:
                row["total_value"] = _num(e.total.evaluate(self.lam))
            if self.delta is not None:
                row["eta_value"] = str(e.eta_value(self.delta))
            out[f"n[{e.alpha.a},{e.alpha.b}]"] = row
        return out


def _num(x) -> str:
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, complex):
        return f"{x.real:.15g}{x.imag:+.15g}i"
    return f"{x:.15g}" if isinstance(x, float) else str(x)


def rho_vector(r: int) -> tuple[Fraction, ...]:
    return tuple(Fraction(r + 1 - 2 * k, 2) for k in range(1, r + 1))


def exponents(w: Permutation, lam: Sequence | None = None, delta: Sequence[int] | None = None) -> ExponentData:
    """Measure, character and sign exponents of each free variable.

    They come from writing ``prod |b[j,j]|^-(lam_j - rho_j) sgn(b[j,j])^delta_j``
    in the ``n`` coordinates using the closed form of the diagonal.
    """
    r = w.r
    if lam is not None and len(lam) != r:
        raise ValueError(f"lambda has length {len(lam)}, expected {r}")
    if delta is not None and len(delta) != r:
        raise ValueError(f"delta has length {len(delta)}, expected {r}")
    rho = rho_vector(r)
    entries = []
    for v in free_variables(w, "square"):
        coeffs = [Fraction(0)] * r
        coeffs[v.a - 1] += 1
        coeffs[v.b - 1] -= 1
        const = -rho[v.a - 1] + rho[v.b - 1]
        entries.append(ExponentEntry(v, v.b - v.a - 1, LinearForm(tuple(coeffs), const), (v.a, v.b)))
    parity = []
    for j in range(1, r + 1):
        below = sum(1 for v in free_set(w) if v.b == j)
        parity.append((j + w.inv(j) + below) % 2)
    return ExponentData(
        w,
        tuple(entries),
        tuple(parity),
        None if lam is None else tuple(lam),
        None if delta is None else tuple(int(d) % 2 for d in delta),
    )


# --- domain bounds ----------------------------------------------------------

@dataclass(frozen=True)
class DomainBounds:
    w: Permutation
    M: Fraction
    order: tuple[VarIndex, ...]
    f: tuple[RatFunc, ...]
    h: tuple[RatFunc, ...]
    dudn: tuple[RatFunc, ...]
    signs: tuple[int, ...]

    def export(self) -> dict[str, str]:
        return {f"h{j + 1}[{v.a},{v.b}]": str(self.h[j]) for j, v in enumerate(self.order)}


def domain_bounds(w: Permutation, M=1, fm: ForwardMap | None = None) -> DomainBounds:
    M = Fraction(M)
    if M <= 0:
        raise ValueError("M must be positive")
    fm = _fm(w, fm)
    order = tuple(free_variables(w, "square"))
    fs, hs, ds, sg = [], [], [], []
    for v in order:
        t = origins_destinations(w, v).t
        s = -1 if t % 2 else 1
        u = fm.images[v]
        d = u.diff(nvar(v.a, v.b))
        f = (u - d * n_rat(v)) * s
        h = (f + RatFunc.const(M)) * s / d
        fs.append(f)
        hs.append(h)
        ds.append(d)
        sg.append(s)
    return DomainBounds(w, M, order, tuple(fs), tuple(hs), tuple(ds), tuple(sg))
