"""Identity batteries over single Weyl elements and whole sweeps.

Every check compares two independently computed sides exactly. A failing
check records both sides in canonical text so the report can be diffed.
"""
from __future__ import annotations

import json
import os
import random
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from .biratmap import (
    ForwardMap,
    diag_closed_form,
    diag_derivative_closed_form,
    domain_bounds,
    forward_map,
    forward_split,
    inverse_map,
    jacobian,
    k_system,
    n_rat,
    rightmost_column_closed_form,
    superdiag_closed_form,
    udl_blocks,
    udl_decompose,
)
from .errors import DegenerateDecomposition, PoleError
from .ratfunc import RatFunc, nvar, uvar
from .weyl import (
    Permutation,
    VarIndex,
    all_permutations,
    free_set,
    free_variables,
    level,
    reduce_hat,
    reduce_tilde,
    sample_permutations,
)

__all__ = [
    "PARTS",
    "CheckResult",
    "CheckReport",
    "SweepConfig",
    "SweepReport",
    "verify_element",
    "verify_sweep",
    "cross_checks",
    "bounds_containment",
    "default_workers",
]

PARTS = ("i", "ii", "iii", "iv", "v-consequences", "identities", "bounds")


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str
    witness: dict | None = None

    @property
    def ok(self) -> bool:
        return self.status != "fail"


@dataclass
class CheckReport:
    w: str
    results: list[CheckResult] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.results)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.results if c.status == "fail"]

    def add(self, name: str, ok: bool, witness: dict | None = None) -> None:
        self.results.append(CheckResult(name, "pass" if ok else "fail", None if ok else witness))

    def skip(self, name: str, reason: str) -> None:
        self.results.append(CheckResult(name, "skipped", {"reason": reason}))

    def to_dict(self) -> dict:
        return {"w": self.w, "results": [asdict(c) for c in self.results]}

    def summary(self) -> str:
        lines = [f"w = {self.w}: {'pass' if self.passed else 'FAIL'} ({self.elapsed:.2f}s)"]
        for c in self.results:
            lines.append(f"  {c.status:7s} {c.name}")
        return "\n".join(lines)


def _seed_for(seed: int, w: Permutation) -> int:
    return (seed * 1_000_003 + zlib.crc32(w.one_line().encode())) & 0xFFFFFFFF


def _pair(lhs, rhs) -> dict:
    return {"lhs": str(lhs), "rhs": str(rhs)}


# --- individual batteries ---------------------------------------------------

def _check_ii(w: Permutation, fm: ForwardMap, rep: CheckReport) -> None:
    try:
        sup, _ = udl_decompose(w, fm)
    except DegenerateDecomposition as exc:
        rep.add("ii:superdiagonal", False, {"error": str(exc)})
        return
    closed = superdiag_closed_form(w)
    for i, (a, b) in enumerate(zip(sup, closed), 1):
        if a != b:
            rep.add("ii:superdiagonal", False, {"i": i, **_pair(a, b)})
            return
    rep.add("ii:superdiagonal", True)


def _check_iii(w: Permutation, fm: ForwardMap, rep: CheckReport) -> None:
    r = w.r
    bad = None
    for i in range(1, r):
        bl = udl_blocks(w, i, fm)
        rhs = RatFunc(bl.delta * bl.L_det)
        if bl.det_T != rhs:
            bad = {"i": i, **_pair(bl.det_T, rhs)}
            break
    rep.add("iii:minor-product", bad is None, bad)
    try:
        _, diag = udl_decompose(w, fm)
    except DegenerateDecomposition as exc:
        rep.add("iii:diagonal", False, {"error": str(exc)})
        return
    bad = None
    for i, (a, b) in enumerate(zip(diag, diag_closed_form(w)), 1):
        if a != b:
            bad = {"i": i, **_pair(a, b)}
            break
    rep.add("iii:diagonal", bad is None, bad)
    prod = RatFunc.const(1)
    for b in diag:
        prod = prod * b
    rep.add("iii:diagonal-product", prod == w.sign(), _pair(prod, w.sign()))


def _check_iv(w: Permutation, fm: ForwardMap, rep: CheckReport) -> None:
    jac = jacobian(w, fm)
    pos = jac.first_below_diagonal()
    if pos is None:
        rep.add("iv:triangular", True)
    else:
        i, j = pos
        rep.add("iv:triangular", False, {
            "row": str(jac.order[i]), "col": str(jac.order[j]), "entry": str(jac.matrix[i][j]),
        })
    rep.add("iv:det-diagonal", jac.det_diag == jac.predicted, _pair(jac.det_diag, jac.predicted))
    rep.add("iv:det-full", jac.det_full == jac.predicted, _pair(jac.det_full, jac.predicted))


def _check_diag_derivatives(w: Permutation, fm: ForwardMap, rep: CheckReport, name: str) -> None:
    for v in free_variables(w, "square"):
        lhs = fm.images[v].diff(nvar(v.a, v.b))
        rhs = diag_derivative_closed_form(w, v)
        if lhs != rhs:
            rep.add(name, False, {"alpha": str(v), **_pair(lhs, rhs)})
            return
    rep.add(name, True)


def _check_partition(w: Permutation, fm: ForwardMap, rep: CheckReport, name: str) -> None:
    for v in free_set(w):
        parts = forward_split(w, v)
        total = parts[0] + parts[1] + parts[2]
        if total != fm.images[v]:
            rep.add(name, False, {"alpha": str(v), **_pair(fm.images[v], total)})
            return
    rep.add(name, True)


def _check_rrm(w: Permutation, fm: ForwardMap, rep: CheckReport) -> None:
    r = w.r
    for a in range(w.inv(r) + 1, r + 1):
        v = VarIndex(w(a), r)
        lhs, rhs = fm.images[v], rightmost_column_closed_form(w, a)
        if lhs != rhs:
            rep.add("identity:rightmost-column", False, {"alpha": str(v), **_pair(lhs, rhs)})
            return
    rep.add("identity:rightmost-column", True)


def _u_mapping(w: Permutation, fm: ForwardMap) -> dict[int, RatFunc]:
    return {uvar(v.a, v.b): fm.images[v] for v in free_set(w)}


def _check_kdet(w: Permutation, fm: ForwardMap, rep: CheckReport) -> None:
    mapping = _u_mapping(w, fm)
    for v in free_set(w):
        ks = k_system(w, v)
        lhs = ks.det_K.substitute(mapping)
        rhs = RatFunc(ks.det_set_product() * ks.kappa_det)
        if lhs != rhs:
            rep.add("identity:k-determinant", False, {"alpha": str(v), **_pair(lhs, rhs)})
            return
    rep.add("identity:k-determinant", True)


def _rename(f: RatFunc, index_map: dict[VarIndex, VarIndex]) -> RatFunc:
    mapping = {nvar(a.a, a.b): n_rat(b) for a, b in index_map.items()}
    return f.substitute(mapping)


def _check_hat(w: Permutation, fm: ForwardMap, rep: CheckReport) -> None:
    if w.r < 2:
        rep.skip("identity:hat-compatibility", "r < 2")
        return
    red = reduce_hat(w)
    child = forward_map(red.child)
    for v, cv in red.index_map.items():
        lhs = _rename(fm.images[v], red.index_map)
        rhs = child.images[cv]
        if lhs != rhs:
            rep.add("identity:hat-compatibility", False, {"alpha": str(v), **_pair(lhs, rhs)})
            return
    rep.add("identity:hat-compatibility", True)


def tilde_factor(w: Permutation, v: VarIndex) -> RatFunc:
    r = w.r
    pa, pb, pr = w.inv(v.a), w.inv(v.b), w.inv(r)
    if pa < pr:
        return RatFunc.const(1)
    if pb < pr:
        return -n_rat(VarIndex(v.a, r))
    return n_rat(VarIndex(v.a, r)) / n_rat(VarIndex(v.b, r))


def _check_tilde(w: Permutation, rep: CheckReport) -> None:
    if w.r < 2:
        rep.skip("identity:tilde-scaling", "r < 2")
        return
    red = reduce_tilde(w)
    child = forward_map(red.child)
    for v in red.index_map:
        lhs = forward_split(w, v)[0]
        rhs = tilde_factor(w, v) * child.images[v]
        if lhs != rhs:
            rep.add("identity:tilde-scaling", False, {"alpha": str(v), **_pair(lhs, rhs)})
            return
    rep.add("identity:tilde-scaling", True)


def _check_levels(w: Permutation, rep: CheckReport) -> None:
    r = w.r
    bad = None
    hat = reduce_hat(w) if r >= 2 else None
    til = reduce_tilde(w) if r >= 2 else None
    for v in free_set(w):
        lv = level(w, v)
        if not 2 <= lv <= min(w.inv(v.a), v.b):
            bad = {"alpha": str(v), "level": lv, "rule": "bounds"}
            break
        if w.inv(v.a) == r:
            if lv != v.b:
                bad = {"alpha": str(v), "level": lv, "rule": "bottom-row"}
                break
        elif lv != level(hat.child, hat.index_map[v]):
            bad = {"alpha": str(v), "level": lv, "rule": "hat"}
            break
        if v.b == r:
            if lv != w.inv(v.a):
                bad = {"alpha": str(v), "level": lv, "rule": "rightmost-column"}
                break
        elif lv != level(til.child, v):
            bad = {"alpha": str(v), "level": lv, "rule": "tilde"}
            break
    rep.add("identity:levels", bad is None, bad)


def _random_point(rng: random.Random, keys: Iterable[int], bits: int = 20) -> dict[int, Fraction]:
    out = {}
    lim = 1 << bits
    for k in keys:
        num = 0
        while num == 0:
            num = rng.randint(-lim, lim)
        out[k] = Fraction(num, rng.randint(1, lim))
    return out


def _check_roundtrip(w: Permutation, fm: ForwardMap, rep: CheckReport, points: int, seed: int,
                     symbolic_max_r: int) -> None:
    inv = inverse_map(w)
    vs = free_set(w)
    if w.r <= symbolic_max_r:
        mapping = _u_mapping(w, fm)
        for v in vs:
            try:
                back = inv[v].substitute(mapping)
            except PoleError as exc:
                rep.add("i:roundtrip-symbolic", False, {"alpha": str(v), "error": str(exc)})
                return
            if back != n_rat(v):
                rep.add("i:roundtrip-symbolic", False, {"alpha": str(v), **_pair(back, n_rat(v))})
                return
        rep.add("i:roundtrip-symbolic", True)
        return
    rng = random.Random(_seed_for(seed, w))
    for _ in range(points):
        pt = _random_point(rng, [nvar(v.a, v.b) for v in vs])
        try:
            u = {uvar(v.a, v.b): fm.images[v].evaluate(pt) for v in vs}
            for v in vs:
                back = inv[v].evaluate(u)
                if back != pt[nvar(v.a, v.b)]:
                    rep.add("i:roundtrip-numeric", False, {
                        "alpha": str(v), "point": {str(VarIndex(*_ab(k))): str(x) for k, x in pt.items()},
                        "lhs": str(back), "rhs": str(pt[nvar(v.a, v.b)]),
                    })
                    return
        except PoleError:
            # random rationals hit a pole: the claim is generic, draw again
            continue
    rep.add("i:roundtrip-numeric", True)


def _ab(slot: int) -> tuple[int, int]:
    from .ratfunc import var_info

    _, a, b = var_info(slot)
    return a, b


def _check_bounds_structure(w: Permutation, fm: ForwardMap, M, rep: CheckReport) -> None:
    db = domain_bounds(w, M, fm)
    d = len(db.order)
    if d == 0:
        rep.add("bounds:structure", True)
        return
    if db.h[-1] != RatFunc.const(db.M):
        rep.add("bounds:structure", False, {"j": d, **_pair(db.h[-1], db.M)})
        return
    for j in range(d):
        h = db.h[j]
        later = {nvar(v.a, v.b) for v in db.order[j + 1:]}
        if not h.variables() <= later:
            rep.add("bounds:structure", False, {"j": j + 1, "h": str(h), "rule": "variables"})
            return
        for v in db.order[: j + 1]:
            if not h.diff(nvar(v.a, v.b)).is_zero():
                rep.add("bounds:structure", False, {"j": j + 1, "h": str(h), "rule": "independence"})
                return
        if not h.den.is_monomial() or any(h.den.degree_in(x) > 1 or h.num.degree_in(x) > 1 for x in later):
            rep.add("bounds:structure", False, {"j": j + 1, "h": str(h), "rule": "multilinear"})
            return
    rep.add("bounds:structure", True)


def bounds_containment(w: Permutation, M=1, samples: int = 10_000, seed: int = 0,
                       fm: ForwardMap | None = None) -> tuple[int, dict | None]:
    """Sample ``u`` uniformly in ``[-M, M]^d``, invert, and test the nested bounds.

    Returns ``(violations, first_witness)``. Floating point screens every
    sample; anything near a bound is re-checked in exact arithmetic.
    """
    db = domain_bounds(w, M, fm)
    d = len(db.order)
    if d == 0:
        return 0, None
    inv = inverse_map(w)
    rng = np.random.default_rng(_seed_for(seed, w))
    Mf = float(db.M)
    U = rng.uniform(-Mf, Mf, size=(samples, d))
    uvals = {uvar(v.a, v.b): U[:, k] for k, v in enumerate(db.order)}
    with np.errstate(divide="ignore", invalid="ignore"):
        N = {v: inv[v].evaluate_float(uvals) for v in db.order}
        A = {nvar(v.a, v.b): np.abs(N[v]) for v in db.order}
        suspicious = np.zeros(samples, dtype=bool)
        for j, v in enumerate(db.order):
            rhs = db.h[j].evaluate(A) * np.ones(samples)
            lhs = A[nvar(v.a, v.b)]
            suspicious |= ~(lhs <= rhs * (1 - 1e-9))
    violations = 0
    witness = None
    for k in np.nonzero(suspicious)[0]:
        exact_u = {uvar(v.a, v.b): Fraction(float(U[k, c])) for c, v in enumerate(db.order)}
        try:
            n = {v: inv[v].evaluate(exact_u) for v in db.order}
        except PoleError:
            continue
        absn = {nvar(v.a, v.b): abs(x) for v, x in n.items()}
        for j, v in enumerate(db.order):
            if absn[nvar(v.a, v.b)] > db.h[j].evaluate(absn):
                violations += 1
                if witness is None:
                    witness = {"sample": int(k), "j": j + 1, "u": [str(x) for x in exact_u.values()]}
                break
    return violations, witness


def _check_bounds(w: Permutation, fm: ForwardMap, rep: CheckReport, M, samples: int, seed: int,
                  containment_max_r: int) -> None:
    _check_bounds_structure(w, fm, M, rep)
    if w.r > containment_max_r:
        rep.skip("bounds:containment", f"r > {containment_max_r}")
        return
    bad, wit = bounds_containment(w, M, samples, seed, fm)
    rep.add("bounds:containment", bad == 0, {"violations": bad, "first": wit})


def verify_element(
    w: Permutation,
    parts: Iterable[str] = PARTS,
    *,
    fm: ForwardMap | None = None,
    points: int = 50,
    seed: int = 0,
    M=1,
    samples: int = 10_000,
    symbolic_max_r: int = 4,
    containment_max_r: int = 4,
) -> CheckReport:
    parts = set(parts)
    unknown = parts - set(PARTS)
    if unknown:
        raise ValueError(f"unknown parts {sorted(unknown)}")
    t0 = time.perf_counter()
    fm = forward_map(w) if fm is None else fm
    rep = CheckReport(w.one_line())

    def run(name, fn, *args):
        try:
            fn(*args)
        except (ArithmeticError, ValueError, KeyError) as exc:
            rep.add(name, False, {"error": f"{type(exc).__name__}: {exc}"})

    if "i" in parts:
        run("i:roundtrip", _check_roundtrip, w, fm, rep, points, seed, symbolic_max_r)
    if "ii" in parts:
        run("ii:superdiagonal", _check_ii, w, fm, rep)
    if "iii" in parts:
        run("iii", _check_iii, w, fm, rep)
    if "iv" in parts:
        run("iv", _check_iv, w, fm, rep)
    if "v-consequences" in parts:
        if "iv" not in parts:
            run("v:triangular", lambda: rep.add("v:triangular", jacobian(w, fm, full_det=False).is_upper_triangular()))
        run("v:diagonal-derivative", _check_diag_derivatives, w, fm, rep, "v:diagonal-derivative")
        run("v:partition", _check_partition, w, fm, rep, "v:partition")
    if "identities" in parts:
        run("identity:diagonal-derivative", _check_diag_derivatives, w, fm, rep, "identity:diagonal-derivative")
        run("identity:rightmost-column", _check_rrm, w, fm, rep)
        run("identity:k-determinant", _check_kdet, w, fm, rep)
        run("identity:partition", _check_partition, w, fm, rep, "identity:partition")
        run("identity:hat-compatibility", _check_hat, w, fm, rep)
        run("identity:tilde-scaling", _check_tilde, w, rep)
        run("identity:levels", _check_levels, w, rep)
    if "bounds" in parts:
        run("bounds", _check_bounds, w, fm, rep, M, samples, seed, containment_max_r)
    rep.elapsed = time.perf_counter() - t0
    return rep


def cross_checks(w: Permutation, *, M=1, samples: int = 10_000, seed: int = 0) -> CheckReport:
    """Reduction compatibility, level identities and domain containment."""
    t0 = time.perf_counter()
    fm = forward_map(w)
    rep = CheckReport(w.one_line())
    _check_hat(w, fm, rep)
    _check_tilde(w, rep)
    _check_levels(w, rep)
    bad, wit = bounds_containment(w, M, samples, seed, fm)
    rep.add("bounds:containment", bad == 0, {"violations": bad, "first": wit})
    rep.elapsed = time.perf_counter() - t0
    return rep


# --- sweeps -----------------------------------------------------------------

@dataclass(frozen=True)
class SweepConfig:
    r: int
    parts: tuple[str, ...] = PARTS
    sample: int | None = None
    seed: int = 0
    points: int = 50
    M: str = "1"
    samples: int = 10_000
    symbolic_max_r: int = 4
    containment_max_r: int = 4
    budget_seconds: float | None = None

    def __post_init__(self):
        if self.sample is not None and self.sample < 1:
            raise ValueError("sample count must be at least 1")
        if not 1 <= self.r <= 12:
            raise ValueError("r must lie in 1..12")
        bad = set(self.parts) - set(PARTS)
        if bad:
            raise ValueError(f"unknown parts {sorted(bad)}")

    def elements(self) -> list[Permutation]:
        if self.sample is None:
            return list(all_permutations(self.r))
        return sample_permutations(self.r, self.sample, self.seed)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["parts"] = list(self.parts)
        d["mode"] = "exhaustive" if self.sample is None else "sample"
        return d


@dataclass
class SweepReport:
    config: SweepConfig
    reports: list[CheckReport]
    expected: int
    elapsed: float = 0.0

    @property
    def passed(self) -> int:
        return sum(1 for r in self.reports if r.passed)

    @property
    def ok(self) -> bool:
        return self.passed == self.expected and len(self.reports) == self.expected

    def first_failures(self, limit: int = 5) -> list[dict]:
        out = []
        for r in self.reports:
            for c in r.failures():
                out.append({"w": r.w, **asdict(c)})
                if len(out) >= limit:
                    return out
        return out

    def to_document(self) -> str:
        """Reproducible structured text (timings excluded)."""
        doc = {
            "config": self.config.to_dict(),
            "examined": len(self.reports),
            "expected": self.expected,
            "passed": self.passed,
            "failures": self.first_failures(),
            "elements": {r.w: {c.name: c.status for c in r.results} for r in self.reports},
        }
        return json.dumps(doc, indent=1, sort_keys=True)

    def summary(self) -> str:
        return f"{self.passed}/{self.expected} pass"


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("SCHUBMAP_WORKERS", "1")))
    except ValueError:
        return 1


def _run_one(args) -> CheckReport:
    images, cfg = args
    w = Permutation(images)
    return verify_element(
        w, cfg.parts, points=cfg.points, seed=cfg.seed, M=Fraction(cfg.M), samples=cfg.samples,
        symbolic_max_r=cfg.symbolic_max_r, containment_max_r=cfg.containment_max_r,
    )


def verify_sweep(config: SweepConfig, workers: int | None = None) -> SweepReport:
    workers = default_workers() if workers is None else workers
    elems = config.elements()
    t0 = time.perf_counter()
    jobs = [(w.images, config) for w in elems]
    reports: list[CheckReport] = []
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as ex:
            for rep in ex.map(_run_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))):
                reports.append(rep)
                if config.budget_seconds and time.perf_counter() - t0 > config.budget_seconds:
                    break
    else:
        for job in jobs:
            reports.append(_run_one(job))
            if config.budget_seconds and time.perf_counter() - t0 > config.budget_seconds:
                break
    reports.sort(key=lambda r: tuple(int(x) for x in r.w.split(",")))
    return SweepReport(config, reports, len(elems), time.perf_counter() - t0)
