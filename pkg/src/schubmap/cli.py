"""Command-line front end.

Every subcommand prints a header recording its resolved configuration, then
its result in one of three formats: ``text`` (default), ``structured`` (one
JSON document with sorted keys and no timings) or ``tex``. Exit status is 0 on
success, 1 when a check fails and 2 on a usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Callable

from . import __version__
from .biratmap import (
    diag_closed_form,
    domain_bounds,
    exponents,
    forward_map,
    forward_split,
    inverse_export,
    inverse_map,
    jacobian,
    k_system,
    superdiag_closed_form,
    udl_decompose,
)
from .errors import SchubmapError
from .jacquet import (
    BumpSpec,
    IBPScheme,
    QuadratureParams,
    bessel_kernel,
    gl2_continued,
    gl2_direct,
    gl2_reference,
    gl3_change_of_variables_check,
    transformed_integrand,
)
from .ratfunc import RatFunc
from .verify import PARTS, SweepConfig, default_workers, verify_sweep
from .weyl import MAX_R, Permutation, VarIndex, is_free

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# --- value parsing ----------------------------------------------------------

def parse_perm(text: str) -> Permutation:
    try:
        w = Permutation.parse(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if w.r > MAX_R:
        raise UsageError(f"r = {w.r} exceeds the limit {MAX_R}")
    return w


def parse_var(text: str, w: Permutation) -> VarIndex:
    try:
        a, b = (int(t) for t in text.split(","))
    except ValueError as exc:
        raise UsageError(f"--var expects 'a,b', got {text!r}") from exc
    if not (1 <= a < b <= w.r) or not is_free(w, a, b):
        raise UsageError(f"n[{a},{b}] is not a free variable of {w}")
    return VarIndex(a, b)


def parse_number(text: str):
    """``p/q`` or an integer gives a Fraction; ``a+bi`` or a float gives a complex or float."""
    t = text.strip().replace(" ", "")
    try:
        return Fraction(t)
    except ValueError:
        pass
    try:
        if t.endswith("i"):
            return complex(t[:-1] + "j")
        return float(t)
    except ValueError as exc:
        raise UsageError(f"not a number: {text!r}") from exc


def parse_vector(text: str | None, r: int | None = None, name: str = "vector"):
    if text is None:
        return None
    vals = [parse_number(t) for t in text.split(",")] if text.strip() else []
    if r is not None and len(vals) != r:
        raise UsageError(f"{name} needs {r} entries, got {len(vals)}")
    return vals


def fmt_num(x) -> str:
    if isinstance(x, complex):
        if x.imag == 0:
            return f"{x.real:.15g}"
        return f"{x.real:.15g}{x.imag:+.15g}i"
    if isinstance(x, float):
        return f"{x:.15g}"
    return str(x)


# --- output -----------------------------------------------------------------

class Output:
    def __init__(self, command: str, fmt: str, config: dict, stream):
        self.command = command
        self.fmt = fmt
        self.config = config
        self.stream = stream
        self.result: dict = {}
        self.lines: list[str] = []
        self.tex_lines: list[str] = []

    def put(self, key: str, value, text: str | None = None, tex: str | None = None) -> None:
        self.result[key] = value
        self.lines.append(text if text is not None else f"{key} = {value}")
        if tex is not None:
            self.tex_lines.append(tex)

    def emit(self, status: str) -> None:
        cfg = {k: v for k, v in sorted(self.config.items())}
        if self.fmt == "structured":
            doc = {"command": self.command, "config": cfg, "status": status, "result": self.result,
                   "version": __version__}
            self.stream.write(json.dumps(doc, indent=1, sort_keys=True, ensure_ascii=False) + "\n")
            return
        mark = "%" if self.fmt == "tex" else "#"
        self.stream.write(f"{mark} schubmap {self.command}\n")
        for k, v in cfg.items():
            self.stream.write(f"{mark} {k} = {v}\n")
        body = self.tex_lines if self.fmt == "tex" and self.tex_lines else self.lines
        for line in body:
            self.stream.write(line + "\n")
        self.stream.write(f"{mark} status: {status}\n")


def w_small(v: VarIndex) -> bool:
    return v.b < 10


def _tex_var(kind: str, v: VarIndex) -> str:
    sep = "" if w_small(v) else ","
    return f"{kind}_{{{v.a}{sep}{v.b}}}"


def _expr(out: Output, key: str, f: RatFunc, tex_lhs: str) -> None:
    out.put(key, str(f), f"{key} = {f}", f"{tex_lhs} &= {f.tex()} \\\\")


# --- commands ---------------------------------------------------------------

def cmd_map(args, out: Output) -> int:
    fm = forward_map(args.w)
    for v in sorted(fm.images, key=lambda v: (v.b, v.a)):
        _expr(out, f"u[{v.a},{v.b}]", fm.images[v], _tex_var("u", v))
    return EXIT_OK


def cmd_inverse(args, out: Output) -> int:
    for key, s in inverse_export(args.w, expand=args.expand).items():
        out.put(key, s)
    if args.expand:
        for v, f in inverse_map(args.w).items():
            out.tex_lines.append(f"{_tex_var('n', v)} &= {f.expand().reduced().tex()} \\\\")
    return EXIT_OK


def cmd_split(args, out: Output) -> int:
    v = parse_var(args.var, args.w)
    parts = forward_split(args.w, v)
    for name, f in zip(("R_L", "R_1", "R_2"), parts):
        _expr(out, name, f, name.replace("_", "_{") + "}")
    total = parts[0] + parts[1] + parts[2]
    ok = total == forward_map(args.w).images[v]
    out.put("sum_matches_R", ok)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_udl(args, out: Output) -> int:
    w = args.w
    x, b = udl_decompose(w)
    xc, bc = superdiag_closed_form(w), diag_closed_form(w)
    ok = True
    for i, f in enumerate(x, 1):
        _expr(out, f"x[{i},{i + 1}]", f, f"x_{{{i},{i + 1}}}")
        ok &= f == xc[i - 1]
    for i, f in enumerate(b, 1):
        _expr(out, f"b[{i},{i}]", f, f"b_{{{i},{i}}}")
        ok &= f == bc[i - 1]
    out.put("closed_forms_match", ok)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_jacobian(args, out: Output) -> int:
    J = jacobian(args.w)
    names = [f"n[{v.a},{v.b}]" for v in J.order]
    out.put("order", names, "order = " + " > ".join(names))
    rows = [[str(e) for e in row] for row in J.matrix]
    out.put("matrix", rows, "matrix =\n" + "\n".join("  [" + ", ".join(r) + "]" for r in rows))
    out.put("upper_triangular", J.is_upper_triangular())
    _expr(out, "det", J.det_full, r"\det J")
    _expr(out, "predicted", J.predicted, r"(-1)^{t_w}\prod n^{b-a-1}")
    out.put("t_w", J.t_w)
    ok = J.is_upper_triangular() and J.det_full == J.predicted and J.det_diag == J.predicted
    out.put("det_matches", ok)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_ksystem(args, out: Output) -> int:
    v = parse_var(args.var, args.w)
    ks = k_system(args.w, v)
    out.put("cols", list(ks.cols))
    out.put("rows", list(ks.rows))
    out.put("K", [[str(e) for e in row] for row in ks.K],
            "K =\n" + "\n".join("  [" + ", ".join(str(e) for e in row) + "]" for row in ks.K))
    out.put("kappa", [list(r) for r in ks.kappa])
    out.put("kappa_det", ks.kappa_det)
    out.put("det_K", str(ks.det_K))
    dset = sorted(ks.det_set, key=lambda u: (u.b, u.a))
    out.put("det_set", [f"n[{u.a},{u.b}]" for u in dset])
    return EXIT_OK


def cmd_exponents(args, out: Output) -> int:
    w = args.w
    lam = parse_vector(args.lam, w.r, "--lambda")
    delta = parse_vector(args.delta, w.r, "--delta")
    if delta is not None:
        if any(not isinstance(d, Fraction) or d.denominator != 1 for d in delta):
            raise UsageError("--delta entries must be integers")
        delta = [int(d) % 2 for d in delta]
    ex = exponents(w, lam, delta)
    for key, row in ex.report().items():
        out.put(key, row, f"{key}: " + ", ".join(f"{k}={v}" for k, v in row.items()))
    out.put("sign_parity", list(ex.sign_parity))
    if delta is not None:
        out.put("global_sign", ex.global_sign())
    return EXIT_OK


def cmd_bounds(args, out: Output) -> int:
    M = parse_number(args.M)
    if not isinstance(M, Fraction) or M <= 0:
        raise UsageError("--M must be a positive rational")
    db = domain_bounds(args.w, M)
    for j, v in enumerate(db.order):
        _expr(out, f"h{j + 1}[{v.a},{v.b}]", db.h[j], f"h_{{{j + 1}}}")
    out.put("signs", list(db.signs))
    return EXIT_OK


def cmd_verify(args, out: Output) -> int:
    parts = tuple(p.strip() for p in args.parts.split(",") if p.strip())
    bad = set(parts) - set(PARTS)
    if bad or not parts:
        raise UsageError(f"--parts must be a subset of {','.join(PARTS)}")
    try:
        cfg = SweepConfig(args.r, parts, args.sample, args.seed, args.points, args.M, args.samples,
                          args.symbolic_max_r, args.containment_max_r, args.budget)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rep = verify_sweep(cfg, args.workers)
    doc = json.loads(rep.to_document())
    out.result.update(doc)
    out.lines.append(rep.summary())
    for f in rep.first_failures():
        out.lines.append(f"FAIL {f['w']}: {f['name']} {json.dumps(f['witness'], sort_keys=True)}")
    if len(rep.reports) < rep.expected:
        out.lines.append(f"budget exhausted after {len(rep.reports)} of {rep.expected} elements")
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_gl2(args, out: Output) -> int:
    mu = parse_number(args.mu)
    mu = complex(mu)
    q = QuadratureParams(epsabs=args.epsabs, epsrel=args.epsrel)
    if args.method == "direct":
        res = gl2_direct(mu, q)
    else:
        res = gl2_continued(mu, IBPScheme(args.k), BumpSpec(), q)
    ref = gl2_reference(mu)
    out.put("value", fmt_num(res.value))
    out.put("error_estimate", f"{res.error:.3g}")
    out.put("reference", fmt_num(ref))
    rel = abs(res.value - ref) / abs(ref) if ref else abs(res.value)
    out.put("relative_difference", f"{rel:.3g}")
    if res.warnings:
        out.put("quadrature_warnings", list(res.warnings))
    return EXIT_OK


def cmd_gl3(args, out: Output) -> int:
    w = args.w
    lam = parse_vector(args.lam, w.r, "--lambda")
    if lam is not None:
        lam = [complex(x) for x in lam]
    res = gl3_change_of_variables_check(lam, seed=args.seed, w=w, log2_samples=args.log2_samples,
                                        tau_points=args.tau_points)
    out.put("lh", fmt_num(res.lh))
    out.put("rh", fmt_num(res.rh))
    out.put("rh_error_estimate", f"{res.rh_error:.3g}")
    out.put("relative_error", f"{res.rel_error:.3g}")
    if res.tau is not None:
        t = res.tau
        out.put("tau", {"points": t.points, "phase": t.phase_ok, "magnitude": t.magnitude_ok,
                        "constants": t.constant_ok, "signs": t.sign_ok,
                        "numeric_max_rel": f"{t.numeric_max_rel:.3g}"})
    out.put("ok", res.ok)
    return EXIT_OK if res.ok else EXIT_FAIL


def cmd_bessel(args, out: Output) -> int:
    w = args.w
    d = len(forward_map(w).images)
    nu = parse_vector(args.nu, d, "--nu")
    zeta = parse_vector(args.zeta, d + 1, "--zeta")
    desc = bessel_kernel(w, nu, zeta)
    doc = desc.to_document()
    out.result.update(doc)
    out.lines.append(f"f = {doc['phase']['polynomial']}")
    out.lines.append("reciprocal = " + " + ".join(f"{t['coeff']}/{t['var']}" for t in doc["phase"]["reciprocal"]))
    out.lines.append("exponents: " + ", ".join(f"{k}:{v}" for k, v in doc["exponents"].items()))
    if desc.poly_phase is not None:
        out.tex_lines.append(f"f &= {desc.poly_phase.tex()} \\\\")
    return EXIT_OK


def cmd_integrand(args, out: Output) -> int:
    w = args.w
    lam = parse_vector(args.lam, w.r, "--lambda")
    delta = parse_vector(args.delta, w.r, "--delta")
    if delta is not None:
        delta = [int(x) % 2 for x in delta]
    doc = transformed_integrand(w, lam, delta).to_document()
    out.result.update(doc)
    out.lines.append(json.dumps(doc, sort_keys=True, ensure_ascii=False))
    return EXIT_OK


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "structured", "tex"), default="text")

    perm = argparse.ArgumentParser(add_help=False)
    perm.add_argument("--perm", required=True, help="one-line notation, e.g. 3,2,1")

    p = argparse.ArgumentParser(prog="schubmap", description="Birational maps on Schubert cells.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn: Callable, parents=(common, perm), **kw):
        sp = sub.add_parser(name, parents=list(parents), **kw)
        sp.set_defaults(fn=fn)
        return sp

    add("map", cmd_map, help="forward map u = R(n)")
    add("inverse", cmd_inverse, help="inverse map n = R^-1(u)").add_argument("--expand", action="store_true")
    add("split", cmd_split, help="R = R_L + R_1 + R_2").add_argument("--var", required=True)
    add("udl", cmd_udl, help="superdiagonal and diagonal of the UDL factorization")
    add("jacobian", cmd_jacobian, help="Jacobian in square order")
    add("ksystem", cmd_ksystem, help="K matrix of the inverse").add_argument("--var", required=True)
    sp = add("exponents", cmd_exponents, help="exponents of the transformed integrand")
    sp.add_argument("--lambda", dest="lam")
    sp.add_argument("--delta")
    add("bounds", cmd_bounds, help="domain bounds h_j").add_argument("--M", default="1")
    sp = add("integrand", cmd_integrand, help="Jacquet integrand descriptor")
    sp.add_argument("--lambda", dest="lam")
    sp.add_argument("--delta")
    sp = add("bessel", cmd_bessel, help="Bessel kernel descriptor")
    sp.add_argument("--nu")
    sp.add_argument("--zeta")

    sp = add("verify", cmd_verify, parents=(common,), help="sweep the checks over GL(r)")
    sp.add_argument("--r", type=int, required=True)
    sp.add_argument("--parts", default=",".join(PARTS))
    sp.add_argument("--sample", type=int)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--points", type=int, default=50)
    sp.add_argument("--M", default="1")
    sp.add_argument("--samples", type=int, default=10_000)
    sp.add_argument("--symbolic-max-r", type=int, default=4)
    sp.add_argument("--containment-max-r", type=int, default=4)
    sp.add_argument("--budget", type=float, help="stop after this many seconds")
    sp.add_argument("--workers", type=int, default=None)

    jq = sub.add_parser("jacquet", help="Jacquet integral numerics")
    jsub = jq.add_subparsers(dest="jcommand", required=True)
    sp = jsub.add_parser("gl2", parents=[common])
    sp.set_defaults(fn=cmd_gl2)
    sp.add_argument("--mu", required=True)
    sp.add_argument("--method", choices=("direct", "ibp"), default="direct")
    sp.add_argument("--k", type=int, default=0)
    sp.add_argument("--epsabs", type=float, default=QuadratureParams.epsabs)
    sp.add_argument("--epsrel", type=float, default=QuadratureParams.epsrel)
    sp = jsub.add_parser("gl3-check", parents=[common])
    sp.set_defaults(fn=cmd_gl3)
    sp.add_argument("--lambda", dest="lam")
    sp.add_argument("--perm", default="3,2,1")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--log2-samples", type=int, default=22)
    sp.add_argument("--tau-points", type=int, default=100)
    return p


def _config(args) -> dict:
    skip = {"fn", "format", "w", "command", "jcommand"}
    cfg = {k: v for k, v in vars(args).items() if k not in skip and v is not None}
    if "lam" in cfg:
        cfg["lambda"] = cfg.pop("lam")
    if getattr(args, "command", None) == "verify" and cfg.get("workers") is None:
        cfg["workers"] = default_workers()
    if "perm" in cfg:
        cfg["perm"] = args.w.one_line()
    # worker count never changes results; keep it out of reproducible output
    if args.format == "structured":
        cfg.pop("workers", None)
    return {k: (v if isinstance(v, (int, float, str, bool)) else str(v)) for k, v in cfg.items()}


def main(argv=None, stream=None) -> int:
    stream = sys.stdout if stream is None else stream
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    name = args.command if args.command != "jacquet" else f"jacquet {args.jcommand}"
    try:
        if hasattr(args, "perm"):
            args.w = parse_perm(args.perm)
        out = Output(name, args.format, _config(args), stream)
        code = args.fn(args, out)
    except UsageError as exc:
        sys.stderr.write(f"schubmap: error: {exc}\n")
        return EXIT_USAGE
    except SchubmapError as exc:
        sys.stderr.write(f"schubmap: {type(exc).__name__}: {exc}\n")
        # parameter outside the supported range counts as misuse
        return EXIT_USAGE if isinstance(exc, ValueError) else EXIT_FAIL
    out.emit("pass" if code == EXIT_OK else "fail")
    return code


if __name__ == "__main__":
    sys.exit(main())
