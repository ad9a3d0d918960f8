"""Command-line front end: ``python -m fastjacobi <subcommand> ...``.

Exit codes: 0 success, 2 usage or parameter error, 3 accuracy or
convergence failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import os
import statistics
import sys
import time

import numpy as np
from scipy import fft

from . import jacobi_ref as jr
from . import jactransform as jt
from . import phasefn as pf
from . import quadrule as qr
from .errors import (AccuracyError, ConsistencyError, DomainError, FormatError,
                     ParameterError)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_ACCURACY = 3
EXIT_IO = 4


def _fmt(x) -> str:
    return f"{x:.17g}"


def _floats(text: str) -> np.ndarray:
    text = text.strip()
    if not text:
        return np.zeros(0)
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise ParameterError(f"cannot parse number list {text!r}") from None


def _params(args) -> jr.JacobiParams:
    return jr.JacobiParams(args.a, args.b)


def _check_eps(eps: float) -> float:
    lo, hi = jt.EPS_RANGE
    if not (lo <= eps <= hi):
        raise ParameterError(f"eps must lie in [{lo:g}, {hi:g}]")
    return eps


def _open_out(path):
    return sys.stdout if path in (None, "-") else open(path, "w")


# --------------------------------------------------------------------------

def cmd_build_phase(args) -> int:
    params = _params(args)
    t0 = time.perf_counter()
    exp = pf.build_phase_expansion(params, args.nmax)
    elapsed = time.perf_counter() - t0
    pf.save(exp, args.output)
    size = os.path.getsize(args.output)
    print(f"built nmax={args.nmax} a={params.a:g} b={params.b:g} in {elapsed:.3f} s; "
          f"{args.output}: {size} bytes ({size / 2**20:.3f} MB)")
    return EXIT_OK


def _reference_ptilde(params, nu, t):
    return np.array([jr.ptilde_ref(params, float(v), np.array([s]))[0] for s, v in zip(t, nu)])


def cmd_eval(args) -> int:
    exp = pf.load(args.phase)
    params = exp.params
    rng = np.random.default_rng(args.seed)
    use_x = args.x is not None
    if args.random is not None:
        pts = rng.uniform(exp.tgrid.lo, exp.tgrid.hi, args.random)
        if use_x:
            pts = np.cos(pts)
    elif use_x:
        pts = _floats(args.x)
    elif args.t is not None:
        pts = _floats(args.t)
    else:
        raise ParameterError("give --t, --x or --random")
    if args.nu is not None:
        nu = np.full(pts.size, float(args.nu))
    else:
        nu = rng.uniform(jr.PHASE_CUTOFF, exp.nmax, pts.size)
    if np.any(nu < 0):
        raise ParameterError("nu must be nonnegative")
    if use_x:
        inside = np.abs(pts) < 1
        t = np.arccos(np.clip(pts, -1, 1))
    else:
        t = pts
        inside = (t > 0) & (t < np.pi)
    on_table = inside & (nu >= jr.PHASE_CUTOFF) & (nu <= exp.nmax) \
        & (t >= exp.tgrid.lo) & (t <= exp.tgrid.hi)
    low = inside & (nu < jr.PHASE_CUTOFF)  # small degrees: recurrence or closed form
    vals = np.full(pts.size, np.nan)
    if on_table.any():
        vals[on_table] = pf.eval_ptilde(exp, t[on_table], nu[on_table])
    if low.any():
        vals[low] = _reference_ptilde(params, nu[low], t[low])
    ok = on_table | low
    pref = np.ones(pts.size)
    if use_x and ok.any():
        pref[ok] = jr.norm_constant(params, nu[ok]) * jr.trig_weight(params, t[ok])
        vals[ok] /= pref[ok]

    kind = "p" if use_x else "ptilde"
    out = _open_out(args.output)
    try:
        cols = "x" if use_x else "t"
        header = f"# eval a={params.a!r} b={params.b!r} kind={kind}\n{cols},nu,value"
        if args.compare_recurrence:
            header += ",reference,abs_error"
        print(header, file=out)
        worst = 0.0
        for i in range(pts.size):
            if not ok[i]:
                print(f"{_fmt(pts[i])},{_fmt(nu[i])},nan,out-of-range", file=out)
                continue
            row = f"{_fmt(pts[i])},{_fmt(nu[i])},{_fmt(vals[i])}"
            if args.compare_recurrence:
                ref = _reference_ptilde(params, nu[i:i + 1], t[i:i + 1])[0] / pref[i]
                err = abs(vals[i] - ref)
                worst = max(worst, err)
                row += f",{_fmt(ref)},{_fmt(err)}"
            print(row, file=out)
    finally:
        if out is not sys.stdout:
            out.close()
    if args.compare_recurrence:
        print(f"max abs error vs recurrence: {worst:.3e}", file=sys.stderr)
    flagged = int((~ok).sum())
    if flagged:
        print(f"{flagged} point(s) out of range", file=sys.stderr)
    return EXIT_OK


def cmd_quad(args) -> int:
    params = _params(args)
    kind = qr.MODIFIED if args.kind == "modified" else qr.STANDARD
    rule = qr.modified_gauss_jacobi(params, args.n) if kind == qr.MODIFIED \
        else qr.gauss_jacobi(params, args.n)
    out = _open_out(args.output)
    try:
        print(f"# gauss-jacobi a={params.a!r} b={params.b!r} n={args.n} kind={kind}", file=out)
        for x, w in zip(rule.nodes, rule.weights):
            print(f"{_fmt(x)},{_fmt(w)}", file=out)
    finally:
        if out is not sys.stdout:
            out.close()
    if args.verify:
        ref = qr.gauss_jacobi_reference(params, args.n, kind)
        werr = np.max(np.abs(rule.weights - ref.weights) / np.abs(ref.weights))
        xerr = np.max(np.abs(rule.nodes - ref.nodes))
        print(f"max relative weight error {werr:.3e}; max node error {xerr:.3e}", file=sys.stderr)
    return EXIT_OK


def cmd_transform(args) -> int:
    exp = pf.load(args.phase)
    rng = np.random.default_rng(args.seed)
    if args.random is not None:
        k = np.arange(args.random)
        x = rng.standard_normal(args.random) / np.maximum(k, 1) ** args.decay
    elif args.input is not None:
        x = jt.read_vector(args.input)
    else:
        raise ParameterError("give --input or --random")
    if x.size == 0:
        raise ParameterError("empty vector")
    t0 = time.perf_counter()
    plan = jt.build_transform_plan(exp, x.size, _check_eps(args.eps))
    t1 = time.perf_counter()
    apply = jt.forward if args.direction == "forward" else jt.inverse
    y = apply(plan, x)
    t2 = time.perf_counter()
    if args.output is not None:
        jt.write_vector(args.output, y)
    print(f"n={x.size} rank={plan.rank} plan {t1 - t0:.3f} s, {args.direction} {t2 - t1:.3f} s",
          file=sys.stderr)
    if args.verify_dense:
        J = jt.dense_jacobi_matrix(exp.params, x.size)
        ref = J @ x if args.direction == "forward" else J.T @ x
        print(f"max deviation from dense matrix {np.abs(y - ref).max():.3e}", file=sys.stderr)
    if args.round_trip:
        back = jt.inverse(plan, y) if args.direction == "forward" else jt.forward(plan, y)
        print(f"round-trip error {np.abs(back - x).max():.3e}", file=sys.stderr)
    return EXIT_OK


def _median_time(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def cmd_bench(args) -> int:
    params = _params(args)
    rng = np.random.default_rng(args.seed)
    suites = ["construct", "eval", "quad", "transform"] if args.suite == "all" else [args.suite]
    out = _open_out(args.output)
    reps = args.repeats
    try:
        print("suite,size,median_seconds,per_item_seconds", file=out)
        for suite in suites:
            if suite == "construct":
                sizes = [2 ** k for k in range(10, 21, 2) if 2 ** k <= args.max_n]
                for n in sizes:
                    s = _median_time(lambda: pf.build_phase_expansion(params, n), reps)
                    print(f"construct,{n},{s:.6g},", file=out, flush=True)
            elif suite == "eval":
                exp = pf.build_phase_expansion(params, min(args.max_n, 2 ** 20))
                m = 100_000
                t = rng.uniform(exp.tgrid.lo, exp.tgrid.hi, m)
                v = rng.uniform(jr.PHASE_CUTOFF, exp.nmax, m)
                s = _median_time(lambda: pf.eval_ptilde(exp, t, v), reps)
                print(f"eval,{exp.nmax},{s:.6g},{s / m:.3g}", file=out, flush=True)
            elif suite == "quad":
                sizes = [n for n in (1000, 10_000, 100_000, 1_000_000) if n <= args.max_n]
                for n in sizes:
                    s = _median_time(lambda: qr.gauss_jacobi(params, n), reps)
                    print(f"quad,{n},{s:.6g},{s / n:.3g}", file=out, flush=True)
            elif suite == "transform":
                nmax = min(args.max_n, 2 ** 20)
                exp = pf.build_phase_expansion(params, nmax)
                n = 2 ** 12
                while n <= nmax:
                    plan = jt.build_transform_plan(exp, n, 1e-12)
                    x = rng.standard_normal(n)
                    s = _median_time(lambda: jt.forward(plan, x), reps)
                    print(f"transform,{n},{s:.6g},{s / n:.3g}", file=out, flush=True)
                    del plan
                    n *= 4
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


# --------------------------------------------------------------------------

def _add_ab(p):
    p.add_argument("-a", type=float, required=True, help="parameter a in [-1/2, 1/2]")
    p.add_argument("-b", type=float, required=True, help="parameter b in [-1/2, 1/2]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fastjacobi",
                                     description="Fast Jacobi polynomial evaluation, "
                                                 "quadrature and transforms.")
    parser.add_argument("--seed", type=int, default=0, help="seed for random inputs")
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker threads for FFTs (default: all cores)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-phase", help="build and save a phase expansion")
    _add_ab(p)
    p.add_argument("--nmax", type=int, required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_build_phase)

    p = sub.add_parser("eval", help="evaluate P~ (t points) or P (x points) from a phase file")
    p.add_argument("phase")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--t", help="comma-separated angles in (0, pi)")
    g.add_argument("--x", help="comma-separated points in (-1, 1); evaluates P")
    p.add_argument("--random", type=int, help="use this many random angles (with --x: cosines)")
    p.add_argument("--nu", type=float, help="degree (default: random per point)")
    p.add_argument("--compare-recurrence", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("quad", help="write a Gauss-Jacobi rule as CSV")
    _add_ab(p)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--kind", choices=["standard", "modified"], default="standard")
    p.add_argument("--verify", action="store_true", help="compare with the recurrence rule")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_quad)

    p = sub.add_parser("transform", help="apply the forward or inverse Jacobi transform")
    p.add_argument("phase")
    p.add_argument("--direction", choices=["forward", "inverse"], default="forward")
    p.add_argument("-i", "--input", help="vector file (u64 length, then f64 values)")
    p.add_argument("--random", type=int, help="use a random vector of this length instead")
    p.add_argument("--decay", type=float, default=0.0,
                   help="random entries scaled by k^-decay")
    p.add_argument("--eps", type=float, default=1e-12)
    p.add_argument("-o", "--output")
    p.add_argument("--verify-dense", action="store_true")
    p.add_argument("--round-trip", action="store_true")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("bench", help="timing sweeps, CSV of median wall-clock times")
    p.add_argument("--suite", choices=["construct", "eval", "quad", "transform", "all"],
                   default="all")
    p.add_argument("-a", type=float, default=-0.25)
    p.add_argument("-b", type=float, default=1 / 3)
    p.add_argument("--max-n", type=int, default=2 ** 20)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be positive")
    try:
        with fft.set_workers(args.threads):
            return args.func(args)
    except (ParameterError, DomainError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AccuracyError, ConsistencyError) as exc:
        print(f"accuracy failure: {exc}", file=sys.stderr)
        return EXIT_ACCURACY
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
