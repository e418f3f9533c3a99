"""Command-line interface: solve, diagnose, reproduce and export.

Exit codes: 0 success, 1 input or usage error, 2 breakdown without a
least squares solution (``solve`` only).
"""

import argparse
import os
import sys

import numpy as np

from . import problems
from .dense import read_matrix, read_vector
from .solvers import SolverConfig, gmres, rr_gmres, write_trace_csv
from .subspaces import ClassificationError, classify
from .svgplot import Curve, write_chart

EXIT_OK, EXIT_INPUT, EXIT_NO_SOLUTION = 0, 1, 2

# The relative breakdown test at 1e-12 would stop the gamma = 1e-12 curve at
# step 1 (h21 is 2.5e-13 ||A||); figures use a tighter threshold.
REPRODUCE_BREAKDOWN_TOL = 1e-14

WEAK = [(1.0, 0.0), (1.0, 1e-12), (1.0, 1e-8), (1.0, 1e-4)]
STRONG = [(1.0, 1.0), (1e-4, 1.0), (1e-8, 1.0), (1e-12, 1.0)]
RHOS = [1, 4, 8, 12]

# figure id -> (method, trace column, y-axis label)
EP_FIGURES = {
    "relres": ("gmres", "normal_resnorm_rel", "||A^T r_k|| / ||A^T b||"),
    "reserr": ("gmres", "res_err_rel", "||r_k - r_*|| / ||r_k||"),
    "sv": ("gmres", None, "singular values"),
    "rr-relres": ("rrgmres", "normal_resnorm_rel", "||A^T r_k|| / ||A^T b||"),
    "rr-reserr": ("rrgmres", "res_err_rel", "||r_k - r_*|| / ||r_k||"),
    "rr-sv": ("rrgmres", None, "singular values"),
}
DI_FIGURES = {"di-gmres": "gmres", "di-rrgmres": "rrgmres"}
FIGURES = list(EP_FIGURES) + list(DI_FIGURES)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _solver(method):
    return rr_gmres if method == "rrgmres" else gmres


def _fmt(v):
    return format(float(v), "g")


# --------------------------------------------------------------------------
# solve / diagnose


def cmd_solve(args, out=sys.stdout):
    a = read_matrix(args.matrix)
    b = read_vector(args.rhs)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got {a.shape[0]}x{a.shape[1]}")
    if b.shape[0] != a.shape[0]:
        raise ValueError(f"rhs has length {b.shape[0]}, matrix has {a.shape[0]} rows")
    x0 = None
    if args.x0:
        x0 = read_vector(args.x0)
        if x0.shape[0] != a.shape[0]:
            raise ValueError(f"x0 has length {x0.shape[0]}, expected {a.shape[0]}")
    config = SolverConfig(max_iter=args.maxiter, breakdown_tol=args.tol, variant=args.method)
    trace = _solver(args.method)(a, b, x0, config)
    if args.out:
        with open(args.out, "w") as fh:
            write_trace_csv(trace, fh)
    else:
        write_trace_csv(trace, out)
    if trace.breakdown_without_solution:
        bd = trace.breakdown
        note = f" ({trace.message})" if trace.message else ""
        print(f"breakdown at step {bd.step} (case {bd.kind}) without a least squares "
              f"solution{note}", file=sys.stderr)
        return EXIT_NO_SOLUTION
    return EXIT_OK


def cmd_diagnose(args, out=sys.stdout):
    a = read_matrix(args.matrix)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got {a.shape[0]}x{a.shape[1]}")
    profile = classify(a, args.tol, args.angle_tol)
    out.write(profile.report())
    return EXIT_OK


# --------------------------------------------------------------------------
# reproduce


def _write_csv(path, trace):
    with open(path, "w") as fh:
        write_trace_csv(trace, fh)


def _ep_runs(method, outdir, fig):
    config = SolverConfig(breakdown_tol=REPRODUCE_BREAKDOWN_TOL, variant=method)
    runs = {}
    for panel, params in (("weak", WEAK), ("strong", STRONG)):
        runs[panel] = []
        for gamma, delta in params:
            inst = problems.ep_diag_128(gamma, delta)
            trace = _solver(method)(inst.a, inst.b, inst.x0, config)
            name = f"{fig}_{panel}_g{_fmt(gamma)}_d{_fmt(delta)}.csv"
            _write_csv(os.path.join(outdir, name), trace)
            runs[panel].append(((gamma, delta), trace))
    return runs


def reproduce_ep(fig, outdir):
    method, column, ylabel = EP_FIGURES[fig]
    runs = _ep_runs(method, outdir, fig)
    written = []
    title_method = "RR-GMRES" if method == "rrgmres" else "GMRES"
    for panel, items in runs.items():
        curves = []
        for (gamma, delta), trace in items:
            label = f"({_fmt(gamma)}, {_fmt(delta)})"
            k = trace.column("k")
            if column is None:
                curves.append(Curve(f"max {label}", k, trace.column("sigma_max_h")))
                curves.append(Curve(f"min {label}", k, trace.column("sigma_min_h"), dashed=True))
            else:
                curves.append(Curve(label, k, trace.column(column)))
        if column is None:
            kmax = max([len(t) for _, t in items] + [1])
            ks = np.array([1.0, float(kmax)])
            d = problems.ep_diagonal()
            curves.append(Curve("sigma_1(A)", ks, np.full(2, d.max())))
            curves.append(Curve("sigma_r(A)", ks, np.full(2, d.min())))
        inconsistency = "gamma = 1" if panel == "weak" else "delta = 1"
        path = os.path.join(outdir, f"{fig}_{panel}.svg")
        write_chart(path, curves, title=f"{title_method}, {panel} inconsistency ({inconsistency})",
                    ylabel=ylabel)
        written.append(path)
    return written


def reproduce_di(fig, outdir):
    method = DI_FIGURES[fig]
    config = SolverConfig(variant=method)
    residual, sigma = [], []
    for rho in RHOS:
        inst = problems.strakos_gp_128(rho)
        trace = _solver(method)(inst.a, inst.b, inst.x0, config)
        _write_csv(os.path.join(outdir, f"{fig}_rho{rho}.csv"), trace)
        k = trace.column("k")
        residual.append(Curve(f"rho = {rho}", k, trace.column("resnorm_rel")))
        sigma.append(Curve(f"rho = {rho}", k, trace.column("sigma_min_h")))
    title_method = "RR-GMRES" if method == "rrgmres" else "GMRES"
    paths = [os.path.join(outdir, f"{fig}_residual.svg"), os.path.join(outdir, f"{fig}_sigma_min.svg")]
    write_chart(paths[0], residual, title=f"{title_method} on the GP test matrix",
                ylabel="||r_k|| / ||b||")
    write_chart(paths[1], sigma, title=f"{title_method} on the GP test matrix",
                ylabel="sigma_min(H)")
    return paths


def cmd_reproduce(args, out=sys.stdout):
    if args.figure not in FIGURES:
        raise UsageError(f"unknown figure {args.figure!r}; choose from {', '.join(FIGURES)}")
    os.makedirs(args.outdir, exist_ok=True)
    if args.figure in EP_FIGURES:
        reproduce_ep(args.figure, args.outdir)
    else:
        reproduce_di(args.figure, args.outdir)
    for name in sorted(os.listdir(args.outdir)):
        if name.startswith(args.figure + "_"):
            print(os.path.join(args.outdir, name), file=out)
    return EXIT_OK


# --------------------------------------------------------------------------
# export


def _parse_params(items):
    params = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"parameter {item!r} must look like name=value")
        try:
            params[key] = float(value)
        except ValueError:
            raise UsageError(f"parameter {key} needs a number, got {value!r}") from None
    return params


def cmd_export(args, out=sys.stdout):
    inst = problems.make(args.problem, **_parse_params(args.params))
    paths = problems.export(inst, args.outdir, args.stem)
    for key in ("A", "b", "params"):
        print(paths[key], file=out)
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser():
    p = _Parser(prog="singkrylov", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="run GMRES or RR-GMRES and print the CSV trace")
    s.add_argument("matrix")
    s.add_argument("rhs")
    s.add_argument("--method", choices=["gmres", "rrgmres"], default="gmres")
    s.add_argument("--maxiter", type=int, default=None)
    s.add_argument("--tol", type=float, default=1e-12, help="relative breakdown tolerance")
    s.add_argument("--x0", default=None, help="initial iterate file")
    s.add_argument("--out", default=None, help="write the CSV here instead of stdout")
    s.set_defaults(func=cmd_solve)

    d = sub.add_parser("diagnose", help="rank, index and EP/GP/DR classification")
    d.add_argument("matrix")
    d.add_argument("--tol", type=float, default=None, help="absolute rank tolerance")
    d.add_argument("--angle-tol", type=float, default=None, help="principal-angle cosine tolerance")
    d.set_defaults(func=cmd_diagnose)

    r = sub.add_parser("reproduce", help="regenerate a figure as CSV and SVG files")
    r.add_argument("figure", help=", ".join(FIGURES))
    r.add_argument("--outdir", default=".")
    r.set_defaults(func=cmd_reproduce)

    e = sub.add_parser("export", help="write a test problem in the matrix text format")
    e.add_argument("problem", help=", ".join(problems.GENERATORS))
    e.add_argument("params", nargs="*", help="name=value")
    e.add_argument("--outdir", default=".")
    e.add_argument("--stem", default=None)
    e.set_defaults(func=cmd_export)
    return p


def main(argv=None, out=None):
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, out)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
    except (ValueError, OSError, ClassificationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
