"""Command line entry point: ``fraclap study`` and ``fraclap solve``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys

import numpy as np

from .assembly import assemble_stiffness, write_matrix
from .harness import (
    check_against_reference,
    format_csv,
    format_markdown,
    parse_config_file,
    run_study,
    table_config,
)
from .mesh import ProblemParams, build_mesh, resolve_grading
from .precond import dominant_preconditioner
from .problems import ExactSolution, SourceTerm, exact_nodal, sample_source
from .solve import relative_residual, solve_direct, solve_preconditioned

STUDY_KEYS = ("table", "alpha", "r", "sigma", "n-ladder", "solver", "out", "format")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(" ", "").split(",") if v)


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.replace(" ", "").split(",") if v)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _study(args: argparse.Namespace) -> int:
    opts = parse_config_file(args.config) if args.config else {}
    unknown = set(opts) - set(STUDY_KEYS)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for key in STUDY_KEYS:
        value = getattr(args, key.replace("-", "_"))
        if value is not None:
            opts[key] = str(value)
    if "table" not in opts:
        raise ValueError("--table is required (on the command line or in --config)")
    table = int(opts["table"])

    overrides = {}
    if "alpha" in opts:
        overrides["alphas"] = _floats(opts["alpha"])
    if "n-ladder" in opts:
        overrides["n_ladder"] = _ints(opts["n-ladder"])
    if "solver" in opts:
        overrides["solver"] = opts["solver"]
    if "sigma" in opts:
        if table != 2:
            raise ValueError("--sigma only applies to table 2")
        overrides["source"] = f"power:{float(opts['sigma']):g}"
    if opts.get("r", "auto") != "auto":
        resolve_grading(opts["r"], 1.5, 1.0)  # syntax check
        overrides["grading"] = (opts["r"],)
    config = table_config(table, **overrides)

    reports = run_study(config)
    fmt = opts.get("format", "csv")
    if fmt not in ("csv", "md"):
        raise ValueError(f"format must be csv or md, got {fmt!r}")
    _emit(format_csv(reports) if fmt == "csv" else format_markdown(reports), opts.get("out"))

    if args.check:
        results = check_against_reference(reports, table)
        if not results:
            print("check: no configuration matches the reference tables", file=sys.stderr)
            return 1
        for res in results:
            print(f"{'PASS' if res.passed else 'FAIL'}  {res.name}: {res.detail}", file=sys.stderr)
        failed = sum(not res.passed for res in results)
        print(f"check: {len(results) - failed}/{len(results)} passed", file=sys.stderr)
        return 1 if failed else 0
    return 0


def _solve(args: argparse.Namespace) -> int:
    T = args.T
    src = SourceTerm.parse(args.source, (0.0, 2.0 * T))
    r = resolve_grading(args.r, args.alpha, src.sigma)
    mesh = build_mesh(ProblemParams(args.alpha, r, T, args.n))
    A = assemble_stiffness(mesh, args.alpha)
    if args.dump_matrix:
        write_matrix(args.dump_matrix, A)
    F = sample_source(src, args.alpha, mesh)
    if args.solver == "direct":
        sol = solve_direct(A, F)
    else:
        sol = solve_preconditioned(A, F, dominant_preconditioner(mesh, args.alpha))

    exact = None
    exact_sol = ExactSolution.for_source(src)
    if exact_sol.kind == "getoor":
        exact = np.concatenate([[0.0], exact_nodal(exact_sol, args.alpha, mesh), [0.0]])
    u = sol.nodal()
    rows = [["j", "x", "u"] + (["exact"] if exact is not None else [])]
    for j, (x, v) in enumerate(zip(mesh.nodes, u)):
        rows.append([j, repr(float(x)), repr(float(v))]
                    + ([repr(float(exact[j]))] if exact is not None else []))
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        csv.writer(out, lineterminator="\n").writerows(rows)
    finally:
        if args.out:
            out.close()

    msg = (f"alpha={args.alpha:g} r={r:.6g} N={args.n} solver={sol.method} "
           f"iterations={sol.iterations} backward_error={sol.residual:.2e} "
           f"relative_residual={relative_residual(A, sol.values, F):.2e}")
    if exact is not None:
        msg += f" max_nodal_error={np.abs(u - exact).max():.4e}"
    print(msg, file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fraclap",
        description="Difference-quadrature solver for the 1D fractional Laplacian on graded meshes.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    st = sub.add_parser("study", help="run a convergence study (reference tables 1 and 2)")
    st.add_argument("--table", type=int, choices=(1, 2))
    st.add_argument("--alpha", help="comma separated fractional orders")
    st.add_argument("--r", help="grading exponent, a rule like 4/alpha, or 'auto' (table default)")
    st.add_argument("--sigma", type=float, help="singularity exponent of the table 2 source")
    st.add_argument("--n-ladder", dest="n_ladder", help="comma separated doubling N values")
    st.add_argument("--solver", choices=("direct", "precond"))
    st.add_argument("--out", help="output file (default stdout)")
    st.add_argument("--format", choices=("csv", "md"))
    st.add_argument("--config", help="key=value file with any of the options above")
    st.add_argument("--check", action="store_true",
                    help="compare with the published values; nonzero exit on mismatch")
    st.set_defaults(func=_study)

    so = sub.add_parser("solve", help="solve one problem and write nodal values as CSV")
    so.add_argument("--alpha", type=float, required=True)
    so.add_argument("--r", required=True, help="grading exponent or rule (4/alpha, 2/sigma)")
    so.add_argument("--n", type=int, required=True, help="half the number of cells")
    so.add_argument("--source", default="one", help="'one' or 'power:SIGMA'")
    so.add_argument("--T", type=float, default=0.5, help="half-width of the domain (0, 2T)")
    so.add_argument("--solver", choices=("direct", "precond"), default="direct")
    so.add_argument("--dump-matrix", dest="dump_matrix", help="write the stiffness matrix here")
    so.add_argument("--out", help="output CSV (default stdout)")
    so.set_defaults(func=_solve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"fraclap: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
