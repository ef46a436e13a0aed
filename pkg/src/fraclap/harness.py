"""Convergence studies on refinement ladders: error metrics, rates and reports."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .assembly import assemble_stiffness
from .mesh import ProblemParams, build_mesh, resolve_grading
from .precond import dominant_preconditioner
from .problems import ExactSolution, SourceTerm, exact_nodal, sample_source
from .solve import DiscreteSolution, solve_direct, solve_preconditioned

log = logging.getLogger(__name__)

# Published errors for the two reference experiments, keyed by (alpha, grading rule).
REFERENCE_TABLE1 = {
    (1.2, "1"): [1.1269e-3, 7.4281e-4, 4.8986e-4, 3.2311e-4],
    (1.8, "1"): [2.7320e-5, 1.4829e-5, 7.9970e-6, 4.2989e-6],
    (1.2, "4/alpha"): [4.1583e-5, 1.0628e-5, 2.6919e-6, 6.7824e-7],
    (1.8, "4/alpha"): [7.6424e-6, 2.0649e-6, 5.5008e-7, 1.4495e-7],
}
REFERENCE_RATES1 = {
    (1.2, "1"): [0.6013, 0.6006, 0.6003],
    (1.8, "1"): [0.8815, 0.8909, 0.8955],
    (1.2, "4/alpha"): [1.9682, 1.9811, 1.9888],
    (1.8, "4/alpha"): [1.8880, 1.9083, 1.9240],
}
REFERENCE_TABLE2 = {
    (1.2, "1"): [2.9193e-2, 2.2619e-2, 1.7435e-2, 1.3395e-2],
    (1.8, "1"): [5.6776e-2, 4.3468e-2, 3.3112e-2, 2.5161e-2],
    (1.2, "2/sigma"): [2.7820e-3, 6.9631e-4, 1.7418e-4, 4.3557e-5],
    (1.8, "2/sigma"): [5.0311e-3, 1.3190e-3, 3.4157e-4, 8.7691e-5],
}
REFERENCE_RATES2 = {
    (1.2, "1"): [0.3681, 0.3755, 0.3804],
    (1.8, "1"): [0.3853, 0.3926, 0.3962],
    (1.2, "2/sigma"): [1.9983, 1.9992, 1.9996],
    (1.8, "2/sigma"): [1.9315, 1.9492, 1.9617],
}
REFERENCE_LADDER = (100, 200, 400, 800)
REFERENCE_SIGMA = 0.4

# (relative error tolerance, absolute rate tolerance)
TABLE_TOLERANCES = {1: (0.01, 0.02), 2: (0.02, 0.03)}


@dataclass(frozen=True)
class ReportRow:
    N: int
    E: float
    rate: float | None = None


@dataclass
class ConvergenceReport:
    problem: str
    alpha: float
    r: float
    metric: str
    rule: str = ""
    rows: list[ReportRow] = field(default_factory=list)

    def errors(self) -> np.ndarray:
        return np.array([row.E for row in self.rows])

    def rates(self) -> list[float | None]:
        return [row.rate for row in self.rows]


def convergence_rate(e_coarse: float, e_fine: float) -> float:
    """log2(E^{N/2} / E^N)."""
    return math.log2(e_coarse / e_fine)


def exact_error(sol: DiscreteSolution, exact) -> float:
    """max_i |u(x_i) - u_i| over all nodes; the boundary nodes contribute 0."""
    exact = np.asarray(exact, dtype=float)
    if exact.shape == (sol.mesh.n_interior + 2,):
        exact = exact[1:-1]
    if exact.shape != sol.values.shape:
        raise ValueError(f"exact values have shape {exact.shape}, solution {sol.values.shape}")
    return float(np.abs(exact - sol.values).max(initial=0.0))


def self_convergence_error(coarse: DiscreteSolution, fine: DiscreteSolution) -> float:
    """max_{0<=i<=N} |u^{N/2}_i - u^N_{2i}| on nested meshes."""
    cn, fn = coarse.mesh.nodes, fine.mesh.nodes
    if 2 * coarse.mesh.N != fine.mesh.N or not np.array_equal(cn, fn[::2]):
        raise ValueError(
            f"meshes with N={coarse.mesh.N} and N={fine.mesh.N} are not nested"
        )
    return float(np.abs(coarse.nodal() - fine.nodal()[::2]).max())


@dataclass(frozen=True)
class StudyConfig:
    """One convergence study.

    ``grading`` holds rules: numbers as strings ('1', '2.5') or '4/alpha',
    '2/sigma'.  ``source`` is 'one' (exact-error metric against the Getoor
    solution) or 'power:SIGMA' (self-convergence metric).
    """

    source: str = "one"
    alphas: tuple[float, ...] = (1.2, 1.8)
    grading: tuple[str, ...] = ("1", "4/alpha")
    n_ladder: tuple[int, ...] = REFERENCE_LADDER
    solver: str = "direct"
    T: float = 0.5

    def __post_init__(self) -> None:
        if self.solver not in ("direct", "precond"):
            raise ValueError(f"solver must be 'direct' or 'precond', got {self.solver!r}")
        ladder = list(self.n_ladder)
        if not ladder:
            raise ValueError("empty N ladder")
        for a, b in zip(ladder, ladder[1:]):
            if b != 2 * a:
                raise ValueError(f"N ladder must double at every step, got {ladder}")
        SourceTerm.parse(self.source, self.domain)

    @property
    def domain(self) -> tuple[float, float]:
        return (0.0, 2.0 * self.T)

    @property
    def source_term(self) -> SourceTerm:
        return SourceTerm.parse(self.source, self.domain)

    @property
    def metric(self) -> str:
        return "exact-error" if self.source_term.kind == "constant_one" else "self-convergence"


def table_config(table: int, **overrides) -> StudyConfig:
    if table == 1:
        base = StudyConfig(source="one", grading=("1", "4/alpha"))
    elif table == 2:
        base = StudyConfig(source=f"power:{REFERENCE_SIGMA:g}", grading=("1", "2/sigma"))
    else:
        raise ValueError(f"table must be 1 or 2, got {table}")
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return replace(base, **overrides)


class _Cell:
    """Solutions for one (alpha, r) pair, solved once per N."""

    def __init__(self, config: StudyConfig, alpha: float, r: float, observer=None):
        self.config, self.alpha, self.r = config, alpha, r
        self.source = config.source_term
        self.observer = observer
        self._cache: dict[int, DiscreteSolution] = {}

    def solve(self, N: int) -> DiscreteSolution:
        if N in self._cache:
            return self._cache[N]
        mesh = build_mesh(ProblemParams(self.alpha, self.r, self.config.T, N))
        A = assemble_stiffness(mesh, self.alpha)
        F = sample_source(self.source, self.alpha, mesh)
        if self.config.solver == "direct":
            sol = solve_direct(A, F)
        else:
            sol = solve_preconditioned(A, F, dominant_preconditioner(mesh, self.alpha))
        if self.observer is not None:
            self.observer(self.alpha, self.r, A, F, sol)
        self._cache[N] = sol
        return sol

    def error(self, N: int) -> float:
        fine = self.solve(N)
        exact_sol = ExactSolution.for_source(self.source)
        if exact_sol.kind == "getoor":
            exact = exact_nodal(exact_sol, self.alpha, fine.mesh)
            return exact_error(fine, exact)
        if N % 2:
            raise ValueError(f"self-convergence needs even N, got {N}")
        return self_convergence_error(self.solve(N // 2), fine)


def run_study(config: StudyConfig, observer=None) -> list[ConvergenceReport]:
    """One report per (alpha, grading rule), in configuration order.

    ``observer(alpha, r, A, F, sol)``, if given, is called once for every
    linear system solved, including the N/2 solves of self-convergence studies.
    """
    src = config.source_term
    reports = []
    for alpha in config.alphas:
        src.validate(alpha)
        for rule in config.grading:
            r = resolve_grading(rule, alpha, src.sigma)
            cell = _Cell(config, alpha, r, observer)
            report = ConvergenceReport(src.label, alpha, r, config.metric, rule)
            prev = None
            for N in config.n_ladder:
                try:
                    E = cell.error(N)
                except Exception as exc:
                    raise RuntimeError(
                        f"study failed at source={src.label} alpha={alpha} r={r:g} N={N}: {exc}"
                    ) from exc
                rate = convergence_rate(prev, E) if prev is not None else None
                report.rows.append(ReportRow(N, E, rate))
                log.info("alpha=%g r=%g N=%d E=%.4e", alpha, r, N, E)
                prev = E
            reports.append(report)
    return reports


def _g6(v: float | None) -> str:
    return "" if v is None else f"{v:.6g}"


def format_csv(reports: list[ConvergenceReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["problem", "alpha", "r", "N", "E", "rate"])
    for rep in reports:
        for row in rep.rows:
            w.writerow([rep.problem, _g6(rep.alpha), _g6(rep.r), row.N, _g6(row.E), _g6(row.rate)])
    return buf.getvalue()


def format_markdown(reports: list[ConvergenceReport]) -> str:
    header = ["problem", "alpha", "r", "N", "E", "rate"]
    body = [
        [rep.problem, f"{rep.alpha:g}", f"{rep.r:.4g}", str(row.N), f"{row.E:.4e}",
         "" if row.rate is None else f"{row.rate:.4f}"]
        for rep in reports
        for row in rep.rows
    ]
    widths = [max(len(h), *(len(r[k]) for r in body)) if body else len(h)
              for k, h in enumerate(header)]
    lines = [
        "| " + " | ".join(h.ljust(w) for h, w in zip(header, widths)) + " |",
        "|" + "|".join("-" * (w + 2) for w in widths) + "|",
    ]
    lines += ["| " + " | ".join(c.rjust(w) for c, w in zip(r, widths)) + " |" for r in body]
    return "\n".join(lines) + "\n"


def read_csv_report(path) -> list[ConvergenceReport]:
    """Inverse of ``format_csv`` (rule names are not stored)."""
    reports: dict[tuple, ConvergenceReport] = {}
    with open(Path(path), newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            key = (rec["problem"], float(rec["alpha"]), float(rec["r"]))
            metric = "exact-error" if rec["problem"] == "one" else "self-convergence"
            rep = reports.setdefault(key, ConvergenceReport(key[0], key[1], key[2], metric))
            rate = float(rec["rate"]) if rec["rate"] else None
            rep.rows.append(ReportRow(int(rec["N"]), float(rec["E"]), rate))
    return list(reports.values())


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_against_reference(reports: list[ConvergenceReport], table: int) -> list[CheckResult]:
    """Compare errors and rates with the published values for the matching cells."""
    ref_e = REFERENCE_TABLE1 if table == 1 else REFERENCE_TABLE2
    ref_r = REFERENCE_RATES1 if table == 1 else REFERENCE_RATES2
    e_tol, r_tol = TABLE_TOLERANCES[table]
    out = []
    for rep in reports:
        key = (rep.alpha, rep.rule)
        if key not in ref_e:
            continue
        for row in rep.rows:
            if row.N not in REFERENCE_LADDER:
                continue
            k = REFERENCE_LADDER.index(row.N)
            ref = ref_e[key][k]
            rel = abs(row.E - ref) / ref
            name = f"table{table} alpha={rep.alpha:g} r={rep.rule} N={row.N}"
            out.append(CheckResult(name + " E", rel <= e_tol,
                                   f"E={row.E:.4e} ref={ref:.4e} rel={rel:.2e} tol={e_tol}"))
            if row.rate is not None and k > 0:
                rref = ref_r[key][k - 1]
                diff = abs(row.rate - rref)
                out.append(CheckResult(name + " rate", diff <= r_tol,
                                       f"rate={row.rate:.4f} ref={rref:.4f} diff={diff:.4f} tol={r_tol}"))
    return out


def parse_config_file(path) -> dict[str, str]:
    """Plain key=value lines; '#' starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip().replace("_", "-")] = value.strip()
    return out
