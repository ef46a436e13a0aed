"""Difference-quadrature solver for the 1D fractional Laplacian on graded meshes."""

from .assembly import (
    AssemblyError,
    StiffnessMatrix,
    analytic_row_sums,
    apply_operator,
    assemble_stiffness,
    dh2_apply,
    quadrature_coefficients,
    riesz_potential_hat,
)
from .harness import StudyConfig, check_against_reference, run_study, table_config
from .mesh import GradedMesh, ProblemParams, boundary_distance, build_mesh
from .precond import (
    DiagPreconditioner,
    build_B,
    build_preconditioner,
    dominance_report,
    dominant_preconditioner,
    precond_params,
)
from .problems import ExactSolution, SourceTerm, exact_nodal, sample_source, truncation_error
from .solve import (
    DiscreteSolution,
    SolverError,
    evaluate_solution,
    solve_direct,
    solve_preconditioned,
)
from .special import gamma, getoor_solution, kappa_alpha

__version__ = "0.1.0"

__all__ = [
    "AssemblyError",
    "DiagPreconditioner",
    "DiscreteSolution",
    "ExactSolution",
    "GradedMesh",
    "ProblemParams",
    "SolverError",
    "SourceTerm",
    "StiffnessMatrix",
    "StudyConfig",
    "analytic_row_sums",
    "apply_operator",
    "assemble_stiffness",
    "boundary_distance",
    "build_B",
    "build_mesh",
    "build_preconditioner",
    "check_against_reference",
    "dh2_apply",
    "dominance_report",
    "dominant_preconditioner",
    "evaluate_solution",
    "exact_nodal",
    "gamma",
    "getoor_solution",
    "kappa_alpha",
    "precond_params",
    "quadrature_coefficients",
    "riesz_potential_hat",
    "run_study",
    "sample_source",
    "solve_direct",
    "solve_preconditioned",
    "table_config",
    "truncation_error",
]
