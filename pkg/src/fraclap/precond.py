"""Diagonal right-preconditioner lambda I + mu G and row-dominance diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import StiffnessMatrix
from .mesh import GradedMesh
from .special import FracConstants, check_alpha


def c_A(alpha: float, r: float) -> float:
    """kappa (alpha-1) / Gamma(2-alpha) * 2^(-r alpha)."""
    c = FracConstants.for_alpha(alpha)
    return c.kernel_scale * (alpha - 1.0) * 2.0 ** (-r * alpha)


def c_B(alpha: float) -> float:
    return 2.0 * FracConstants.for_alpha(alpha).kernel_scale


def c_B_tilde(alpha: float, r: float) -> float:
    return FracConstants.for_alpha(alpha).kernel_scale * 2.0 ** (r * (alpha - 1.0))


def precond_params(alpha: float, r: float, T: float) -> tuple[float, float]:
    """(lambda, mu) = (1 + 2^(r(alpha-1)) T, (alpha-1) 2^(-r alpha - 1))."""
    check_alpha(alpha)
    if not r >= 1.0:
        raise ValueError(f"r must be >= 1, got {r}")
    if not T > 0.0:
        raise ValueError(f"T must be positive, got {T}")
    lam = 1.0 + 2.0 ** (r * (alpha - 1.0)) * T
    mu = (alpha - 1.0) * 2.0 ** (-r * alpha - 1.0)
    return lam, mu


@dataclass(frozen=True, eq=False)
class DiagPreconditioner:
    lam: float
    mu: float
    diag: np.ndarray

    def __post_init__(self) -> None:
        self.diag.setflags(write=False)


def build_preconditioner(mesh: GradedMesh, lam: float, mu: float) -> DiagPreconditioner:
    """Diagonal lambda + mu delta(x_j) at the interior nodes.

    lambda = 0 is accepted (it gives the boundary weighting G scaled by mu),
    as long as every diagonal entry is positive.
    """
    if not (lam >= 0.0 and mu >= 0.0 and lam + mu > 0.0):
        raise ValueError(f"need lambda >= 0, mu >= 0, not both zero, got ({lam}, {mu})")
    return DiagPreconditioner(lam, mu, lam + mu * mesh.delta()[1:-1])


def dominant_preconditioner(mesh: GradedMesh, alpha: float) -> DiagPreconditioner:
    """Preconditioner with the (lambda, mu) pair that makes B diagonally dominant."""
    p = mesh.params
    return build_preconditioner(mesh, *precond_params(alpha, p.r, p.T))


def build_B(A: StiffnessMatrix, P: DiagPreconditioner) -> np.ndarray:
    """Column-scaled copy B = A (lambda I + mu G)."""
    if P.diag.shape != (A.n,):
        raise ValueError(f"preconditioner has size {P.diag.shape[0]}, matrix has {A.n}")
    return A.entries * P.diag[None, :]


def stiffness_row_bound(mesh: GradedMesh, alpha: float) -> np.ndarray:
    """Lower bound C_A (x^-alpha + (2T-x)^-alpha) on the row sums of A."""
    x, T = mesh.interior, mesh.T
    return c_A(alpha, mesh.params.r) * (x**-alpha + (2.0 * T - x) ** -alpha)


def preconditioned_row_bound(mesh: GradedMesh, alpha: float) -> np.ndarray:
    """Lower bound on the row sums of B, including the midpoint term."""
    x, T = mesh.interior, mesh.T
    d = np.minimum(x, 2.0 * T - x)
    mid = (T - d + mesh.h_mid()) ** (1.0 - alpha)
    return c_A(alpha, mesh.params.r) * (x**-alpha + (2.0 * T - x) ** -alpha + mid)


@dataclass(frozen=True)
class DominanceReport:
    row_sums: np.ndarray
    min_row_sum: float
    sign_violations: int
    zero_offdiagonal: int
    nonpositive_rows: int

    @property
    def strictly_dominant(self) -> bool:
        return self.sign_violations == 0 and self.nonpositive_rows == 0


def dominance_report(M) -> DominanceReport:
    """Row sums and sign-pattern check (positive diagonal, nonpositive off-diagonal).

    With that sign pattern a positive row sum is exactly strict diagonal
    dominance of the row.  Exact zeros off the diagonal are counted separately.
    """
    M = np.asarray(getattr(M, "entries", M), dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    off = M[~np.eye(M.shape[0], dtype=bool)]
    violations = int(np.sum(np.diagonal(M) <= 0) + np.sum(off > 0))
    sums = M.sum(axis=1)
    return DominanceReport(
        sums, float(sums.min()), violations, int(np.sum(off == 0)), int(np.sum(sums <= 0))
    )
