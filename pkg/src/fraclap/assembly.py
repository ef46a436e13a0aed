"""Quadrature coefficients, the D_h^2 stencil and the dense stiffness matrix.

Entries are exact integrals of the Riesz kernel against hat functions.  Two
evaluation routes are mixed:

* near pairs use the closed form in |x_a - x_b|^(3-alpha);
* well separated pairs use Gauss-Legendre quadrature of the integral form,
  where the kernel is smooth.

The closed form is a second (for the quadrature coefficients) or fourth (for
the stiffness entries) difference of a power function.  For far pairs on
strongly graded meshes its terms agree to 20+ leading digits, so it cannot be
used there in double precision.

Stiffness pairs where only one of the two hats is small compared with the gap
between them get a mixed treatment: Gauss quadrature on the small hat and the
exact difference on the large one.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .mesh import GradedMesh, ProblemParams, build_mesh
from .special import FracConstants

QUAD_ORDER = 10
NEAR_FACTOR = 0.5
_BLOCK_ENTRIES = 4_000_000


class AssemblyError(RuntimeError):
    """The assembled matrix violates the M-matrix sign pattern."""


def dh2_apply(h_i, h_ip1, g_left, g_mid, g_right):
    """Nonuniform three-point second difference."""
    if np.any(np.asarray(h_i) <= 0) or np.any(np.asarray(h_ip1) <= 0):
        raise ValueError("cell widths must be positive")
    return (2.0 / (h_i + h_ip1)) * (
        g_left / h_i - (1.0 / h_i + 1.0 / h_ip1) * g_mid + g_right / h_ip1
    )


def _gauss_points(mesh: GradedMesh, order: int):
    """Quadrature nodes per cell with the rising/falling hat weights folded in."""
    g, w = np.polynomial.legendre.leggauss(order)
    t = 0.5 * (g + 1.0)
    w = 0.5 * w
    x, h = mesh.nodes, mesh.widths
    pts = x[:-1, None] + h[:, None] * t[None, :]
    rise = h[:, None] * (w * t)[None, :]
    fall = h[:, None] * (w * (1.0 - t))[None, :]
    return pts, rise, fall


def _support_gap(mesh: GradedMesh, rows: np.ndarray, cols: np.ndarray):
    """Gap between a point x_i (rows) and supp phi_j (cols), with the local scale."""
    x, h = mesh.nodes, mesh.widths
    left = x[cols - 1][None, :] - x[rows][:, None]
    right = x[rows][:, None] - x[cols + 1][None, :]
    scale = np.maximum(h[cols - 1], h[cols])[None, :]
    return np.maximum(left, right), scale


def quadrature_coefficients(
    mesh: GradedMesh,
    alpha: float,
    rows=None,
    *,
    order: int = QUAD_ORDER,
    near_factor: float = NEAR_FACTOR,
) -> np.ndarray:
    """Table of I^{2-alpha} phi_j(x_i) for node rows i and interior columns j.

    ``rows`` defaults to every node 0..2N.
    """
    c = FracConstants.for_alpha(alpha)
    rows = np.arange(2 * mesh.N + 1) if rows is None else np.atleast_1d(rows)
    pts, rise, fall = _gauss_points(mesh, order)
    block = max(1, _BLOCK_ENTRIES // pts.size)
    return np.vstack(
        [
            _quadrature_coefficient_rows(
                mesh, c, rows[k : k + block], pts, rise, fall, near_factor
            )
            for k in range(0, len(rows), block)
        ]
    )


def _quadrature_coefficient_rows(mesh, c, rows, pts, rise, fall, near_factor):
    x, h = mesh.nodes, mesh.widths
    n = mesh.n_interior
    cols = np.arange(1, n + 1)

    P = np.abs(x[rows][:, None] - x[None, :]) ** (3.0 - c.alpha)
    hj, hj1 = h[cols - 1], h[cols]
    closed = c.quad_scale * (
        P[:, cols - 1] / hj - (1.0 / hj + 1.0 / hj1) * P[:, cols] + P[:, cols + 1] / hj1
    )

    with np.errstate(divide="ignore"):
        K = np.abs(x[rows][:, None, None] - pts[None, :, :]) ** (1.0 - c.alpha)
    m_rise = np.einsum("icq,cq->ic", K, rise)
    m_fall = np.einsum("icq,cq->ic", K, fall)
    with np.errstate(invalid="ignore"):
        far = c.kernel_scale * (m_rise[:, cols - 1] + m_fall[:, cols])

    gap, scale = _support_gap(mesh, rows, cols)
    return np.where(gap >= near_factor * scale, far, closed)


def riesz_potential_hat(mesh: GradedMesh, alpha: float, i: int, j: int) -> float:
    """I^{2-alpha} phi_j evaluated at node x_i."""
    if not 0 <= i <= 2 * mesh.N:
        raise IndexError(f"node index {i} outside 0..{2 * mesh.N}")
    if not 1 <= j <= 2 * mesh.N - 1:
        raise IndexError(f"hat index {j} outside 1..{2 * mesh.N - 1}")
    table = quadrature_coefficients(mesh, alpha, rows=[i])
    return float(table[0, j - 1])


def _power_gap(u, d, p):
    """u^p - (u + d)^p for u > 0, u + d >= 0, without cancellation."""
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        stable = -(u**p) * np.expm1(p * np.log1p(d / u))
    return np.where(u > 0, stable, -np.abs(d) ** p)


@dataclass(frozen=True)
class RowSums:
    g0: float
    g2N: float
    p: float
    q: float


def analytic_row_sums(mesh: GradedMesh, alpha: float, x):
    """Closed-form functions g0, g2N, p, q whose values give the row-sum identities.

    For every node x_i:
        sum_j I^{2-alpha}phi_j(x_i)          = -(g0 + g2N)(x_i)
        sum_j I^{2-alpha}phi_j(x_i) delta_j  = q(x_i) - p(x_i)
        sum_j a_ij                           = D_h^2 (g0 + g2N)(x_i)
        sum_j a_ij delta(x_j)                = D_h^2 p(x_i) - D_h^2 q(x_i)
    Accepts a scalar or an array of points in [0, 2T].
    """
    c = FracConstants.for_alpha(alpha)
    pw = 3.0 - alpha
    T = mesh.T
    x0, x1 = mesh.nodes[0], mesh.nodes[1]
    xl, xe = mesh.nodes[-2], mesh.nodes[-1]
    h1, h2N = mesh.widths[0], mesh.widths[-1]
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0.0) or np.any(xa > 2.0 * T):
        raise ValueError("points must lie in [0, 2T]")

    # |x - x0|^p - |x - x1|^p ; stable form when x >= x1
    u = xa - x0
    g0_gap = np.where(
        xa >= x1, _power_gap(u, -h1, pw), np.abs(u) ** pw - np.abs(xa - x1) ** pw
    )
    v = xe - xa
    g2N_gap = np.where(
        xa <= xl, _power_gap(v, -h2N, pw), np.abs(v) ** pw - np.abs(xl - xa) ** pw
    )
    g0 = -c.quad_scale * g0_gap / h1
    g2N = -c.quad_scale * g2N_gap / h2N
    p = 2.0 * c.quad_scale * np.abs(T - xa) ** pw
    q = c.quad_scale * (xa**pw + (2.0 * T - xa) ** pw)
    if np.ndim(x) == 0:
        return RowSums(float(g0), float(g2N), float(p), float(q))
    return RowSums(g0, g2N, p, q)


@dataclass(frozen=True, eq=False)
class StiffnessMatrix:
    mesh: GradedMesh
    alpha: float
    entries: np.ndarray

    def __post_init__(self) -> None:
        self.entries.setflags(write=False)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def diag(self) -> np.ndarray:
        return np.diagonal(self.entries)

    def sign_violations(self) -> int:
        """Count of entries breaking a_ii > 0, a_ij < 0 (i != j)."""
        A = self.entries
        off = ~np.eye(self.n, dtype=bool)
        return int(np.sum(self.diag <= 0) + np.sum(A[off] >= 0))


def _closed_form_rows(mesh: GradedMesh, c: FracConstants, rows: np.ndarray) -> np.ndarray:
    """-D_h^2 of the closed-form quadrature coefficients for stiffness rows."""
    x, h = mesh.nodes, mesh.widths
    n = mesh.n_interior
    cols = np.arange(1, n + 1)
    need = np.arange(rows[0] - 1, rows[-1] + 2)
    P = np.abs(x[need][:, None] - x[None, :]) ** (3.0 - c.alpha)
    hj, hj1 = h[cols - 1], h[cols]
    at = c.quad_scale * (
        P[:, cols - 1] / hj - (1.0 / hj + 1.0 / hj1) * P[:, cols] + P[:, cols + 1] / hj1
    )
    k = rows - need[0]
    hi, hi1 = h[rows - 1][:, None], h[rows][:, None]
    return -dh2_apply(hi, hi1, at[k - 1], at[k], at[k + 1])


def _quadrature_rows(
    mesh: GradedMesh, c: FracConstants, rows: np.ndarray, pts, rise, fall
) -> np.ndarray:
    """Stiffness rows from the double integral of phi_i phi_j |s-y|^(-1-alpha).

    Only valid for pairs whose hat supports are separated.
    """
    alpha = c.alpha
    h = mesh.widths
    n = mesh.n_interior
    cells = np.arange(rows[0] - 1, rows[-1] + 1)
    s = pts[cells].ravel()
    with np.errstate(divide="ignore"):
        K = np.abs(s[:, None] - pts.ravel()[None, :]) ** (-1.0 - alpha)
    K = K.reshape(len(s), *pts.shape)
    m_rise = np.einsum("scq,cq->sc", K, rise)
    m_fall = np.einsum("scq,cq->sc", K, fall)
    per_col = (m_rise[:, 0:n] + m_fall[:, 1 : n + 1]).reshape(len(cells), -1, n)
    k = rows - cells[0]
    integral = np.einsum("iq,iqj->ij", rise[rows - 1], per_col[k - 1]) + np.einsum(
        "iq,iqj->ij", fall[rows], per_col[k]
    )
    weight = 2.0 / (h[rows - 1] + h[rows])
    return -c.kernel_scale * alpha * (alpha - 1.0) * weight[:, None] * integral


def _row_gauss_rows(
    mesh: GradedMesh, c: FracConstants, rows: np.ndarray, pts, rise, fall
) -> np.ndarray:
    """Stiffness rows as the phi_i-weighted integral of the exact second derivative.

    Uses D_h^2 g(x_i) = 2/(h_i + h_{i+1}) * int phi_i g'' with g = I^{2-alpha} phi_j,
    whose second derivative is a difference of |s - x_k|^(1-alpha) over the
    nodes of phi_j.  Accurate when supp phi_i is small compared with its
    distance to supp phi_j.
    """
    x, h = mesh.nodes, mesh.widths
    n = mesh.n_interior
    cols = np.arange(1, n + 1)
    cells = np.arange(rows[0] - 1, rows[-1] + 1)
    s = pts[cells]
    with np.errstate(divide="ignore"):
        Q = np.abs(s[:, :, None] - x[None, None, :]) ** (1.0 - c.alpha)
    hj, hj1 = h[cols - 1], h[cols]
    with np.errstate(invalid="ignore"):
        second = c.kernel_scale * (
            Q[:, :, cols - 1] / hj - (1.0 / hj + 1.0 / hj1) * Q[:, :, cols] + Q[:, :, cols + 1] / hj1
        )
        k = rows - 1 - cells[0]
        integral = np.einsum("iq,iqj->ij", rise[rows - 1], second[k]) + np.einsum(
            "iq,iqj->ij", fall[rows], second[k + 1]
        )
    weight = 2.0 / (h[rows - 1] + h[rows])
    return -weight[:, None] * integral


def _column_gauss_rows(
    mesh: GradedMesh, c: FracConstants, rows: np.ndarray, pts, rise, fall
) -> np.ndarray:
    """-D_h^2 applied to I^{2-alpha} phi_j computed by Gauss quadrature over supp phi_j.

    Accurate when supp phi_j is small compared with its distance to x_{i-1..i+1}.
    """
    x, h = mesh.nodes, mesh.widths
    n = mesh.n_interior
    cols = np.arange(1, n + 1)
    need = np.arange(rows[0] - 1, rows[-1] + 2)
    with np.errstate(divide="ignore"):
        K = np.abs(x[need][:, None, None] - pts[None, :, :]) ** (1.0 - c.alpha)
    m_rise = np.einsum("icq,cq->ic", K, rise)
    m_fall = np.einsum("icq,cq->ic", K, fall)
    with np.errstate(invalid="ignore"):
        at = c.kernel_scale * (m_rise[:, cols - 1] + m_fall[:, cols])
        k = rows - need[0]
        hi, hi1 = h[rows - 1][:, None], h[rows][:, None]
        return -dh2_apply(hi, hi1, at[k - 1], at[k], at[k + 1])


def assemble_stiffness(
    mesh: GradedMesh,
    alpha: float,
    *,
    order: int = QUAD_ORDER,
    near_factor: float = NEAR_FACTOR,
    check: bool = True,
) -> StiffnessMatrix:
    """Dense (2N-1)x(2N-1) collocation matrix a_ij = -D_h^2 I^{2-alpha} phi_j(x_i).

    Every row is evaluated from the stored nodes.  Rows are not mirrored from
    the left half: near x = 2T the rounded nodes 2T - x_j do not reproduce the
    left-half widths to full relative precision.
    """
    c = FracConstants.for_alpha(alpha)
    N, n = mesh.N, mesh.n_interior
    h = mesh.widths
    pts, rise, fall = _gauss_points(mesh, order)
    A = np.empty((n, n))
    block = max(1, _BLOCK_ENTRIES // (order * order * (2 * N)))
    cols = np.arange(1, n + 1)
    wmax = np.maximum(h[:-1], h[1:])

    for start in range(1, n + 1, block):
        rows = np.arange(start, min(start + block, n + 1))
        x = mesh.nodes
        gap = np.maximum(
            x[cols - 1][None, :] - x[rows + 1][:, None],
            x[rows - 1][:, None] - x[cols + 1][None, :],
        )
        row_ok = gap >= near_factor * wmax[rows - 1][:, None]
        col_ok = gap >= near_factor * wmax[cols - 1][None, :]
        block_A = _closed_form_rows(mesh, c, rows)
        if np.any(row_ok & ~col_ok):
            block_A = np.where(
                row_ok & ~col_ok, _row_gauss_rows(mesh, c, rows, pts, rise, fall), block_A
            )
        if np.any(col_ok & ~row_ok):
            block_A = np.where(
                col_ok & ~row_ok, _column_gauss_rows(mesh, c, rows, pts, rise, fall), block_A
            )
        with np.errstate(invalid="ignore"):
            far = _quadrature_rows(mesh, c, rows, pts, rise, fall)
        A[rows - 1] = np.where(row_ok & col_ok, far, block_A)

    S = StiffnessMatrix(mesh, alpha, A)
    if check:
        bad = S.sign_violations()
        if bad:
            raise AssemblyError(f"{bad} entries break the M-matrix sign pattern")
    return S


def apply_operator(A: StiffnessMatrix, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (A.n,):
        raise ValueError(f"expected a vector of length {A.n}, got shape {v.shape}")
    return A.entries @ v


def write_matrix(path, A: StiffnessMatrix) -> None:
    """Plain-text dump: header 'n alpha r T N', then n rows at 17 significant digits."""
    p = A.mesh.params
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{A.n} {A.alpha!r} {p.r!r} {p.T!r} {p.N}\n")
        np.savetxt(fh, A.entries, fmt="%.17g")


def read_matrix(path) -> StiffnessMatrix:
    """Inverse of ``write_matrix``; the mesh is rebuilt from the header."""
    with open(Path(path), encoding="utf-8") as fh:
        n, alpha, r, T, N = fh.readline().split()
        entries = np.loadtxt(fh, ndmin=2)
    if entries.shape != (int(n), int(n)):
        raise ValueError(f"matrix body has shape {entries.shape}, header says n={n}")
    mesh = build_mesh(ProblemParams(float(alpha), float(r), float(T), int(N)))
    return StiffnessMatrix(mesh, float(alpha), entries)
