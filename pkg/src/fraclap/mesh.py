"""Symmetric graded meshes on (0, 2T) clustered toward both endpoints."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ALPHA_EPS = 1e-8


@dataclass(frozen=True)
class ProblemParams:
    """Fractional order, grading exponent, half-width and resolution.

    The mesh has ``2N`` cells on ``(0, 2T)``.  ``N`` only has to be even when
    a refinement ladder needs nested coarse meshes (see ``require_even``).
    """

    alpha: float
    r: float
    T: float
    N: int

    def __post_init__(self) -> None:
        if not (1.0 + ALPHA_EPS < self.alpha < 2.0 - ALPHA_EPS):
            raise ValueError(f"alpha must lie in (1, 2), got {self.alpha}")
        if not self.r >= 1.0:
            raise ValueError(f"grading exponent r must be >= 1, got {self.r}")
        if not self.T > 0.0:
            raise ValueError(f"half-width T must be positive, got {self.T}")
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N}")

    def require_even(self) -> None:
        if self.N % 2:
            raise ValueError(f"refinement ladders need even N, got {self.N}")


@dataclass(frozen=True, eq=False)
class GradedMesh:
    params: ProblemParams
    nodes: np.ndarray
    widths: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.nodes.setflags(write=False)
        widths = np.diff(self.nodes)
        widths.setflags(write=False)
        object.__setattr__(self, "widths", widths)

    @property
    def N(self) -> int:
        return self.params.N

    @property
    def T(self) -> float:
        return self.params.T

    @property
    def h(self) -> float:
        return 1.0 / self.params.N

    @property
    def n_interior(self) -> int:
        return 2 * self.params.N - 1

    @property
    def interior(self) -> np.ndarray:
        return self.nodes[1:-1]

    def delta(self) -> np.ndarray:
        """Distance to the boundary at every node x_0..x_2N."""
        return np.minimum(self.nodes, 2.0 * self.T - self.nodes)

    def h_mid(self) -> float:
        """Width h_N of the cell ending at the midpoint x_N = T."""
        return float(self.widths[self.N - 1])


def build_mesh(params: ProblemParams) -> GradedMesh:
    """Nodes x_j = T (j/N)^r on the left half, mirrored about T.

    The right half is set as ``2T - x_{2N-j}`` so that mirror symmetry and
    nesting (``x_i`` at N/2 equals ``x_2i`` at N) hold bit for bit.
    """
    N, r, T = params.N, params.r, params.T
    left = np.empty(N + 1)
    left[0] = 0.0
    j = np.arange(1, N + 1)
    left[1:] = T * np.exp(r * np.log(j / N))
    left[N] = T
    nodes = np.empty(2 * N + 1)
    nodes[: N + 1] = left
    nodes[N + 1 :] = 2.0 * T - left[N - 1 :: -1]
    if np.any(np.diff(nodes) <= 0.0):
        raise ValueError(
            f"mesh is not strictly increasing for r={r}, N={N} "
            "(node spacing underflows double precision)"
        )
    return GradedMesh(params, nodes)


def boundary_distance(mesh: GradedMesh, j: int) -> float:
    if not 0 <= j <= 2 * mesh.N:
        raise IndexError(f"node index {j} outside 0..{2 * mesh.N}")
    x = float(mesh.nodes[j])
    return min(x, 2.0 * mesh.T - x)


@dataclass(frozen=True)
class WidthDiagnostics:
    scaled_width_min: float
    scaled_width_max: float
    neighbour_ratio_min: float
    neighbour_ratio_max: float


def width_ratio_diagnostics(mesh: GradedMesh) -> WidthDiagnostics:
    """Extremes of h_j / (h delta(x_j)^(1-1/r)) and h_{j+1}/h_j over interior j.

    Widths are normalized by T so that r = 1 gives exactly 1 for any T.
    """
    r, T = mesh.params.r, mesh.T
    j = np.arange(1, 2 * mesh.N)
    d = mesh.delta()[j] / T
    hj = mesh.widths[j - 1] / T
    scaled = hj / (mesh.h * d ** (1.0 - 1.0 / r))
    ratio = mesh.widths[j] / mesh.widths[j - 1]
    return WidthDiagnostics(
        float(scaled.min()), float(scaled.max()), float(ratio.min()), float(ratio.max())
    )


def coarsen(mesh: GradedMesh) -> GradedMesh:
    """The nested mesh with N/2 (every other node)."""
    p = mesh.params
    p.require_even()
    coarse = ProblemParams(p.alpha, p.r, p.T, p.N // 2)
    return GradedMesh(coarse, np.array(mesh.nodes[::2]))


def resolve_grading(rule: str | float, alpha: float, sigma: float | None = None) -> float:
    """Turn a grading rule ('4/alpha', '2/sigma' or a number) into a value of r."""
    if isinstance(rule, (int, float)):
        return float(rule)
    rule = rule.strip().replace(" ", "")
    if rule in ("4/alpha", "4/a"):
        return 4.0 / alpha
    if rule in ("2/sigma", "2/s"):
        if sigma is None:
            raise ValueError("grading rule 2/sigma needs sigma")
        return 2.0 / sigma
    try:
        return float(rule)
    except ValueError:
        raise ValueError(f"unknown grading rule {rule!r}") from None

