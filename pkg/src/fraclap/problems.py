"""Source terms, exact solutions and the local truncation error."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import StiffnessMatrix
from .mesh import GradedMesh
from .special import getoor_constant


@dataclass(frozen=True)
class SourceTerm:
    """f = 1 (``constant_one``) or f(x) = (x - a)^(sigma - alpha) (``singular_power``).

    ``domain`` is the physical interval (a, b); mesh coordinates in (0, 2T)
    are shifted by a, so 2T must equal b - a.
    """

    kind: str = "constant_one"
    sigma: float | None = None
    domain: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self) -> None:
        if self.kind not in ("constant_one", "singular_power"):
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.kind == "singular_power" and (self.sigma is None or not self.sigma > 0):
            raise ValueError("singular_power needs sigma > 0")
        a, b = self.domain
        if not a < b:
            raise ValueError(f"need a < b, got {self.domain}")

    def validate(self, alpha: float) -> None:
        if self.kind == "singular_power" and not self.sigma <= alpha / 2.0:
            raise ValueError(f"sigma must lie in (0, alpha/2], got {self.sigma} for alpha={alpha}")

    @property
    def label(self) -> str:
        return "one" if self.kind == "constant_one" else f"power:{self.sigma:g}"

    @classmethod
    def parse(cls, text: str, domain=(0.0, 1.0)) -> SourceTerm:
        """'one' or 'power:SIGMA'."""
        if text == "one":
            return cls("constant_one", domain=domain)
        if text.startswith("power:"):
            return cls("singular_power", float(text.split(":", 1)[1]), domain)
        raise ValueError(f"source must be 'one' or 'power:SIGMA', got {text!r}")


@dataclass(frozen=True)
class ExactSolution:
    kind: str = "getoor"
    domain: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self) -> None:
        if self.kind not in ("getoor", "none"):
            raise ValueError(f"unknown exact solution kind {self.kind!r}")

    @classmethod
    def for_source(cls, src: SourceTerm) -> ExactSolution:
        """The Getoor solution belongs to the unit source only."""
        return cls("getoor" if src.kind == "constant_one" else "none", src.domain)


def _check_domain(mesh: GradedMesh, domain) -> None:
    a, b = domain
    if not np.isclose(b - a, 2.0 * mesh.T, rtol=1e-14, atol=0.0):
        raise ValueError(f"domain {domain} has length {b - a}, mesh has 2T = {2 * mesh.T}")


def sample_source(src: SourceTerm, alpha: float, mesh: GradedMesh) -> np.ndarray:
    """F_i = f(x_i) at the interior nodes."""
    src.validate(alpha)
    _check_domain(mesh, src.domain)
    x = mesh.interior
    if src.kind == "constant_one":
        return np.ones_like(x)
    if np.any(x <= 0.0):
        raise ValueError("singular source evaluated at a non-positive distance")
    F = x ** (src.sigma - alpha)
    if not np.all(np.isfinite(F)):
        raise ValueError("singular source overflowed at the first node")
    return F


def exact_nodal(sol: ExactSolution, alpha: float, mesh: GradedMesh) -> np.ndarray:
    """Getoor values C [(x-a)(b-x)]^(alpha/2) at the interior nodes.

    Evaluated as C [s (2T - s)]^(alpha/2) with s the mesh coordinate, which
    is the same function shifted by a.
    """
    if sol.kind != "getoor":
        raise ValueError("no exact solution is available for this problem")
    _check_domain(mesh, sol.domain)
    s = mesh.interior
    return getoor_constant(alpha) * (s * (2.0 * mesh.T - s)) ** (alpha / 2.0)


def truncation_error(A: StiffnessMatrix, exact: np.ndarray, F: np.ndarray) -> np.ndarray:
    """tau_i = sum_j a_ij u(x_j) - f_i."""
    exact = np.asarray(exact, dtype=float)
    F = np.asarray(F, dtype=float)
    if exact.shape != (A.n,) or F.shape != (A.n,):
        raise ValueError(f"vectors must have length {A.n}")
    return A.entries @ exact - F


def truncation_envelope(mesh: GradedMesh, alpha: float) -> np.ndarray:
    """h^min(r alpha/2, 2) delta^-alpha + (r-1) h^2 (T - delta + h_N)^(1-alpha)."""
    r, T, h = mesh.params.r, mesh.T, mesh.h
    d = mesh.delta()[1:-1]
    order = min(r * alpha / 2.0, 2.0)
    return h**order * d**-alpha + (r - 1.0) * h**2 * (T - d + mesh.h_mid()) ** (1.0 - alpha)
