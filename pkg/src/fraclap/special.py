"""Gamma function, the Riesz constant kappa_alpha and the Getoor solution."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .mesh import ALPHA_EPS

# Lanczos approximation, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma(x: float) -> float:
    """Gamma function for positive real arguments."""
    if not x > 0.0:
        raise ValueError(f"gamma is only defined here for x > 0, got {x}")
    if x < 0.5:
        # reflection keeps the Lanczos sum in its accurate range
        return math.pi / (math.sin(math.pi * x) * gamma(1.0 - x))
    z = x - 1.0
    acc = _LANCZOS_COEF[0]
    for k, c in enumerate(_LANCZOS_COEF[1:], start=1):
        acc += c / (z + k)
    t = z + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (z + 0.5) * math.exp(-t) * acc


def check_alpha(alpha: float) -> None:
    if not (1.0 + ALPHA_EPS < alpha < 2.0 - ALPHA_EPS):
        raise ValueError(f"alpha must lie in (1, 2), got {alpha}")


def kappa_alpha(alpha: float) -> float:
    """-1 / (2 cos(alpha pi / 2)); positive for 1 < alpha < 2."""
    check_alpha(alpha)
    return -1.0 / (2.0 * math.cos(alpha * math.pi / 2.0))


@dataclass(frozen=True)
class FracConstants:
    alpha: float
    kappa: float
    gamma_2ma: float
    gamma_4ma: float

    @classmethod
    def for_alpha(cls, alpha: float) -> FracConstants:
        return cls(alpha, kappa_alpha(alpha), gamma(2.0 - alpha), gamma(4.0 - alpha))

    @property
    def quad_scale(self) -> float:
        """Prefactor kappa / Gamma(4 - alpha) of the |s|^(3-alpha) closed forms."""
        return self.kappa / self.gamma_4ma

    @property
    def kernel_scale(self) -> float:
        """Prefactor kappa / Gamma(2 - alpha) of the Riesz kernel |s|^(1-alpha)."""
        return self.kappa / self.gamma_2ma


def getoor_constant(alpha: float) -> float:
    check_alpha(alpha)
    return (
        2.0 ** (-alpha)
        * gamma(0.5)
        / (gamma(1.0 + alpha / 2.0) * gamma((1.0 + alpha) / 2.0))
    )


def getoor_solution(alpha: float, a: float, b: float, x: float) -> float:
    """Exact solution of the unit-source problem on (a, b)."""
    if not a < b:
        raise ValueError(f"need a < b, got ({a}, {b})")
    if not a <= x <= b:
        raise ValueError(f"x = {x} outside [{a}, {b}]")
    return getoor_constant(alpha) * ((x - a) * (b - x)) ** (alpha / 2.0)
