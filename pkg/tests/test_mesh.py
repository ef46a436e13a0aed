from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraclap.mesh import (
    ProblemParams,
    boundary_distance,
    build_mesh,
    coarsen,
    resolve_grading,
    width_ratio_diagnostics,
)


def mesh(r, N, T=0.5, alpha=1.5):
    return build_mesh(ProblemParams(alpha, r, T, N))


def test_uniform_and_quadratic_nodes_n2():
    np.testing.assert_array_equal(mesh(1, 2).nodes, [0, 0.25, 0.5, 0.75, 1.0])
    np.testing.assert_array_equal(mesh(2, 2).nodes, [0, 0.125, 0.5, 0.875, 1.0])


def test_midpoint_and_endpoints_exact():
    m = mesh(4 / 1.2, 100, T=0.7)
    assert m.nodes[0] == 0.0
    assert m.nodes[100] == 0.7
    assert m.nodes[-1] == 1.4
    assert m.n_interior == 199 and m.interior.shape == (199,)


# r = 5 at N = 1600 underflows near 2T; see the rejection test below
GRID = [
    (r, N)
    for r in (1.0, 1.5, 2.0, 4 / 1.2, 5.0)
    for N in (2, 3, 17, 100, 800, 1600)
    if not (r == 5.0 and N == 1600)
]


@pytest.mark.parametrize("r,N", GRID)
def test_mirror_symmetry_and_monotonicity(r, N):
    m = mesh(r, N)
    x = m.nodes
    np.testing.assert_array_equal(x[N + 1 :], 2 * m.T - x[N - 1 :: -1])
    assert np.all(np.diff(x) > 0)
    np.testing.assert_array_equal(m.widths, np.diff(x))


def test_strongly_graded_mesh_rejected_when_spacing_underflows():
    with pytest.raises(ValueError, match="strictly increasing"):
        mesh(5.0, 1600)


@pytest.mark.parametrize("r", [1.0, 2.0, 4 / 1.8, 5.0])
def test_nesting_is_bitwise(r):
    fine = mesh(r, 128)
    coarse = mesh(r, 64)
    np.testing.assert_array_equal(fine.nodes[::2], coarse.nodes)
    np.testing.assert_array_equal(coarsen(fine).nodes, coarse.nodes)


def test_coarsen_needs_even_n():
    with pytest.raises(ValueError):
        coarsen(mesh(2, 7))


@given(
    r=st.floats(1.0, 5.0),
    N=st.integers(2, 400),
    T=st.floats(0.1, 10.0),
)
@settings(max_examples=60, deadline=None)
def test_neighbour_width_ratio_bounded(r, N, T):
    m = mesh(r, N, T=T)
    d = width_ratio_diagnostics(m)
    assert d.neighbour_ratio_max <= 2.0**r * (1 + 1e-12)
    assert d.neighbour_ratio_min >= 2.0**-r * (1 - 1e-12)


@pytest.mark.parametrize("N", [100, 200])
def test_scaled_widths_bracketed_for_quadratic_grading(N):
    d = width_ratio_diagnostics(mesh(2.0, N))
    assert 0.25 <= d.scaled_width_min <= d.scaled_width_max <= 4.0


def test_uniform_mesh_scaled_width_is_one():
    d = width_ratio_diagnostics(mesh(1.0, 50, T=3.0))
    assert d.scaled_width_min == pytest.approx(1.0, rel=1e-12)
    assert d.scaled_width_max == pytest.approx(1.0, rel=1e-12)


def test_boundary_distance():
    m = mesh(2, 4)
    assert boundary_distance(m, 0) == 0.0
    assert boundary_distance(m, 1) == pytest.approx(0.5 / 16)
    assert boundary_distance(m, 7) == pytest.approx(0.5 / 16)
    assert boundary_distance(m, 4) == 0.5
    np.testing.assert_allclose(m.delta(), [boundary_distance(m, j) for j in range(9)])
    with pytest.raises(IndexError):
        boundary_distance(m, 9)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(alpha=1.0, r=1, T=0.5, N=4),
        dict(alpha=2.0, r=1, T=0.5, N=4),
        dict(alpha=1.5, r=0.9, T=0.5, N=4),
        dict(alpha=1.5, r=1, T=0.0, N=4),
        dict(alpha=1.5, r=1, T=0.5, N=1),
        dict(alpha=1.5, r=1, T=0.5, N=2.5),
    ],
)
def test_invalid_parameters_rejected(kwargs):
    with pytest.raises(ValueError):
        ProblemParams(**kwargs)


def test_require_even():
    ProblemParams(1.5, 1, 0.5, 4).require_even()
    with pytest.raises(ValueError):
        ProblemParams(1.5, 1, 0.5, 5).require_even()


def test_nodes_are_read_only():
    m = mesh(2, 4)
    with pytest.raises(ValueError):
        m.nodes[1] = 0.3


def test_grading_rules():
    assert resolve_grading("4/alpha", 1.6) == pytest.approx(2.5)
    assert resolve_grading("2/sigma", 1.6, 0.4) == pytest.approx(5.0)
    assert resolve_grading("1.5", 1.6) == 1.5
    assert resolve_grading(3, 1.6) == 3.0
    with pytest.raises(ValueError):
        resolve_grading("2/sigma", 1.6)
    with pytest.raises(ValueError):
        resolve_grading("sqrt", 1.6)
