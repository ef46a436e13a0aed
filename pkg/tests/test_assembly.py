from __future__ import annotations

import math

import numpy as np
import pytest

from fraclap.assembly import (
    analytic_row_sums,
    apply_operator,
    assemble_stiffness,
    dh2_apply,
    quadrature_coefficients,
    read_matrix,
    riesz_potential_hat,
    write_matrix,
)
from fraclap.mesh import ProblemParams, build_mesh
from fraclap.special import kappa_alpha

import oracles


def mesh(alpha, r, N, T=0.5):
    return build_mesh(ProblemParams(alpha, r, T, N))


def test_second_difference_exact_on_quadratics():
    h_i, h_ip1 = 0.3, 0.7
    x = np.array([0.0, h_i, h_i + h_ip1])
    assert dh2_apply(h_i, h_ip1, *(x**2)) == pytest.approx(2.0, rel=1e-14)
    assert dh2_apply(h_i, h_ip1, *(3 * x - 1)) == pytest.approx(0.0, abs=1e-14)


def test_second_difference_cubic_on_uneven_nodes():
    # x^3 at 0, 1, 3: 2/3 * ((27 - 1)/2 - 1) = 8
    assert dh2_apply(1.0, 2.0, 0.0, 1.0, 27.0) == pytest.approx(8.0, rel=1e-14)


def test_second_difference_rejects_bad_widths():
    with pytest.raises(ValueError):
        dh2_apply(0.0, 1.0, 0, 0, 0)


@pytest.mark.parametrize("alpha", [1.2, 1.5, 1.8])
def test_uniform_mesh_quadrature_diagonal(alpha):
    m = mesh(alpha, 1, 8)
    h = m.widths[0]
    expect = 2 * kappa_alpha(alpha) * h ** (3 - alpha) / h / math.gamma(4 - alpha)
    table = quadrature_coefficients(m, alpha)
    np.testing.assert_allclose(np.diagonal(table[1:-1]), expect, rtol=1e-13)


@pytest.mark.parametrize(
    "alpha,r,N",
    [(1.2, 1, 8), (1.5, 2, 8), (1.8, 4 / 1.8, 16), (1.2, 4 / 1.2, 16), (1.5, 5, 12)],
)
def test_quadrature_coefficients_against_mpmath(alpha, r, N):
    m = mesh(alpha, r, N)
    table = quadrature_coefficients(m, alpha)
    rng = np.random.default_rng(7)
    pairs = [(0, 1), (1, 1), (2 * N, 2 * N - 1), (N, N), (1, 2 * N - 1)]
    pairs += [(int(i), int(j)) for i, j in zip(rng.integers(0, 2 * N + 1, 25),
                                               rng.integers(1, 2 * N, 25))]
    for i, j in pairs:
        ref = float(oracles.quadrature_coefficient(m.nodes, alpha, i, j))
        assert table[i, j - 1] == pytest.approx(ref, rel=1e-12), (i, j)
    assert riesz_potential_hat(m, alpha, 1, 1) == table[1, 0]


def test_riesz_potential_hat_index_checks():
    m = mesh(1.5, 1, 4)
    with pytest.raises(IndexError):
        riesz_potential_hat(m, 1.5, 9, 1)
    with pytest.raises(IndexError):
        riesz_potential_hat(m, 1.5, 1, 0)


def test_stiffness_frozen_entries():
    # alpha=1.5, r=2, N=4; values from a 40-digit evaluation of the closed form
    A = assemble_stiffness(mesh(1.5, 2, 4), 1.5).entries
    frozen = {
        (1, 1): 93.983957960950569239,
        (1, 2): -21.685908665080774284,
        (1, 7): -0.02481457765720958983,
        (4, 4): 12.182208092627376846,
        (4, 5): -4.3297329882489117795,
        (2, 6): -0.093060960374272879732,
    }
    for (i, j), v in frozen.items():
        assert A[i - 1, j - 1] == pytest.approx(v, rel=1e-13)


@pytest.mark.parametrize(
    "alpha,r,N", [(1.2, 5, 16), (1.8, 5, 16), (1.2, 4 / 1.2, 16), (1.5, 1, 12)]
)
def test_every_stiffness_entry_against_mpmath(alpha, r, N):
    m = mesh(alpha, r, N)
    A = assemble_stiffness(m, alpha).entries
    n = 2 * N - 1
    worst = 0.0
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            ref = float(oracles.stiffness_entry(m.nodes, alpha, i, j))
            worst = max(worst, abs(A[i - 1, j - 1] - ref) / abs(ref))
    assert worst < 1e-11


def test_sampled_entries_on_large_graded_mesh():
    alpha, N = 1.2, 400
    m = mesh(alpha, 4 / alpha, N)
    A = assemble_stiffness(m, alpha).entries
    rng = np.random.default_rng(3)
    pairs = [(1, 1), (1, 2), (1, 799), (2, 400), (400, 400), (399, 401), (799, 1), (798, 797)]
    pairs += [tuple(int(v) for v in rng.integers(1, 2 * N, 2)) for _ in range(20)]
    for i, j in pairs:
        ref = float(oracles.stiffness_entry(m.nodes, alpha, i, j))
        assert A[i - 1, j - 1] == pytest.approx(ref, rel=1e-11), (i, j)


@pytest.mark.parametrize("alpha", [1.2, 1.5, 1.8])
@pytest.mark.parametrize("rule", ["1", "4/alpha", "5"])
@pytest.mark.parametrize("N", [8, 16, 32, 64])
def test_sign_pattern(alpha, rule, N):
    r = 4 / alpha if rule == "4/alpha" else float(rule)
    S = assemble_stiffness(mesh(alpha, r, N), alpha)
    assert S.sign_violations() == 0
    assert np.all(S.diag > 0)


def test_uniform_mesh_matrix_is_toeplitz():
    A = assemble_stiffness(mesh(1.5, 1, 8), 1.5).entries
    for k in range(-3, 4):
        d = np.diagonal(A, k)
        np.testing.assert_allclose(d, d[0], rtol=1e-12)


@pytest.mark.parametrize("alpha,r", [(1.3, 2.0), (1.7, 4 / 1.7)])
def test_matrix_mirror_symmetry(alpha, r):
    A = assemble_stiffness(mesh(alpha, r, 20), alpha).entries
    np.testing.assert_allclose(A[::-1, ::-1], A, rtol=1e-9)


@pytest.mark.parametrize("alpha,r,N", [(1.2, 4 / 1.2, 32), (1.8, 1, 32), (1.5, 5, 16)])
def test_row_sum_functions_against_mpmath(alpha, r, N):
    m = mesh(alpha, r, N)
    rs = analytic_row_sums(m, alpha, m.nodes)
    g, p, q = oracles.row_sum_functions(m.nodes, alpha, m.T)
    np.testing.assert_allclose(rs.g0 + rs.g2N, [float(v) for v in g], rtol=1e-12)
    np.testing.assert_allclose(rs.p, [float(v) for v in p], rtol=1e-13)
    np.testing.assert_allclose(rs.q, [float(v) for v in q], rtol=1e-13)


def test_row_sum_scalar_and_domain_check():
    m = mesh(1.5, 2, 8)
    rs = analytic_row_sums(m, 1.5, 0.3)
    assert isinstance(rs.p, float)
    with pytest.raises(ValueError):
        analytic_row_sums(m, 1.5, 1.2)


@pytest.mark.parametrize("alpha,r", [(1.2, 1.0), (1.5, 4 / 1.5), (1.8, 5.0)])
def test_quadrature_row_sums_are_negated_boundary_terms(alpha, r):
    m = mesh(alpha, r, 32)
    rs = analytic_row_sums(m, alpha, m.nodes)
    table = quadrature_coefficients(m, alpha)
    np.testing.assert_allclose(table.sum(axis=1), -(rs.g0 + rs.g2N), rtol=1e-13)
    weighted = table @ m.delta()[1:-1]
    np.testing.assert_allclose(weighted, rs.q - rs.p, rtol=1e-12, atol=1e-15)


def test_matrix_dump_round_trip(tmp_path):
    S = assemble_stiffness(mesh(1.8, 4 / 1.8, 6), 1.8)
    path = tmp_path / "A.txt"
    write_matrix(path, S)
    header = path.read_text().splitlines()[0].split()
    assert header[0] == "11" and header[-1] == "6"
    back = read_matrix(path)
    np.testing.assert_array_equal(back.entries, S.entries)
    np.testing.assert_array_equal(back.mesh.nodes, S.mesh.nodes)
    assert back.alpha == S.alpha


def test_apply_operator_matches_matmul():
    S = assemble_stiffness(mesh(1.5, 2, 8), 1.5)
    v = np.linspace(-1, 1, S.n)
    np.testing.assert_allclose(apply_operator(S, v), S.entries @ v)
    with pytest.raises(ValueError):
        apply_operator(S, v[:-1])


def test_entries_are_read_only():
    S = assemble_stiffness(mesh(1.5, 2, 4), 1.5)
    with pytest.raises(ValueError):
        S.entries[0, 0] = 1.0
