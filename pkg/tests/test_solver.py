import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elastobem.analytic import PointSource, manufactured_bc, rel_l2_error
from elastobem.assembly import MixedTraceData, assemble
from elastobem.solver import LinearMap, bicgstab, block_jacobi, solve_mixed


def test_identity():
    b = np.arange(1.0, 7.0)
    x, st_ = bicgstab(np.eye(6), b)
    assert np.allclose(x, b) and st_.converged and st_.iterations <= 1


def test_zero_rhs():
    x, st_ = bicgstab(np.eye(3), np.zeros(3))
    assert np.all(x == 0) and st_.converged and st_.iterations == 0


@settings(max_examples=20, deadline=None)
@given(st.integers(3, 30), st.integers(0, 2**31))
def test_against_lu(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n)) + 2 * n * np.eye(n)
    b = rng.standard_normal(n)
    x, s = bicgstab(A, b, tol=1e-12)
    assert s.converged
    assert np.allclose(x, np.linalg.solve(A, b), rtol=1e-9, atol=1e-10)


def test_initial_guess_is_used():
    A = np.diag(np.arange(1.0, 11.0))
    b = np.ones(10)
    exact = 1.0 / np.arange(1.0, 11.0)
    x, s = bicgstab(A, b, x0=exact)
    assert s.iterations == 0 and np.allclose(x, exact)


def test_linear_map_and_errors():
    m = LinearMap(2, lambda v: 2 * v)
    x, s = bicgstab(m, np.array([2.0, 4.0]))
    assert np.allclose(x, [1.0, 2.0])
    with pytest.raises(ValueError):
        bicgstab(np.eye(3), np.ones(4))
    with pytest.raises(ValueError):
        bicgstab(np.eye(3), np.ones(3), tol=0.0)
    with pytest.raises(ValueError):
        LinearMap.from_operator(np.ones((2, 3)))


def test_non_convergence_reported(rng):
    A = rng.standard_normal((40, 40))
    _, s = bicgstab(A, rng.standard_normal(40), tol=1e-14, max_iter=2)
    assert not s.converged


def test_block_jacobi_inverts_block_diagonal(rng):
    blocks = rng.standard_normal((4, 3, 3)) + 4 * np.eye(3)
    A = np.zeros((12, 12))
    for k, B in enumerate(blocks):
        A[3 * k:3 * k + 3, 3 * k:3 * k + 3] = B
    M = block_jacobi(A)
    x = rng.standard_normal(12)
    assert np.allclose(M @ (A @ x), x)


@pytest.mark.parametrize("formulation", ["collocation", "galerkin"])
@pytest.mark.parametrize("mode", ["iterative", "precondition", "direct"])
def test_mixed_solve_modes_agree(cuboid0, mat, formulation, mode):
    mesh = cuboid0.with_tags(lambda c: np.abs(c[:, 0] - c[:, 0].max()) < 1e-9)
    g_d, g_n = manufactured_bc(PointSource((5.0, 0.5, 0.5), (0.0, 0.0, 1.0)), mat)
    data = MixedTraceData.from_evaluators(mesh, g_d, g_n)
    ops = assemble(data, mat, formulation)
    sol, s = solve_mixed(ops, tol=1e-10, precondition=mode == "precondition", direct=mode == "direct")
    assert s.converged
    ref, _ = solve_mixed(ops, direct=True)
    assert np.allclose(sol.unknown_vector(), ref.unknown_vector(), rtol=1e-6, atol=1e-8 * np.abs(ref.unknown_vector()).max())
    err = rel_l2_error(mesh, sol.u, sol.t, g_d, g_n)
    assert err.err_u < 0.2 and err.err_t < 0.6
