from __future__ import annotations

import numpy as np
import pytest

from rheoflow import diagnostics
from rheoflow.grid import Grid


@pytest.fixture
def grid():
    return Grid(6, 5, 1.5, 1.0)


def test_gradient_is_negative_divergence_adjoint(grid):
    rng = np.random.default_rng(0)
    U = rng.standard_normal(grid.n_unknowns)
    p = rng.standard_normal(grid.nx * grid.ny)
    assert (grid.DIV @ U) @ p == pytest.approx(-(U @ (grid.GRAD @ p)), rel=1e-12)
    assert abs(grid.GRAD + grid.DIV.T).max() == 0.0


def test_divergence_operator_matches_array_form(grid):
    rng = np.random.default_rng(1)
    U = rng.standard_normal(grid.n_unknowns)
    u, v = grid.unpack(U)
    np.testing.assert_allclose(grid.DIV @ U, grid.divergence(u, v).ravel(), atol=1e-12)


def test_pack_unpack_round_trip(grid):
    U = np.arange(grid.n_unknowns, dtype=float)
    u, v = grid.unpack(U)
    assert u.shape == (grid.ny, grid.nx) and v.shape == (grid.ny + 1, grid.nx)
    assert np.all(v[0] == 0) and np.all(v[-1] == 0)
    np.testing.assert_array_equal(grid.pack(u, v), U)


def curl(grid, psi):
    """Face velocities of a node stream function."""
    u = (psi[1:] - psi[:-1]) / grid.dy
    v = -(np.roll(psi, -1, axis=1) - psi) / grid.dx
    return u, v


def test_discrete_curl_is_solenoidal(grid):
    X, Y = grid.node_coords()
    u, v = curl(grid, np.sin(np.pi * Y) ** 2 * np.cos(2 * np.pi * X / grid.lx) + Y)
    assert np.all(v[0] == 0) and np.all(v[-1] == 0)
    assert np.abs(grid.divergence(u, v)).max() < 1e-12


def test_smooth_bank_is_solenoidal(grid):
    X, Y = grid.centre_coords()
    for f in diagnostics.field_bank(grid):
        dudx, _, _, dvdy = f.grad(X, Y)
        assert np.abs(dudx + dvdy).max() < 1e-12, f.name
        Xn, Yn = grid.node_coords()
        assert np.all(np.abs(f.W(Xn[0], Yn[0])[1]) < 1e-15), f.name


def test_laplacian_null_space_is_constants(grid):
    L = (grid.DIV @ grid.GRAD).toarray()
    w = np.linalg.eigvalsh(0.5 * (L + L.T))
    assert np.all(w <= 1e-10)
    assert np.sum(np.abs(w) < 1e-10) == 1


def test_strain_and_stress_divergence_are_adjoint(grid):
    # sum S:E(U) vol equals U dotted with the transpose applied to S
    rng = np.random.default_rng(2)
    U = rng.standard_normal(grid.n_unknowns)
    Sxx, Syy = rng.standard_normal((2, grid.nx * grid.ny))
    lhs = Sxx @ (grid.Exx @ U) + Syy @ (grid.Eyy @ U)
    rhs = U @ (grid.Exx.T @ Sxx + grid.Eyy.T @ Syy)
    assert lhs == pytest.approx(rhs, rel=1e-12)
    # trace-free strain of a solenoidal field
    X, Y = grid.node_coords()
    W = grid.pack(*curl(grid, np.sin(np.pi * Y) ** 2 * np.sin(2 * np.pi * X / grid.lx)))
    np.testing.assert_allclose(grid.Exx @ W + grid.Eyy @ W, 0.0, atol=1e-12)


@pytest.mark.parametrize("args", [(3, 8, 1, 1), (8, 3, 1, 1), (8, 8, 0, 1), (8, 8, 1, -1)])
def test_invalid_grid(args):
    with pytest.raises(ValueError):
        Grid(*args)
