import numpy as np
import pytest
from scipy.integrate import quad

from homlab import cellsolve
from homlab.fields import construct_field
from homlab.grid import torus_grid


@pytest.fixture(scope="module")
def laminate_cell():
    field = construct_field({"family": "laminate", "d": 2})
    grid = torus_grid(256, 2)
    corr = cellsolve.solve_all_periodic_correctors(field, grid)
    astar = cellsolve.homogenized_tensor(corr, grid)
    return field, grid, corr, astar


def test_trig_1d_astar_harmonic_mean():
    # a = 2 + sin(2 pi x): a* is the harmonic mean = sqrt(3)
    field = construct_field({"family": "trig", "d": 1})
    grid = torus_grid(2048, 1)
    corr = cellsolve.solve_all_periodic_correctors(field, grid)
    astar = cellsolve.homogenized_tensor(corr, grid)["matrix"][0, 0]
    I, _ = quad(lambda t: 1.0 / (2.0 + np.sin(2 * np.pi * t)), 0.0, 1.0,
                epsabs=1e-14)
    assert abs(astar - 1.0 / I) < 1e-10
    assert abs(astar - np.sqrt(3.0)) < 1e-6


def test_laminate_astar_exact(laminate_cell):
    # harmonic mean across, arithmetic mean along the layers
    _, _, _, astar = laminate_cell
    assert np.abs(astar["matrix"] - np.diag([1.6, 2.5])).max() < 1e-10
    assert astar["eig_min"] > 0


def test_identity_correctors_vanish():
    field = construct_field({"family": "identity", "d": 2})
    grid = torus_grid(32, 2)
    corr = cellsolve.solve_all_periodic_correctors(field, grid)
    for sol in corr:
        assert np.abs(sol["w"].values).max() < 1e-12
    astar = cellsolve.homogenized_tensor(corr, grid)["matrix"]
    assert np.allclose(astar, np.eye(2), atol=1e-12)


def test_corrector_zero_mean_and_residual(laminate_cell):
    _, _, corr, _ = laminate_cell
    for c in corr:
        assert abs(c["w"].values.mean()) < 1e-12
        assert c["residual"] < 1e-8


def test_diagnostic_field_refused():
    field = construct_field({"family": "dyadic"})
    with pytest.raises(ValueError):
        cellsolve.solve_periodic_corrector(field, 0, torus_grid(16, 1))


def test_flux_mean_zero(laminate_cell):
    _, grid, corr, astar = laminate_cell
    M = cellsolve.periodic_flux(corr, astar, grid)
    assert np.abs(M.reshape(2, 2, -1).mean(axis=-1)).max() < 1e-10


def test_potential_skew_and_divergence(laminate_cell):
    _, grid, corr, astar = laminate_cell
    M = cellsolve.periodic_flux(corr, astar, grid)
    B = cellsolve.periodic_potential(M, grid)
    # skewness is exact by construction
    assert np.abs(B + np.swapaxes(B, 1, 2)).max() == 0.0
    # discrete divergence identity, far below the 10 h ||M||_inf budget
    resid = cellsolve.potential_divergence_residual(B, M, grid)
    assert resid <= 10.0 * grid.h[0] * np.abs(M).max()
    assert resid < 1e-8


def test_potential_rejects_nonzero_mean(laminate_cell):
    _, grid, _, _ = laminate_cell
    M = np.ones((2, 2) + grid.shape)
    with pytest.raises(ValueError):
        cellsolve.periodic_potential(M, grid)


def test_potential_evaluator_normalized(laminate_cell):
    _, grid, corr, astar = laminate_cell
    M = cellsolve.periodic_flux(corr, astar, grid)
    B = cellsolve.periodic_potential(M, grid)
    ev = cellsolve.PeriodicPotentialEvaluator(B, grid)
    out0 = ev(np.zeros((1, 2)))[0]
    assert np.abs(out0).max() < 1e-14
    # periodic in the unit cell
    x = np.array([[0.37, 0.81]])
    assert np.allclose(ev(x), ev(x + 1.0), atol=1e-12)
    # skew in (i, j)
    v = ev(np.array([[0.2, 0.6]]))[0]
    assert np.allclose(v, -np.swapaxes(v, -1, -2), atol=1e-15)
