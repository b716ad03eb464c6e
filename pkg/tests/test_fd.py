import numpy as np
import pytest
import scipy.sparse as sp

from homlab import fd
from homlab.grid import box_grid, torus_grid


def const_mat(mat):
    mat = np.asarray(mat, dtype=float)

    def mf(pts):
        pts = np.asarray(pts, dtype=float)
        return np.broadcast_to(mat, pts.shape[:-1] + mat.shape).copy()
    return mf


def test_dirichlet_order2_full_tensor():
    # anisotropic constant tensor with cross terms; manufactured solution
    A = np.array([[2.0, 0.5], [0.5, 1.0]])

    def u(x):
        return np.sin(np.pi * x[..., 0]) * np.sin(np.pi * x[..., 1])

    def f(x):
        s1, c1 = np.sin(np.pi * x[..., 0]), np.cos(np.pi * x[..., 0])
        s2, c2 = np.sin(np.pi * x[..., 1]), np.cos(np.pi * x[..., 1])
        return np.pi ** 2 * ((A[0, 0] + A[1, 1]) * s1 * s2
                             - (A[0, 1] + A[1, 0]) * c1 * c2)

    errs = []
    for n in (32, 64, 128):
        g = box_grid(1.0, n, 2)
        M, rhs_bc = fd.assemble_diffusion(const_mat(A), g)
        b = f(g.cell_centers()).ravel() + rhs_bc
        x = fd.solve_linear(M, b, tol=1e-12)
        errs.append(np.abs(x.reshape(g.shape) - u(g.cell_centers())).max())
    order = np.log2(errs[0] / errs[1]), np.log2(errs[1] / errs[2])
    assert min(order) > 1.9, (errs, order)


def test_periodic_operator_annihilates_constants():
    g = torus_grid(16, 2)

    def mf(pts):
        s = 2.0 + np.sin(2 * np.pi * pts[..., 0])
        return s[..., None, None] * np.eye(2)

    A, _ = fd.assemble_diffusion(mf, g)
    ones = np.ones(g.ncells)
    assert np.abs(A @ ones).max() < 1e-12
    # symmetric for isotropic coefficients
    assert abs(A - A.T).max() < 1e-12


def test_face_divergence_of_fluxes_matches_operator():
    g = torus_grid(16, 2)

    def mf(pts):
        s = 2.0 + np.sin(2 * np.pi * pts[..., 0]) * np.cos(2 * np.pi * pts[..., 1])
        return s[..., None, None] * np.eye(2)

    rng = np.random.default_rng(1)
    u = rng.standard_normal(g.shape)
    A, _ = fd.assemble_diffusion(mf, g)
    fluxes = fd.face_fluxes(mf, g, u)
    div = fd.face_divergence(fluxes, g)
    assert np.allclose(-div.ravel(), A @ u.ravel(), atol=1e-10)


def test_harmonic_integral_face_coeff_exact_for_constant():
    g = box_grid(1.0, 64, 1)
    fc = fd.harmonic_integral_face_coeff_1d(const_mat(np.eye(1)), g)
    assert fc.shape == (65,)
    assert np.allclose(fc, 1.0, atol=1e-14)


def test_harmonic_integral_face_coeff_oracle():
    # a(x) = 2 + sin(2 pi x / eps): segment value is len / int 1/a
    from scipy.integrate import quad
    eps = 0.05
    g = box_grid(1.0, 32, 1)

    def mf(pts):
        s = 2.0 + np.sin(2 * np.pi * np.asarray(pts)[..., 0] / eps)
        return s[..., None, None]

    fc = fd.harmonic_integral_face_coeff_1d(mf, g, panels=256)
    xs = g.axis_centers(0)
    lo, hi = xs[3], xs[4]
    I, _ = quad(lambda t: 1.0 / (2.0 + np.sin(2 * np.pi * t / eps)), lo, hi,
                epsabs=1e-14, limit=500)
    assert abs(fc[4] - (hi - lo) / I) < 1e-9


def test_divergence_rhs_constant_vector_is_zero():
    g = box_grid(1.0, 16, 2)

    def vec(pts):
        return np.broadcast_to(np.array([1.0, -2.0]),
                               pts.shape[:-1] + (2,)).copy()

    out = fd.divergence_rhs(vec, g)
    # interior divergence of a constant field vanishes
    assert np.abs(out[1:-1, 1:-1]).max() < 1e-12


def test_solve_linear_direct_and_iterative_agree():
    g = box_grid(1.0, 48, 2)
    A, _ = fd.assemble_diffusion(const_mat(np.eye(2)), g)
    b = np.sin(np.arange(g.ncells))
    xd = fd.solve_linear(A, b, tol=1e-12, method="direct")
    xi = fd.solve_linear(A, b, tol=1e-12, method="iterative")
    assert np.linalg.norm(xd - xi) / np.linalg.norm(xd) < 1e-8


def test_solve_linear_zero_mean_gauge():
    g = torus_grid(16, 2)

    def mf(pts):
        s = 2.0 + np.sin(2 * np.pi * pts[..., 0])
        return s[..., None, None] * np.eye(2)

    A, _ = fd.assemble_diffusion(mf, g)
    rng = np.random.default_rng(0)
    b = rng.standard_normal(g.ncells)
    x = fd.solve_linear(A, b, tol=1e-10, zero_mean=True)
    assert abs(x.mean()) < 1e-12


def test_solve_linear_iteration_cap_raises():
    g = box_grid(1.0, 48, 2)
    A, _ = fd.assemble_diffusion(const_mat(np.eye(2)), g)
    b = np.ones(g.ncells)
    with pytest.raises(fd.SolverError):
        fd.solve_linear(A, b, tol=1e-12, iteration_cap=1)


def test_spectral_poisson_matches_sparse():
    g = torus_grid(32, 2)
    rng = np.random.default_rng(2)
    rhs = rng.standard_normal(g.shape)
    rhs -= rhs.mean()
    u_fft = fd.spectral_poisson_torus(rhs, g)
    A, _ = fd.assemble_diffusion(const_mat(np.eye(2)), g)
    u_sp = fd.solve_linear(A, rhs.ravel(), tol=1e-12,
                           zero_mean=True).reshape(g.shape)
    assert np.abs(u_fft - u_sp).max() < 1e-9
