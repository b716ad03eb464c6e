import numpy as np
import pytest
from scipy.integrate import quad

from homlab import defectsolve
from homlab.fields import construct_field
from homlab.grid import box_grid


@pytest.fixture(scope="module")
def compact2d():
    return construct_field({"family": "compact-defect", "d": 2})


@pytest.fixture(scope="module")
def radial_profile(compact2d):
    return defectsolve.radial_corrector_profile(compact2d)


def test_truncation_plan_margin(compact2d):
    plan = defectsolve.TruncationPlan(half_side=4.0, cells=64)
    with pytest.raises(ValueError):
        plan.validate(compact2d)  # 4 < 4 * rho = 8
    ok = defectsolve.TruncationPlan(half_side=8.0, cells=64)
    assert ok.validate(compact2d) == "ok"


def test_truncation_plan_slow_decay_waiver():
    field = construct_field({"family": "algebraic-defect", "d": 2, "r": 4})
    plan = defectsolve.TruncationPlan(half_side=16.0, cells=64)
    with pytest.raises(ValueError):
        plan.validate(field)
    waived = defectsolve.TruncationPlan(half_side=16.0, cells=64,
                                        allow_slow_decay=True)
    assert waived.validate(field) == "waived"


def test_radial_gradient_matches_fd(radial_profile):
    corr = defectsolve.RadialCorrector(radial_profile, 0, 2)
    rng = np.random.default_rng(0)
    pts = rng.uniform(-3, 3, size=(40, 2))
    eps = 1e-5
    for i in range(2):
        e = np.zeros(2)
        e[i] = eps
        num = (corr.w(pts + e) - corr.w(pts - e)) / (2 * eps)
        assert np.abs(corr.grad(pts)[:, i] - num).max() < 5e-4


def test_radial_vs_box_cross_check(compact2d, radial_profile):
    # the truncated Dirichlet solve converges to the exact radial route
    corr = defectsolve.RadialCorrector(radial_profile, 0, 2)
    plan = defectsolve.TruncationPlan(half_side=16.0, cells=512)
    sol = defectsolve.solve_defect_corrector(compact2d, 0, plan)
    pts = np.array([[0.5, 0.0], [1.0, 1.0], [-1.5, 0.5], [0.0, 2.5]])
    exact = corr.w(pts)
    approx = sol["w"].interp(pts)
    # the box value carries an O(1/L) truncation offset; compare increments
    d_exact = exact - corr.w(np.array([[0.25, 0.0]]))
    d_box = approx - sol["w"].interp(np.array([[0.25, 0.0]]))
    assert np.abs(d_exact - d_box).max() < 5e-3


def test_doubling_diagnostic_shrinks(compact2d):
    plan = defectsolve.TruncationPlan(half_side=8.0, cells=128, doublings=2)
    diag = defectsolve.doubling_diagnostic(compact2d, 0, plan)
    rel = diag["relative_changes"]
    assert rel[-1] < rel[0]
    assert rel[-1] < 0.02


def test_corrector_1d_exact_against_quadrature():
    field = construct_field({"family": "slow-decay-1d", "r": 2})
    corr = defectsolve.corrector_1d_exact(field, z_max=100.0, dz=1e-3)

    def integrand(z):
        at = field.a_tilde(np.array([[z]]))[0, 0, 0]
        return -at / (1.0 + at)

    for z0 in (0.5, 3.0, 42.0):
        I, _ = quad(integrand, 0.0, z0, epsabs=1e-13, limit=500)
        assert abs(float(corr.w(np.array([[z0]]))[0]) - I) < 1e-9


def test_zero_corrector():
    z = defectsolve.ZeroCorrector(2)
    x = np.zeros((3, 2))
    assert np.all(z.w(x) == 0) and np.all(z.grad(x) == 0)


def test_sum_corrector_normalized(radial_profile):
    c0 = defectsolve.RadialCorrector(radial_profile, 0, 2)
    s = defectsolve.assemble_full_corrector(c0, c0)
    assert abs(float(s.w(np.zeros((1, 2)))[0])) < 1e-14
    pts = np.random.default_rng(1).uniform(-2, 2, (10, 2))
    assert np.allclose(s.grad(pts), 2 * c0.grad(pts))


def test_defect_potential_identity(compact2d, radial_profile):
    correctors = [defectsolve.RadialCorrector(radial_profile, k, 2)
                  for k in range(2)]
    grid = box_grid(12.0, 384, 2)
    M = defectsolve.defect_flux_on_grid(compact2d, correctors, None, grid)
    B, og = defectsolve.defect_potential(M, grid)
    # skew-symmetry exact by construction
    assert np.abs(B + np.swapaxes(B, 1, 2)).max() == 0.0
    resid = defectsolve.potential_divergence_residual_box(B, M, og)
    assert resid <= 10.0 * og.h[0] * np.abs(M).max()


def test_defect_potential_offset_grid(compact2d, radial_profile):
    # evaluating on an extended aligned grid agrees with the same-grid values
    correctors = [defectsolve.RadialCorrector(radial_profile, k, 2)
                  for k in range(2)]
    src = box_grid(8.0, 128, 2)
    M = defectsolve.defect_flux_on_grid(compact2d, correctors, None, src)
    B_same, _ = defectsolve.defect_potential(M, src)
    out = box_grid(16.0, 256, 2)
    B_ext, _ = defectsolve.defect_potential(M, src, out)
    assert np.allclose(B_ext[:, :, :, 64:192, 64:192], B_same, atol=1e-12)


def test_defect_potential_rejects_misaligned(compact2d, radial_profile):
    correctors = [defectsolve.RadialCorrector(radial_profile, k, 2)
                  for k in range(2)]
    src = box_grid(8.0, 128, 2)
    M = defectsolve.defect_flux_on_grid(compact2d, correctors, None, src)
    bad = box_grid(8.0, 96, 2)  # different spacing
    with pytest.raises(ValueError):
        defectsolve.defect_potential(M, src, bad)


def test_growth_profile_linear_function():
    res = defectsolve.growth_profile(lambda x: x[..., 0],
                                     scales=[2.0, 4.0, 8.0, 16.0])
    assert abs(res["exponent"] - 1.0) < 0.05
