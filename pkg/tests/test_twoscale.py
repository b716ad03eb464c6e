import numpy as np
import pytest

from homlab import twoscale
from homlab.defectsolve import ZeroCorrector
from homlab.fields import construct_field
from homlab.grid import GridField, box_grid, sample_on_grid


def test_remainder_identical_solutions_vanish():
    g = box_grid(1.0, 32, 2)
    u = sample_on_grid(lambda x: x[..., 0] ** 2, g)
    zeros = [ZeroCorrector(2), ZeroCorrector(2)]
    rem = twoscale.assemble_remainder(
        u, u, zeros, 0.25,
        lambda x: np.zeros(x.shape),
        lambda x: np.zeros(x.shape + (2,)))
    assert np.abs(rem["R"].values).max() == 0.0
    assert np.abs(rem["gradR"].values).max() == 0.0


def test_remainder_rejects_grid_mismatch():
    g1 = box_grid(1.0, 32, 2)
    g2 = box_grid(1.0, 16, 2)
    u1 = sample_on_grid(lambda x: x[..., 0], g1)
    u2 = sample_on_grid(lambda x: x[..., 0], g2)
    with pytest.raises(ValueError):
        twoscale.assemble_remainder(u1, u2, [ZeroCorrector(2)] * 2, 0.25,
                                    lambda x: np.zeros(x.shape),
                                    lambda x: np.zeros(x.shape + (2,)))


def test_pointwise_H_zero_without_correctors_or_potential():
    field = construct_field({"family": "identity", "d": 2})
    H = twoscale.pointwise_H(field, [ZeroCorrector(2)] * 2, None, 0.25,
                             lambda x: np.ones(x.shape + (2,)))
    assert np.abs(H(np.zeros((5, 2)))).max() == 0.0


def test_assemble_H_matches_pointwise():
    field = construct_field({"family": "compact-defect", "d": 2})

    class FakeCorr:
        def w(self, y):
            return np.sin(y[..., 0])

        def grad(self, y):
            return np.zeros(y.shape)

    hess = lambda x: np.broadcast_to(np.eye(2), x.shape + (2,)).copy()
    g = box_grid(1.0, 16, 2)
    corr = [FakeCorr(), FakeCorr()]
    Hf = twoscale.assemble_H(field, corr, None, 0.5, g, hess)
    Hp = twoscale.pointwise_H(field, corr, None, 0.5, hess)
    assert np.allclose(Hf.values, Hp(g.cell_centers()), atol=1e-14)


def test_field_norm_lp_closed_form():
    g = box_grid(1.0, 256, 1)
    f = sample_on_grid(lambda x: x[..., 0], g)
    # ||x||_L2(-1,1) = sqrt(2/3); midpoint quadrature is O(h^2)
    assert abs(twoscale.field_norm(f, p=2) - np.sqrt(2.0 / 3.0)) < 1e-4
    assert abs(twoscale.field_norm(f, p=np.inf) - 1.0) < 1e-2
    # vector field: pointwise euclidean magnitude enters the norm
    fv = sample_on_grid(
        lambda x: np.stack([x[..., 0], -x[..., 0]], axis=-1), g)
    assert abs(twoscale.field_norm(fv, p=2)
               - np.sqrt(2.0) * np.sqrt(2.0 / 3.0)) < 1e-4


def test_field_norm_subdomain():
    g = box_grid(1.0, 128, 2)
    f = sample_on_grid(lambda x: np.ones(x.shape[:-1]), g)
    # L2 over the centered half-box of area 1
    assert abs(twoscale.field_norm(f, p=2, subdomain_half_side=0.5)
               - 1.0) < 1e-12


def test_field_norm_holder_linear():
    g = box_grid(1.0, 64, 1)
    f = sample_on_grid(lambda x: 3.0 * x[..., 0], g)
    # C^{0,1} seminorm of 3x is 3
    est = twoscale.field_norm(f, beta=1.0)
    assert abs(est - 3.0) < 1e-8


def test_holder_interpolation_inequality():
    # invariant: ||.||_L2(O1) <= ||.||_Lq(O1) |O1|^{1/2 - 1/q} for q >= 2
    g = box_grid(1.0, 128, 2)
    rng = np.random.default_rng(3)
    f = GridField(g, rng.standard_normal(g.shape))
    l2 = twoscale.field_norm(f, p=2, subdomain_half_side=0.5)
    l4 = twoscale.field_norm(f, p=4, subdomain_half_side=0.5)
    vol = 1.0  # |O1| = 1
    assert l2 <= l4 * vol ** (0.5 - 0.25) + 1e-12


def test_omega1_mask_bounds():
    g = box_grid(1.0, 32, 2)
    m = twoscale.omega1_mask(g, 0.5)
    pts = g.cell_centers()[m]
    assert np.all(np.abs(pts) <= 0.5)
    assert m.sum() == 16 * 16
