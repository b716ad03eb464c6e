"""Two-scale remainder and source assembly, norms, residual verification.

R(x)   = u_eps(x) - u*(x) - eps sum_j w_j(x/eps) d_j u*(x)
grad R = grad u_eps - grad u* - sum_j [grad w_j(x/eps) d_j u*(x)
                                       + eps w_j(x/eps) grad d_j u*(x)]
H_i(x) = eps sum_{j,k} [a_ij(x/eps) w_k(x/eps) - B_k^{ij}(x/eps)]
         d_j d_k u*(x)

grad R uses the product rule with the correctors' own gradients instead of
differencing the assembled R on the grid: the corrector is stored on its
own (coarser) lattice and grid-differencing R would amplify its
interpolation error by 1/(eps * delta).
"""

import numpy as np

from .grid import GridField
from . import fd
from .fields import eval_matrix


def assemble_remainder(u_eps, u_star, correctors, eps, grad_u_star,
                       hess_u_star):
    """Assemble R and grad R on the grid of u_eps.

    u_eps, u_star: GridFields on the same grid (u_star may be the numeric
    homogenized solve; its discretization error then enters R at O(h^2)).
    grad_u_star, hess_u_star: callables giving the exact first/second
    derivatives of the manufactured u*.  correctors: per-direction entries
    with .w / .grad, normalized at 0.
    """
    grid = u_eps.grid
    if u_star.grid.shape != grid.shape:
        raise ValueError("grid mismatch between u_eps and u_star")
    d = grid.d
    pts = grid.cell_centers()
    y = pts / eps
    gu = np.asarray(grad_u_star(pts), dtype=float)
    hu = np.asarray(hess_u_star(pts), dtype=float)

    R = u_eps.values - u_star.values
    gradR = (fd.cell_gradient(u_eps.values, grid)
             - fd.cell_gradient(u_star.values, grid))
    for j in range(d):
        wj = correctors[j].w(y)
        gwj = correctors[j].grad(y)
        R = R - eps * wj * gu[..., j]
        gradR = gradR - gwj * gu[..., j:j + 1] \
            - eps * wj[..., None] * hu[..., :, j]
    return {"R": GridField(grid, R), "gradR": GridField(grid, gradR)}


def pointwise_H(field, correctors, potential, eps, hess_u_star):
    """Callable x -> H(x) with components
    H_i = eps sum_{j,k} [a_ij(x/eps) w_k(x/eps) - B_k^{ij}(x/eps)] d_jd_k u*.
    potential maps y -> (..., d, d, d) with indices [k, i, j] and
    B(0) = 0 normalization (None for no-potential variants)."""
    d = field.d

    def H(x):
        x = np.asarray(x, dtype=float)
        y = x / eps
        a = eval_matrix(field, y)
        hu = np.asarray(hess_u_star(x), dtype=float)
        B = potential(y) if potential is not None else None
        out = np.zeros(x.shape[:-1] + (d,))
        for k in range(d):
            wk = correctors[k].w(y)
            # a_ij w_k - B_k^{ij}, contracted with d_j d_k u*
            awk = a * wk[..., None, None]
            if B is not None:
                awk = awk - B[..., k, :, :]
            out += eps * np.einsum("...ij,...j->...i", awk, hu[..., :, k])
        return out
    return H


def assemble_H(field, correctors, potential, eps, grid, hess_u_star):
    """H sampled at the cell centers of grid (see pointwise_H)."""
    H = pointwise_H(field, correctors, potential, eps, hess_u_star)
    return GridField(grid, H(grid.cell_centers()))


class CombinedPotential:
    """B(y) = B_per(y) + B_defect(y) - B(0); parts may be None."""

    def __init__(self, d, periodic=None, defect=None):
        self.d = d
        self.parts = [p for p in (periodic, defect) if p is not None]
        self._shift = 0.0
        zero = np.zeros((1, d))
        self._shift = self._raw(zero)[0]

    def _raw(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros(y.shape[:-1] + (self.d,) * 3)
        for p in self.parts:
            out = out + p(y)
        return out

    def __call__(self, y):
        return self._raw(y) - self._shift


def residual_check(Rfield, H, field, eps, omega1_half_side):
    """Discrete L2 norm over Omega_1 of -div(a(x/eps) grad R) - div H.

    H is a callable on positions returning (..., d) (sampled on faces).
    The operator rows at boundary cells assume homogeneous data that R does
    not satisfy; they are excluded by the interior restriction.
    """
    grid = Rfield.grid
    matfun = lambda pts: eval_matrix(field, np.asarray(pts) / eps)
    A, _ = fd.assemble_diffusion(matfun, grid)
    lhs = (A @ Rfield.values.ravel()).reshape(grid.shape)
    rhs = fd.divergence_rhs(H, grid)
    res = lhs - rhs
    mask = omega1_mask(grid, omega1_half_side)
    return float(np.sqrt(np.sum(res[mask] ** 2) * grid.cell_volume))


def omega1_mask(grid, half_side, center=None):
    pts = grid.cell_centers()
    if center is None:
        center = np.zeros(grid.d)
    off = np.abs(pts - np.asarray(center, dtype=float))
    return np.all(off <= half_side, axis=-1)


def field_norm(v, p=2, subdomain_half_side=None, center=None, beta=None,
               n_pairs=10000, seed=0):
    """L^p norm (volume-weighted) or sampled Holder seminorm of a GridField.

    p may be a float in [1, inf) or np.inf.  beta, when given, switches to
    the C^{0,beta} seminorm estimated on a decimated lattice plus random
    pairs (p is ignored).
    """
    grid = v.grid
    vals = np.asarray(v.values, dtype=float)
    if vals.ndim > grid.d:
        vals = np.sqrt((vals.reshape(grid.shape + (-1,)) ** 2).sum(axis=-1))
    if subdomain_half_side is not None:
        mask = omega1_mask(grid, subdomain_half_side, center)
    else:
        mask = np.ones(grid.shape, dtype=bool)
    if beta is not None:
        if not (0 < beta <= 1):
            raise ValueError("beta outside (0, 1]")
        pts = grid.cell_centers()[mask]
        sel = vals[mask]
        if len(sel) == 0:
            raise ValueError("empty subdomain")
        rng = np.random.default_rng(seed)
        stride = max(1, int(len(sel) / np.sqrt(n_pairs)))
        xs, vs = pts[::stride], sel[::stride]
        best = 0.0
        for _ in range(2):
            ii = rng.integers(0, len(xs), size=min(n_pairs, len(xs) ** 2))
            jj = rng.integers(0, len(xs), size=len(ii))
            keep = ii != jj
            dx = np.linalg.norm(xs[ii[keep]] - xs[jj[keep]], axis=-1)
            dv = np.abs(vs[ii[keep]] - vs[jj[keep]])
            if len(dx):
                best = max(best, float((dv / dx ** beta).max()))
        return best
    sel = vals[mask]
    if sel.size == 0:
        raise ValueError("empty subdomain")
    if p == np.inf or (isinstance(p, str) and p in ("inf", "Linf")):
        return float(np.abs(sel).max())
    p = float(p)
    if p < 1:
        raise ValueError("p must be >= 1")
    return float((np.sum(np.abs(sel) ** p) * grid.cell_volume) ** (1.0 / p))
