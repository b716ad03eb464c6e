"""Periodic cell problems: correctors, homogenized tensor, flux potential.

The corrector solve works on the unit torus; the potential B is built in
Fourier space with the *discrete* difference symbols matched to the
finite-volume staggering, so the divergence identity div B = M holds at the
level of the discrete flux (up to the corrector solver residual) even for
discontinuous laminates.
"""

import numpy as np

from .grid import Grid, GridField
from . import fd


def solve_periodic_corrector(field, k, grid, tol=1e-10, harmonic=False):
    """Solve -div(a_per (e_k + grad w)) = 0 on the torus.

    Returns a dict with the zero-mean corrector (GridField), its
    cell-centered gradient, the face fluxes of e_k + grad w, and the
    relative residual.
    """
    if field.diagnostic_only:
        raise ValueError(f"field {field.label} is diagnostic-only; "
                         "solvers refuse it")
    if not grid.periodic:
        raise ValueError("periodic corrector needs a torus grid")
    matfun = field.a_per
    A, _ = fd.assemble_diffusion(matfun, grid, harmonic=harmonic)
    b = fd.divergence_rhs(lambda pts: matfun(pts)[..., :, k], grid)
    x = fd.solve_linear(A, b.ravel(), tol=tol, zero_mean=True)
    w = x.reshape(grid.shape)
    ek = np.eye(grid.d)[k]
    fluxes = fd.face_fluxes(matfun, grid, w, p=ek, harmonic=harmonic)
    resid = fd.face_divergence(fluxes, grid)
    scale = max(np.linalg.norm(b.ravel()), 1.0)
    return {
        "w": GridField(grid, w),
        "grad_w": GridField(grid, fd.cell_gradient(w, grid)),
        "fluxes": fluxes,
        "residual": float(np.linalg.norm(resid.ravel()) / scale),
        "direction": k,
    }


def solve_all_periodic_correctors(field, grid, tol=1e-10, harmonic=False):
    return [solve_periodic_corrector(field, k, grid, tol, harmonic)
            for k in range(field.d)]


def homogenized_tensor(correctors, grid):
    """a* column k = cell average of a_per (e_k + grad w_k), via face fluxes.

    Averaging the face fluxes keeps laminates exact: on each face the flux
    is sampled where it is smooth (the corrector solve uses the same
    samples).  Returns dict with the constant matrix and its symmetric-part
    eigen range.
    """
    d = grid.d
    astar = np.zeros((d, d))
    for k, corr in enumerate(correctors):
        for i in range(d):
            astar[i, k] = float(np.mean(corr["fluxes"][i]))
    sym = 0.5 * (astar + astar.T)
    eigs = np.linalg.eigvalsh(sym)
    return {"matrix": astar, "eig_min": float(eigs.min()),
            "eig_max": float(eigs.max())}


def periodic_flux(correctors, astar, grid):
    """Periodic flux components M_k^i = a*_ik - [a(e_k + grad w_k)]_i.

    M_k^i is indexed like cells but lives on the i-faces (face between
    c - e_i and c), matching the finite-volume staggering.  Returns array
    of shape (d, d, *grid.shape) with [k, i] slices.
    """
    d = grid.d
    M = np.zeros((d, d) + tuple(grid.shape))
    mat = astar["matrix"] if isinstance(astar, dict) else astar
    for k, corr in enumerate(correctors):
        for i in range(d):
            M[k, i] = mat[i, k] - corr["fluxes"][i]
    return M


def _stagger_symbols(grid):
    """Backward-difference and 3-point Laplacian FFT symbols per axis."""
    d, shape, h = grid.d, grid.shape, grid.h
    Dm = []
    lap = np.zeros(shape)
    for i in range(d):
        theta = 2.0 * np.pi * np.fft.fftfreq(shape[i])
        sym = (1.0 - np.exp(-1j * theta)) / h[i]
        sh = [1] * d
        sh[i] = shape[i]
        Dm.append(sym.reshape(sh))
        lap = lap + (-4.0 / h[i] ** 2) * np.sin(theta / 2.0).reshape(sh) ** 2
    return Dm, lap


def periodic_potential(M, grid, mean_tol=1e-8):
    """Skew potential B with div B_k = M_k from -Lap B = d_j M^i - d_i M^j.

    M has shape (d, d, *grid.shape) with M[k, i] on the i-faces.  The
    Poisson solve is spectral with the discrete backward-difference symbols,
    so B[k, i, j] sits on the (i, j) edge stagger and the *discrete*
    divergence identity sum_i D+_i B_k^{ij} = M_k^j holds up to the
    discrete divergence of M (the corrector residual).  Skew-symmetry in
    (i, j) is exact by construction.
    """
    d = grid.d
    means = np.abs(M.reshape(d, d, -1).mean(axis=-1))
    if means.max() > mean_tol:
        raise ValueError(f"flux has nonzero mean {means.max():.2e}; "
                         "homogenized tensor inconsistent")
    Dm, lap = _stagger_symbols(grid)
    axes = tuple(range(2, 2 + d))
    Mh = np.fft.fftn(M, axes=axes)
    B = np.zeros((d, d, d) + tuple(grid.shape))
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(lap != 0, -1.0 / lap, 0.0)
    for k in range(d):
        for i in range(d):
            for j in range(i + 1, d):
                rhs = Dm[j] * Mh[k, i] - Dm[i] * Mh[k, j]
                Bh = rhs * inv
                Bh.flat[0] = 0.0
                Bkij = np.fft.ifftn(Bh).real
                B[k, i, j] = Bkij
                B[k, j, i] = -Bkij
    return B


def potential_divergence_residual(B, M, grid):
    """max_j max-norm of sum_i D+_i B_k^{ij} - M_k^j (staggering-consistent)."""
    d, h = grid.d, grid.h
    worst = 0.0
    for k in range(d):
        for j in range(d):
            div = np.zeros(grid.shape)
            for i in range(d):
                div += (np.roll(B[k, i, j], -1, axis=i) - B[k, i, j]) / h[i]
            worst = max(worst, float(np.abs(div - M[k, j]).max()))
    return worst


class PeriodicPotentialEvaluator:
    """Point evaluator for the staggered periodic potential.

    B[k, i, j] values at index n sit at x_n - (h_i e_i + h_j e_j)/2; the
    evaluator interpolates each component on its own shifted axes with
    periodic wrap and subtracts B(0) (normalization B(0) = 0).
    """

    def __init__(self, B, grid):
        self.grid = grid
        self.d = grid.d
        self._fields = {}
        for i in range(self.d):
            for j in range(i + 1, self.d):
                vals = np.stack([B[k, i, j] for k in range(self.d)], axis=-1)
                # shift the sampled values onto the standard cell centers:
                # value at x_n - (h_i e_i + h_j e_j)/2 == sample of a field
                # whose n-th center is that point; reuse GridField with a
                # translated grid.
                lo = list(grid.lo)
                hi = list(grid.hi)
                lo[i] -= grid.h[i] / 2.0
                hi[i] -= grid.h[i] / 2.0
                lo[j] -= grid.h[j] / 2.0
                hi[j] -= grid.h[j] / 2.0
                g = Grid(tuple(lo), tuple(hi), tuple(grid.shape), periodic=True)
                self._fields[(i, j)] = GridField(g, vals)
        self._shift = None
        zero = np.zeros((1, self.d))
        self._shift = self._raw(zero)[0]

    def _raw(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1] + (self.d, self.d, self.d))
        for (i, j), f in self._fields.items():
            vals = f.interp(x)
            for k in range(self.d):
                out[..., k, i, j] = vals[..., k]
                out[..., k, j, i] = -vals[..., k]
        return out

    def __call__(self, x):
        out = self._raw(x)
        if self._shift is not None:
            out = out - self._shift
        return out
