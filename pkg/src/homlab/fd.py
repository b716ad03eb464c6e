"""Cell-centered finite-volume discretization of -div(a grad u) and solvers.

The operator is assembled in flux form: on every face the normal flux
F_i = sum_j a_ij(x_face) (d_j u)_face is built from the face-sampled
coefficient; (A u)_c = -div_h F.  Normal derivatives use the two adjacent
cells, tangential ones a four-point average of centered differences.  On
Dirichlet boundaries the face value is pinned through a half-cell one-sided
difference (second order in L^2); tangential terms at a boundary use a
ghost value mirrored through the homogeneous boundary condition.
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

try:
    import pyamg
except ImportError:  # pragma: no cover
    pyamg = None


class SolverError(RuntimeError):
    """Linear solve failed to reach the requested residual."""


# ---------------------------------------------------------------------------
# assembly

def _coef_on_faces(matfun, grid, axis, harmonic=False):
    """Coefficient matrices sampled at the axis-faces.

    Returns array of shape (*face_shape, d, d).  harmonic=True replaces the
    midpoint sample by the harmonic average of the two adjacent cell-center
    samples (diagonal entries only), which is more robust for laminates.
    """
    pts = grid.face_centers(axis)
    a = matfun(pts)
    if harmonic:
        c = matfun(grid.cell_centers())
        if grid.periodic:
            left = np.roll(c, 1, axis=axis)
            right = c
        else:
            sl = [slice(None)] * grid.d
            sl[axis] = slice(0, -1)
            left = c[tuple(sl)]
            sl[axis] = slice(1, None)
            right = c[tuple(sl)]
        hmean = 2.0 * left * right / (left + right)
        if grid.periodic:
            a = hmean
        else:
            sl = [slice(None)] * grid.d
            sl[axis] = slice(1, -1)
            a[tuple(sl)] = hmean
    return a


def harmonic_integral_face_coeff_1d(matfun, grid, panels=8):
    """Exact-scheme face coefficients in 1D: length / int dx / a(x).

    Composite Simpson over each inter-center gap (half cells at the
    boundary).  With these coefficients the two-point flux is exact for
    piecewise-smooth a, removing the midpoint-sampling error that dominates
    for strongly oscillatory coefficients.
    """
    if grid.d != 1 or grid.periodic:
        raise ValueError("1D box grids only")
    xs = grid.axis_centers(0)
    faces = grid.axis_faces(0)
    left = np.concatenate(([faces[0]], xs))       # segment starts
    right = np.concatenate((xs, [faces[-1]]))     # segment ends
    m = 2 * panels + 1
    t = np.linspace(0.0, 1.0, m)
    pts = left[:, None] + (right - left)[:, None] * t[None, :]
    vals = 1.0 / matfun(pts[..., None])[..., 0, 0]
    wts = np.ones(m)
    wts[1:-1:2] = 4.0
    wts[2:-1:2] = 2.0
    wts /= 3.0 * (m - 1) / 1.0
    integral = (vals * wts).sum(axis=1)           # mean of 1/a over segment
    return 1.0 / integral


def assemble_diffusion(matfun, grid, g=None, harmonic=False, face_coeff=None):
    """Assemble A ~ -div(a grad .) on the grid.

    matfun maps positions (..., d) -> (..., d, d).  For box grids the
    boundary condition is Dirichlet with face values from g (callable on
    positions; None means homogeneous).  Returns (A csr, rhs_bc) where
    rhs_bc collects the boundary-data contribution to the right-hand side.

    The matrix is symmetric for symmetric face coefficients on periodic
    grids and for diagonal coefficients on box grids.
    """
    d, shape, h = grid.d, grid.shape, grid.h
    ncell = grid.ncells
    idx = np.arange(ncell).reshape(shape)
    rows, cols, data = [], [], []
    rhs_bc = np.zeros(ncell)

    def add(r, c, w):
        rows.append(np.asarray(r).ravel())
        cols.append(np.asarray(c).ravel())
        data.append(np.asarray(w).ravel())

    def shifted(base_idx, j, step):
        """Target indices of cell c + step*e_j; ghost -> (adjacent, True)."""
        tgt = np.roll(base_idx, -step, axis=j)
        if grid.periodic:
            return tgt, np.zeros(base_idx.shape, dtype=bool)
        ghost = np.zeros(base_idx.shape, dtype=bool)
        sl = [slice(None)] * d
        sl[j] = slice(-step, None) if step > 0 else slice(None, -step)
        ghost[tuple(sl)] = True
        return tgt, ghost

    for i in range(d):
        af = _coef_on_faces(matfun, grid, i, harmonic=harmonic)
        fcov = None if face_coeff is None else np.asarray(face_coeff[i])
        if grid.periodic:
            # face array indexed by cell c = face between c-e_i and c
            faceL = np.roll(idx, 1, axis=i)   # cell left of face c
            faceR = idx                        # cell right of face c
            f_int = slice(None)
            rowp = idx                         # +F/h to row c
            rowm = faceL                       # -F/h to row c-e_i
        else:
            sl = [slice(None)] * d
            sl[i] = slice(1, -1)
            af_int = af[tuple(sl)]
            slL = [slice(None)] * d
            slL[i] = slice(0, -1)
            slR = [slice(None)] * d
            slR[i] = slice(1, None)
            faceL = idx[tuple(slL)]
            faceR = idx[tuple(slR)]
            rowp = faceR
            rowm = faceL
            af, f_int = af_int, slice(None)

        ann = af[..., i, i]
        if fcov is not None:
            if grid.periodic:
                ann = fcov
            else:
                sli = [slice(None)] * d
                sli[i] = slice(1, -1)
                ann = fcov[tuple(sli)]
        wN = ann / (h[i] * h[i])
        # normal term: F = ann*(uR - uL)/h_i; rows rowp(+F/h), rowm(-F/h)
        add(rowp, faceR, wN)
        add(rowp, faceL, -wN)
        add(rowm, faceR, -wN)
        add(rowm, faceL, wN)

        # tangential (cross) terms
        for j in range(d):
            if j == i:
                continue
            aij = af[..., i, j]
            if not np.any(np.abs(aij) > 1e-14):
                continue
            wC = aij / (4.0 * h[j] * h[i])
            for base in (faceL, faceR):
                for step, sgn in ((1, 1.0), (-1, -1.0)):
                    tgt, ghost = shifted(base, j, step)
                    w = sgn * wC
                    # ghost value mirrored through homogeneous boundary:
                    # u_ghost = -u_adjacent
                    wfix = np.where(ghost, -w, w)
                    tfix = np.where(ghost, base, tgt)
                    add(rowp, tfix, wfix)
                    add(rowm, tfix, -wfix)

        if not grid.periodic:
            # Dirichlet boundary faces: one-sided half-cell flux
            fc = grid.face_centers(i)
            for side in (0, -1):
                slf = [slice(None)] * d
                slf[i] = side
                if fcov is not None:
                    a_b = fcov[tuple(slf)]
                else:
                    a_b = matfun(fc[tuple(slf)])[..., i, i]
                cell = idx[tuple(slf)]
                w = 2.0 * a_b / (h[i] * h[i])
                add(cell, cell, w)
                if g is not None:
                    gv = np.asarray(g(fc[tuple(slf)]), dtype=float)
                    np.add.at(rhs_bc, cell.ravel(), (w * gv).ravel())

    A = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(ncell, ncell)).tocsr()
    A.sum_duplicates()
    return A, rhs_bc


def divergence_rhs(vecfun, grid):
    """Cell values of div_h v for a vector field sampled on faces.

    vecfun maps positions (..., d) -> (..., d); component i is sampled at
    the i-faces.  Used for corrector right-hand sides div(a e_k).
    """
    d, h = grid.d, grid.h
    out = np.zeros(grid.shape)
    for i in range(d):
        pts = grid.face_centers(i)
        vi = np.asarray(vecfun(pts), dtype=float)[..., i]
        if grid.periodic:
            out += (np.roll(vi, -1, axis=i) - vi) / h[i]
        else:
            sl_lo = [slice(None)] * d
            sl_lo[i] = slice(0, -1)
            sl_hi = [slice(None)] * d
            sl_hi[i] = slice(1, None)
            out += (vi[tuple(sl_hi)] - vi[tuple(sl_lo)]) / h[i]
    return out


def face_fluxes(matfun, grid, u, p=None, harmonic=False):
    """Normal fluxes F_i = [a (p + grad u)]_i on the i-faces.

    u is the cell array (grid.shape); p an optional constant vector added to
    the gradient.  On periodic grids returns, per axis, an array indexed
    like cells (face between c-e_i and c); on box grids interior faces only
    (boundary fluxes are not defined without boundary data).
    """
    d, h = grid.d, grid.h
    u = np.asarray(u).reshape(grid.shape)
    fluxes = []
    for i in range(d):
        af = _coef_on_faces(matfun, grid, i, harmonic=harmonic)
        if grid.periodic:
            uL = np.roll(u, 1, axis=i)
            uR = u
            grad = np.zeros(grid.shape + (d,))
            grad[..., i] = (uR - uL) / h[i]
            for j in range(d):
                if j == i:
                    continue
                dj = (np.roll(u, -1, axis=j) - np.roll(u, 1, axis=j)) / (2 * h[j])
                grad[..., j] = 0.5 * (dj + np.roll(dj, 1, axis=i))
        else:
            sl = [slice(None)] * d
            sl[i] = slice(1, -1)
            af = af[tuple(sl)]
            slL = [slice(None)] * d
            slL[i] = slice(0, -1)
            slR = [slice(None)] * d
            slR[i] = slice(1, None)
            uL, uR = u[tuple(slL)], u[tuple(slR)]
            grad = np.zeros(uL.shape + (d,))
            grad[..., i] = (uR - uL) / h[i]
            for j in range(d):
                if j == i:
                    continue
                dj = np.gradient(u, h[j], axis=j)
                grad[..., j] = 0.5 * (dj[tuple(slL)] + dj[tuple(slR)])
        if p is not None:
            grad = grad + np.asarray(p, dtype=float)
        F = np.einsum("...ij,...j->...i", af, grad)[..., i]
        fluxes.append(F)
    return fluxes


def face_divergence(fluxes, grid):
    """div_h of a per-axis face-flux list (periodic grids)."""
    if not grid.periodic:
        raise ValueError("face_divergence expects a periodic grid")
    out = np.zeros(grid.shape)
    for i, F in enumerate(fluxes):
        out += (np.roll(F, -1, axis=i) - F) / grid.h[i]
    return out


def cell_gradient(u, grid):
    """Cell-centered gradient; centered interior, one-sided at box edges."""
    u = np.asarray(u).reshape(grid.shape)
    comps = []
    for i in range(grid.d):
        if grid.periodic:
            comps.append((np.roll(u, -1, axis=i) - np.roll(u, 1, axis=i))
                         / (2 * grid.h[i]))
        else:
            comps.append(np.gradient(u, grid.h[i], axis=i))
    return np.stack(comps, axis=-1)


# ---------------------------------------------------------------------------
# linear solvers

def solve_linear(A, b, tol=1e-10, zero_mean=False, iteration_cap=None,
                 symmetric=True, method="auto"):
    """Solve A x = b to relative residual <= tol.

    method: "auto" (direct below 40k unknowns, else preconditioned
    Krylov), "direct", or "iterative".  zero_mean=True handles the
    singular periodic operator (constants in the kernel): the right-hand
    side is projected onto mean zero and the solution gauge-fixed to zero
    mean.  Raises SolverError on non-convergence.
    """
    if method not in ("auto", "direct", "iterative"):
        raise ValueError(f"unknown method {method!r}")
    n = A.shape[0]
    b = np.asarray(b, dtype=float).ravel()
    if zero_mean:
        b = b - b.mean()
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n)
    cap = iteration_cap if iteration_cap is not None else max(2000, 50 * int(round(n ** (1 / 2))))

    direct_ok = method == "direct" or (method == "auto" and n <= 40000)
    if direct_ok and not zero_mean and iteration_cap is None:
        x = spla.spsolve(A.tocsc(), b)
        res = np.linalg.norm(A @ x - b)
        # backward-stability floor: eps_mach * ||A|| * ||x||
        floor = 64 * np.finfo(float).eps * spla.norm(A, np.inf) * np.linalg.norm(x)
        if res > max(100 * tol * bnorm, floor):
            raise SolverError(f"direct solve residual {res/bnorm:.2e}")
        return x

    x0 = np.zeros(n)
    if pyamg is not None and symmetric:
        B = np.ones((n, 1)) if zero_mean else None
        ml = pyamg.smoothed_aggregation_solver(A.tocsr(), B=B, max_coarse=200)
        M = ml.aspreconditioner(cycle="V")
    else:
        M = None
    x, info = spla.cg(A, b, rtol=tol, atol=0.0, maxiter=cap, M=M, x0=x0)
    res = np.linalg.norm(A @ x - b) / bnorm
    if zero_mean:
        x = x - x.mean()
    if info != 0 or res > 10 * tol:
        if not symmetric or info < 0:
            x, info = spla.bicgstab(A, b, rtol=tol, atol=0.0, maxiter=cap)
            res = np.linalg.norm(A @ x - b) / bnorm
        if info != 0 or res > 10 * tol:
            raise SolverError(
                f"linear solve did not converge (info={info}, rel res={res:.2e})")
    return x


def spectral_poisson_torus(rhs, grid):
    """Solve -Lap u = rhs on the torus with the FFT-diagonalized 3-point
    Laplacian; zero-mean gauge.  rhs may carry trailing component axes."""
    if not grid.periodic:
        raise ValueError("spectral solve needs a torus grid")
    d, shape, h = grid.d, grid.shape, grid.h
    rhs = np.asarray(rhs, dtype=float)
    sym = np.zeros(shape)
    for i in range(d):
        k = np.fft.fftfreq(shape[i])
        s = (4.0 / h[i] ** 2) * np.sin(np.pi * k) ** 2
        sh = [1] * d
        sh[i] = shape[i]
        sym = sym + s.reshape(sh)
    extra = rhs.ndim - d
    symx = sym.reshape(sym.shape + (1,) * extra)
    F = np.fft.fftn(rhs, axes=tuple(range(d)))
    with np.errstate(divide="ignore", invalid="ignore"):
        U = np.where(symx > 0, F / symx, 0.0)
    u = np.fft.ifftn(U, axes=tuple(range(d))).real
    return u
