"""Dirichlet problems for the oscillatory and homogenized operators,
and discrete Green-function sampling."""

from dataclasses import dataclass, field as dfield

import numpy as np

from .grid import GridField, box_grid
from . import fd
from .fields import eval_matrix


@dataclass
class DirichletProblem:
    """Box Dirichlet problem on Omega = center + (-L, L)^d.

    coefficient: ("oscillatory", CoefficientField, eps) or
                 ("constant", d x d matrix).
    f: source callable on positions; g: boundary data callable or None
    (homogeneous).  omega1_half_side bounds the interior subdomain used by
    the rate norms (default half of the domain).
    """
    d: int
    half_side: float
    resolution: int
    coefficient: tuple
    f: object = None
    g: object = None
    omega1_half_side: float = None
    center: tuple = None

    def __post_init__(self):
        if self.omega1_half_side is None:
            self.omega1_half_side = self.half_side / 2.0
        # interior margin of at least an eighth of the side
        if self.omega1_half_side > self.half_side * 0.75 + 1e-12:
            raise ValueError("Omega_1 margin below side/8")
        kind = self.coefficient[0]
        if kind == "oscillatory":
            _, cfield, eps = self.coefficient
            if not (0.0 < eps < 1.0):
                raise ValueError("eps must lie in (0, 1)")
            if cfield.diagnostic_only:
                raise ValueError("diagnostic-only field rejected by solver")
            h = 2.0 * self.half_side / self.resolution
            # the 8-cells-per-period guard applies to the oscillatory
            # periodic background; a constant background (defect-only
            # oscillation) does not carry an eps-periodic scale.
            if cfield.aper_const is None and h > eps / 8.0 + 1e-12:
                raise ValueError(
                    f"under-resolved eps: h={h:.3g} > eps/8={eps/8:.3g}")
        elif kind != "constant":
            raise ValueError(f"unknown coefficient kind {kind!r}")

    def grid(self):
        return box_grid(self.half_side, self.resolution, self.d,
                        center=self.center)

    def matfun(self):
        kind = self.coefficient[0]
        if kind == "oscillatory":
            _, cfield, eps = self.coefficient
            return lambda pts: eval_matrix(cfield, np.asarray(pts) / eps)
        mat = np.asarray(self.coefficient[1], dtype=float)
        if mat.ndim == 0:
            mat = float(mat) * np.eye(self.d)

        def const(pts):
            pts = np.asarray(pts, dtype=float)
            return np.broadcast_to(mat, pts.shape[:-1] + (self.d, self.d)).copy()
        return const


def solve_dirichlet(problem, tol=1e-10, iteration_cap=None, face_coeff=None):
    """Solve the problem; returns dict with u, grad (GridFields) and grid.

    face_coeff optionally overrides the diagonal face coefficients (see
    fd.assemble_diffusion); used in 1D for exact harmonic-integral faces.
    """
    g = problem.grid()
    matfun = problem.matfun()
    A, rhs_bc = fd.assemble_diffusion(matfun, g, g=problem.g,
                                      face_coeff=face_coeff)
    if problem.f is None:
        b = rhs_bc
    else:
        b = np.asarray(problem.f(g.cell_centers()), dtype=float).ravel() + rhs_bc
    method = "direct" if problem.d == 1 else "auto"
    x = fd.solve_linear(A, b, tol=tol, iteration_cap=iteration_cap,
                        method=method)
    u = x.reshape(g.shape)
    return {"u": GridField(g, u),
            "grad": GridField(g, fd.cell_gradient(u, g)),
            "grid": g}


def discrete_green(problem_template, y, tol=1e-10):
    """Green sample: delta source of mass 1 (value h^-d) at the cell
    nearest y.  problem_template is a DirichletProblem whose f is ignored."""
    g = problem_template.grid()
    iy = g.nearest_cell(np.asarray(y, dtype=float))
    src = np.zeros(g.shape)
    src[iy] = 1.0 / g.cell_volume

    matfun = problem_template.matfun()
    A, _ = fd.assemble_diffusion(matfun, g)
    x = fd.solve_linear(A, src.ravel(), tol=tol)
    u = x.reshape(g.shape)
    return {"G": GridField(g, u),
            "grad": GridField(g, fd.cell_gradient(u, g)),
            "grid": g, "source_index": iy,
            "source_point": tuple(g.cell_centers()[iy])}
