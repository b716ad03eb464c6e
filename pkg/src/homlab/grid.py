"""Uniform tensor grids and sampled fields.

Everything downstream (cell problems, Dirichlet solves, two-scale assembly)
works on cell-centered uniform grids.  A Grid is either a torus (periodic
wrap in every direction, extent = one period cell) or a plain box.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator


@dataclass(frozen=True)
class Grid:
    """Cell-centered uniform grid over the box [lo, hi]^d."""
    lo: tuple
    hi: tuple
    shape: tuple          # number of cells per axis
    periodic: bool = False

    def __post_init__(self):
        if not (len(self.lo) == len(self.hi) == len(self.shape)):
            raise ValueError("inconsistent dimensions")
        if any(n < 4 for n in self.shape):
            raise ValueError("need at least 4 cells per axis")
        if any(b <= a for a, b in zip(self.lo, self.hi)):
            raise ValueError("empty extent")

    @property
    def d(self):
        return len(self.shape)

    @property
    def h(self):
        """Spacing per axis."""
        return tuple((b - a) / n for a, b, n in zip(self.lo, self.hi, self.shape))

    @property
    def ncells(self):
        return int(np.prod(self.shape))

    @property
    def cell_volume(self):
        return float(np.prod(self.h))

    def axis_centers(self, i):
        a, h = self.lo[i], self.h[i]
        return a + (np.arange(self.shape[i]) + 0.5) * h

    def axis_faces(self, i):
        """Face coordinates along axis i (n+1 of them)."""
        a, h = self.lo[i], self.h[i]
        return a + np.arange(self.shape[i] + 1) * h

    def cell_centers(self):
        """Array of shape (*shape, d) with physical cell-center positions."""
        axes = [self.axis_centers(i) for i in range(self.d)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    def face_centers(self, i):
        """Centers of the i-faces, shape (*shape_with_n_i_plus_1, d).

        For periodic grids only the n_i left faces are returned (the wrap
        face is identified with face 0), giving an array of shape
        (*shape, d) where entry [c] is the face between cells c-e_i and c.
        """
        axes = []
        for j in range(self.d):
            if j == i:
                f = self.axis_faces(j)
                axes.append(f[:-1] if self.periodic else f)
            else:
                axes.append(self.axis_centers(j))
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    def nearest_cell(self, x):
        """Multi-index of the cell whose center is closest to x."""
        idx = []
        for i in range(self.d):
            k = int(round((x[i] - self.lo[i]) / self.h[i] - 0.5))
            idx.append(min(max(k, 0), self.shape[i] - 1))
        return tuple(idx)


@dataclass
class GridField:
    """Values sampled at cell centers; trailing axes are component axes.

    values.shape == grid.shape + comp_shape, e.g. () for a scalar field,
    (d,) for a vector field, (d, d) for a matrix field.
    """
    grid: Grid
    values: np.ndarray
    interp_rule: str = "multilinear"
    _interp: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        gshape = tuple(self.grid.shape)
        if tuple(self.values.shape[:self.grid.d]) != gshape:
            raise ValueError("values do not match grid shape")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite entries in field values")

    @property
    def comp_shape(self):
        return tuple(self.values.shape[self.grid.d:])

    def _build_interp(self, fill_value):
        g = self.grid
        axes = [g.axis_centers(i) for i in range(g.d)]
        vals = self.values
        if g.periodic:
            # pad one layer on each side with wrapped values so interpolation
            # near the cell boundary sees the periodic neighbors
            pad = [(1, 1)] * g.d + [(0, 0)] * len(self.comp_shape)
            vals = np.pad(vals, pad, mode="wrap")
            axes = [np.concatenate(([ax[0] - g.h[i]], ax, [ax[-1] + g.h[i]]))
                    for i, ax in enumerate(axes)]
        return RegularGridInterpolator(
            axes, vals, method="linear", bounds_error=False,
            fill_value=fill_value)

    def interp(self, x, fill_value=0.0):
        """Multilinear interpolation at points x of shape (..., d).

        Periodic grids wrap coordinates into the period cell; box grids
        return fill_value outside the extent.
        """
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.grid.d:
            raise ValueError("point dimension mismatch")
        if self._interp is None:
            object.__setattr__(self, "_interp", self._build_interp(fill_value))
        g = self.grid
        if g.periodic:
            lo = np.asarray(g.lo)
            span = np.asarray(g.hi) - lo
            x = lo + np.mod(x - lo, span)
        flat = x.reshape(-1, g.d)
        out = self._interp(flat)
        return out.reshape(x.shape[:-1] + self.comp_shape)

    def __call__(self, x):
        return self.interp(x)


def sample_on_grid(func, grid):
    """Sample a vectorized callable at cell centers, returning a GridField."""
    vals = func(grid.cell_centers())
    return GridField(grid, np.asarray(vals, dtype=float))


def torus_grid(n, d):
    """Unit torus [0,1)^d with n cells per axis."""
    return Grid(lo=(0.0,) * d, hi=(1.0,) * d, shape=(n,) * d, periodic=True)


def box_grid(half_side, n, d, center=None):
    """Box of half-side L centered at `center` (default origin), n cells/axis."""
    if center is None:
        center = (0.0,) * d
    lo = tuple(c - half_side for c in center)
    hi = tuple(c + half_side for c in center)
    return Grid(lo=lo, hi=hi, shape=(n,) * d, periodic=False)
