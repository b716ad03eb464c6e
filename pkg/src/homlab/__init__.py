"""homlab: numerical laboratory for elliptic homogenization with defects.

Solves periodic cell problems and localized-defect corrector problems,
assembles two-scale remainders with flux potentials, and fits convergence
rates against the predicted exponents.
"""

__version__ = "0.1.0"

from .fields import CoefficientField, construct_field, eval_matrix
from .grid import Grid, GridField, box_grid, torus_grid
from .fd import SolverError
