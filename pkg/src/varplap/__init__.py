"""Variable-exponent p(x)-Laplacian Dirichlet problems by energy minimisation.

Core objects live in :mod:`varplap.fields`; the energy and solver in
:mod:`varplap.energy` and :mod:`varplap.solver`; the Clarkson-type
inequalities in :mod:`varplap.inequalities`.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND  # noqa: E402
from .discretization import DirichletProblem, corner_gradients, gradient, lift_boundary  # noqa: E402
from .energy import energy, energy_first_variation  # noqa: E402
from .fields import CellVectorField, ExponentField, Grid, GridFunction  # noqa: E402
from .modular import luxemburg_norm, modular_grad, modular_raw, modular_weighted  # noqa: E402
from .solver import SolveReport, SolverConfig, minimize  # noqa: E402

__all__ = [
    "BACKEND", "CellVectorField", "DirichletProblem", "ExponentField", "Grid", "GridFunction",
    "SolveReport", "SolverConfig", "corner_gradients", "energy", "energy_first_variation",
    "gradient", "lift_boundary", "luxemburg_norm", "minimize", "modular_grad", "modular_raw",
    "modular_weighted",
]
