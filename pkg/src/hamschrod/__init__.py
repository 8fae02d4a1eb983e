"""Homotopy analysis of nonlinear evolution PDEs with classical and Schrodingerised linear solves."""

from .builtins import builtin_problem
from .classical import (LinearSystem, StabilityWarning, discretize, integrate_expm,
                        integrate_rk4, solve_nonlinear_reference)
from .convergence import C0Curve, convergence_report, residual_curve, select_c0
from .errors import *  # noqa: F401,F403
from .grids import (FieldSeries, FieldSnapshot, SpatialGrid, TimeGrid, build_grid,
                    read_csv, write_csv)
from .ham import (DeformationSolveRecord, HamConfig, HomotopySeries, assemble_approximation,
                  chi, delta_term, deformation_rhs, ham_solve, homotopy_derivative, residual,
                  solve_order)
from .operators import (ClosedForm, Derivative, Known, OperatorExpr, Term, differentiate,
                        eval_operator)
from .problem import BoundarySpec, EvolutionProblem, validate_problem
from .schrodinger import (HermitianSplit, SchrodConfig, WarpedState, hermitian_split,
                          homogenize, recover, schrodingerise_solve, warp_initialize,
                          warped_evolve)

__version__ = "0.1.0"
