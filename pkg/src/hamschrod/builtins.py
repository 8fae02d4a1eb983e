"""Frozen reference problems on the periodic domain [0, 2*pi]."""

import numpy as np

from .grids import FieldSnapshot, TimeGrid, build_grid
from .operators import Derivative, OperatorExpr
from .problem import BoundarySpec, EvolutionProblem

U, UX, UXX = Derivative(0), Derivative(1), Derivative(2)

DEFAULTS = {
    "burgers": {"n": 128, "t_final": 1.0, "n_steps": 1000},
    "reaction_diffusion": {"n": 64, "t_final": 0.5, "n_steps": 1000},
    "heat": {"n": 16, "t_final": 0.5, "n_steps": 100},
    "advection": {"n": 32, "t_final": 1.0, "n_steps": 1000},
}

OPERATORS = {
    # u_t = 0.1 u_xx - u u_x
    "burgers": OperatorExpr.of((0.1, [UXX]), (-1.0, [U, UX])),
    # u_t = u_xx + u^2
    "reaction_diffusion": OperatorExpr.of((1.0, [UXX]), (1.0, [U, U])),
    "heat": OperatorExpr.of((0.1, [UXX])),
    "advection": OperatorExpr.of((-1.0, [UX])),
}

AMPLITUDE = {"burgers": 1.0, "reaction_diffusion": 0.1, "heat": 1.0, "advection": 1.0}


def builtin_problem(name, n=None, t_final=None, n_steps=None):
    """One of ``burgers``, ``reaction_diffusion``, ``heat``, ``advection``."""
    if name not in DEFAULTS:
        raise KeyError(f"unknown builtin problem {name!r}; choose from {sorted(DEFAULTS)}")
    d = DEFAULTS[name]
    grid = build_grid(0.0, 2 * np.pi, n or d["n"], periodic=True)
    time = TimeGrid(float(t_final or d["t_final"]), int(n_steps or d["n_steps"]))
    initial = FieldSnapshot(AMPLITUDE[name] * np.sin(grid.x), 0.0)
    return EvolutionProblem(grid, time, OPERATORS[name], initial, None,
                            BoundarySpec("periodic"), "spectral", name)
