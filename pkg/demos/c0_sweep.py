"""
Choosing the convergence-control parameter
==========================================

Sweep c0 over negative values and pick the one with the smallest residual.
"""

import numpy as np

from hamschrod import HamConfig, builtin_problem, residual_curve, select_c0

problem = builtin_problem("burgers", n=64, n_steps=500)
grid = np.linspace(-1.8, -0.2, 9)

# each point is a full M=5 solve, so keep the grid small
curve = residual_curve(problem, HamConfig(M=5), grid)
for c0, res in curve.samples:
    print(f"c0={c0:6.2f}  residual {res:.3e}")

print("selected c0:", select_c0(curve))

# for a linear problem the minimum sits at exactly c0 = -1
heat = residual_curve(builtin_problem("heat"), HamConfig(M=1), grid)
print("heat selects", select_c0(heat))
