"""
Series solution of viscous Burgers
==================================

Build the deformation series order by order and compare it with a fine
method-of-lines reference.
"""

import numpy as np

from hamschrod import HamConfig, builtin_problem, convergence_report, ham_solve
from hamschrod import solve_nonlinear_reference

# the builtin problem is u_t = 0.1 u_xx - u u_x on a periodic interval
problem = builtin_problem("burgers", n=64, n_steps=500)
reference = solve_nonlinear_reference(problem, refine=4)

# raising the truncation order M adds terms to the series
for M in (2, 4, 6, 8):
    solution, history = ham_solve(problem, HamConfig(c0=-1.0, M=M))
    err = np.abs(solution.values - reference.values).max()
    print(f"M={M:2d}  residual {history[-1].residual_norm_after:.2e}  max error {err:.2e}")

# the ratio of consecutive residuals tells us how the series is behaving
report = convergence_report(history)
print("verdict:", report["verdict"])
print("ratios:", np.round(report["ratios"], 3))

# restarting from the previous sum (outer iterations) is far more effective
solution, history = ham_solve(problem, HamConfig(c0=-1.0, M=5, iterations=2))
err = np.abs(solution.values - reference.values).max()
print(f"M=5 with 2 restarts  residual {history[-1].residual_norm_after:.2e}  max error {err:.2e}")
