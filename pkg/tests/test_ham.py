import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import polynomial as P

from hamschrod import (ConfigError, Derivative, DivergenceError, FieldSeries, GuessError,
                       HamConfig, HomotopySeries, Known, OrderError, OperatorExpr, TimeGrid,
                       assemble_approximation, build_grid, builtin_problem, chi, delta_term,
                       deformation_rhs, discretize, ham_solve, homotopy_derivative,
                       integrate_rk4, residual, solve_order)
from hamschrod.ham import default_linear_op, l2_norm
from hamschrod.operators import apply_values

U, UX, UXX = Derivative(0), Derivative(1), Derivative(2)
GRID = build_grid(0, 2 * np.pi, 16)
TIME = TimeGrid(1.0, 4)


def constant_series(values):
    """Homotopy series whose orders are the given constants, flat in space and time."""
    shape = (TIME.n_steps + 1, GRID.n)
    s = HomotopySeries(FieldSeries(np.full(shape, values[0]), GRID, TIME, np.zeros(shape)))
    for v in values[1:]:
        s.append(np.full(shape, v), np.zeros(shape))
    return s


def trig_series(coeffs):
    """Series of trigonometric fields with analytic x-derivatives.

    ``coeffs[m]`` holds ``(a_k, b_k)`` for ``k = 1..K``; order ``m`` is
    ``sum_k a_k cos(kx) + b_k sin(kx)`` at every time node.
    """
    x = GRID.x
    k = np.arange(1, coeffs.shape[1] + 1)[:, None]
    vals = np.einsum("mk,kx->mx", coeffs[..., 0], np.cos(k * x)) + \
        np.einsum("mk,kx->mx", coeffs[..., 1], np.sin(k * x))
    ders = np.einsum("mk,kx->mx", -coeffs[..., 0] * k.T, np.sin(k * x)) + \
        np.einsum("mk,kx->mx", coeffs[..., 1] * k.T, np.cos(k * x))
    shape = (TIME.n_steps + 1, GRID.n)
    s = HomotopySeries(FieldSeries(np.broadcast_to(vals[0], shape), GRID, TIME, np.zeros(shape)))
    for v in vals[1:]:
        s.append(np.broadcast_to(v, shape), np.zeros(shape))
    return s, vals, ders


def expansion_coefficient(factor_series, k):
    """Coefficient of q^k in the product of per-node polynomials in q."""
    prod = np.ones((1, factor_series[0].shape[1]))
    for f in factor_series:
        prod = np.array([P.polymul(prod[:, j], f[:, j]) for j in range(f.shape[1])]).T
    return prod[k] if k < len(prod) else np.zeros(prod.shape[1])


def test_chi_table():
    assert chi(0) == 0 and chi(1) == 0
    assert all(chi(m) == 1 for m in range(2, 50))


def test_homotopy_derivative_examples():
    s = constant_series([1.0, 2.0])
    square = OperatorExpr.of((1.0, [U, U]))
    assert np.all(homotopy_derivative(square, s, 0, 0).values == 1.0)
    assert np.all(homotopy_derivative(square, s, 1, 0).values == 4.0)
    s.append(np.zeros((5, 16)), np.zeros((5, 16)))
    assert np.all(homotopy_derivative(square, s, 2, 0).values == 4.0)
    with pytest.raises(OrderError):
        homotopy_derivative(square, s, 3)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), M=st.integers(1, 4))
def test_square_derivatives_match_polynomial_expansion(seed, M):
    r = np.random.default_rng(seed)
    vals = r.standard_normal((M + 1, GRID.n))
    s = HomotopySeries(FieldSeries(np.broadcast_to(vals[0], (5, 16)), GRID, TIME, np.zeros((5, 16))))
    for v in vals[1:]:
        s.append(np.broadcast_to(v, (5, 16)), np.zeros((5, 16)))
    for _ in range(M):
        s.append(np.zeros((5, 16)), np.zeros((5, 16)))
    square = OperatorExpr.of((1.0, [U, U]))
    for k in range(2 * M + 1):
        got = homotopy_derivative(square, s, k, 2).values
        assert np.abs(got - expansion_coefficient([vals, vals], k)).max() <= 1e-12


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_leibniz_rule_for_u_times_ux(seed):
    r = np.random.default_rng(seed)
    coeffs = r.standard_normal((4, 3, 2))
    s, vals, ders = trig_series(coeffs)
    expr = OperatorExpr.of((1.0, [U, UX]))
    for k in range(4):
        got = homotopy_derivative(expr, s, k, 1).values
        assert np.abs(got - expansion_coefficient([vals, ders], k)).max() <= 1e-12


def test_known_function_only_enters_order_zero():
    s = constant_series([1.0, 2.0, 3.0])
    profile = np.linspace(0, 1, 16)
    expr = OperatorExpr.of((1.0, [Known(profile), U]))
    assert np.allclose(homotopy_derivative(expr, s, 0, 0).values, profile)
    assert np.allclose(homotopy_derivative(expr, s, 2, 0).values, 3 * profile)
    bare = OperatorExpr.of((2.0, [Known(profile)]))
    assert np.all(homotopy_derivative(bare, s, 1, 0).values == 0)


def test_delta_zero_of_burgers_frozen_sine():
    p = builtin_problem("burgers", n=64, n_steps=10)
    s = HomotopySeries(FieldSeries.constant_in_time(p.initial, p.grid, p.time))
    x = p.grid.x
    d0 = delta_term(0, s, p).values
    assert np.abs(d0 - (0.1 * np.sin(x) + np.sin(x) * np.cos(x))).max() <= 1e-10
    f1 = deformation_rhs(1, s, p, -1.0).values
    assert np.abs(f1 + 0.1 * np.sin(x) + np.sin(x) * np.cos(x)).max() <= 1e-10
    with pytest.raises(ConfigError):
        deformation_rhs(1, s, p, 0.0)


def test_delta_zero_vanishes_on_exact_linear_solution():
    p = builtin_problem("heat")
    t, x = p.time.t[:, None], p.grid.x
    exact = np.exp(-0.1 * t) * np.sin(x)
    s = HomotopySeries(FieldSeries(exact, p.grid, p.time, -0.1 * exact))
    assert np.abs(delta_term(0, s, p).values).max() < 1e-13


def test_zero_delta_gives_zero_rhs():
    p = builtin_problem("heat")
    t, x = p.time.t[:, None], p.grid.x
    exact = np.exp(-0.1 * t) * np.sin(x)
    s = HomotopySeries(FieldSeries(exact, p.grid, p.time, -0.1 * exact))
    assert np.abs(deformation_rhs(1, s, p, -0.7).values).max() < 1e-13


def _linear_first_order(problem):
    cfg = HamConfig(M=1)
    s = HomotopySeries(FieldSeries.constant_in_time(problem.initial, problem.grid, problem.time))
    psi1, rec = solve_order(1, s, problem, cfg)
    s.append(psi1.values, psi1.time_derivative)
    return s, rec


def test_first_order_is_exact_for_linear_problems():
    p = builtin_problem("heat")
    s, rec = _linear_first_order(p)
    assert rec.residual_norm_after <= 1e-8
    assert np.abs(s.psi[1][0]).max() == 0.0  # delta_1 starts from zero data
    sys = discretize(p.nonlinearity, np.zeros((p.time.n_steps + 1, p.grid.n)), p.initial,
                     p.grid, time=p.time)
    direct = integrate_rk4(sys).values
    assert np.abs(assemble_approximation(s, 1).values - direct).max() <= 1e-10


def test_first_order_delta_is_minus_delta_zero_for_linear_problems():
    # with L = N and c0 = -1 the first correction leaves Delta_1 = -Delta_0 = L alpha + g,
    # which is exactly what makes psi_2 vanish
    p = builtin_problem("heat")
    s, _ = _linear_first_order(p)
    d0, d1 = delta_term(0, s, p).values, delta_term(1, s, p).values
    assert np.abs(d1 + d0).max() <= 1e-8 * np.abs(d0).max()


@pytest.mark.xfail(strict=True, reason="the first correction leaves Delta_1 = -Delta_0, which is not zero")
def test_first_order_delta_vanishes_for_linear_problems():
    p = builtin_problem("heat")
    s, _ = _linear_first_order(p)
    assert np.abs(delta_term(1, s, p).values).max() <= 1e-8


def test_linear_exactness_higher_orders_vanish():
    p = builtin_problem("heat")
    sol, hist = ham_solve(p, HamConfig(M=4))
    assert hist[1].residual_norm_after <= 1e-8
    s, _ = _linear_first_order(p)
    cfg = HamConfig(M=4)
    for m in range(2, 5):
        psi, _ = solve_order(m, s, p, cfg)
        assert l2_norm(psi.values, p.grid, p.time) <= 1e-8
        s.append(psi.values, psi.time_derivative)


def test_zero_correction_repeats_previous_order():
    p = builtin_problem("heat")
    s, _ = _linear_first_order(p)

    def zero_backend(sys):
        z = np.zeros((sys.time.n_steps + 1, sys.n))
        return FieldSeries(z, sys.grid, sys.time, z)

    psi2, _ = solve_order(2, s, p, HamConfig(M=2), backend=zero_backend)
    assert np.array_equal(psi2.values, s.psi[1])


def test_nonzero_start_for_higher_order_is_rejected():
    p = builtin_problem("heat")
    s, _ = _linear_first_order(p)
    s.psi[1] = s.psi[1] + 1.0
    with pytest.raises(GuessError):
        solve_order(2, s, p, HamConfig(M=2))
    with pytest.raises(OrderError):
        solve_order(3, s, p, HamConfig(M=3))


def test_time_derivatives_follow_the_propagated_identity():
    p = builtin_problem("burgers", n=32, n_steps=200)
    cfg = HamConfig(M=3)
    L = default_linear_op(p)
    s = HomotopySeries(FieldSeries.constant_in_time(p.initial, p.grid, p.time))
    for m in range(1, 4):
        psi, rec = solve_order(m, s, p, cfg, linear_op=L)
        delta = rec.delta_m
        Ld = apply_values(L, delta.values, p.grid, p.time.t)
        assert np.abs(delta.time_derivative - (Ld + rec.f_m.values)).max() < 1e-10
        expected = delta.time_derivative + chi(m) * s.dpsi_dt[m - 1]
        assert np.abs(psi.time_derivative - expected).max() < 1e-12
        assert np.allclose(rec.f_m.values, -delta_term(m - 1, s, p).values, atol=0)
        s.append(psi.values, psi.time_derivative)


def test_assembly_and_telescoping():
    s = constant_series([1.0, 2.0, 3.0])
    assert np.all(assemble_approximation(s, 0).values == 1.0)
    assert np.all(assemble_approximation(s, 2).values == 6.0)
    for M in (1, 2):
        diff = assemble_approximation(s, M).values - assemble_approximation(s, M - 1).values
        assert np.array_equal(diff, s.psi[M])
    with pytest.raises(OrderError):
        assemble_approximation(s, 3)


def test_residual_has_no_hidden_state():
    p = builtin_problem("burgers", n=32, n_steps=50)
    sol, _ = ham_solve(p, HamConfig(M=2))
    n1, f1 = residual(sol, p)
    zero = FieldSeries.zeros(p.grid, p.time)
    n2, f2 = residual(sol + zero, p)
    assert n1 == n2 and np.array_equal(f1.values, f2.values)


def test_iterations_reduce_the_residual():
    p = builtin_problem("burgers", n=32, n_steps=200)
    _, h0 = ham_solve(p, HamConfig(M=3))
    _, h2 = ham_solve(p, HamConfig(M=3, iterations=2))
    assert h2[-1].residual_norm_after < h0[-1].residual_norm_after
    assert [r.iteration for r in h2].count(2) == 4


def test_large_c0_trips_the_divergence_guard():
    p = builtin_problem("burgers", n=32, n_steps=200)
    with pytest.raises(DivergenceError):
        ham_solve(p, HamConfig(c0=-50.0, M=6))


def test_config_validation():
    with pytest.raises(ConfigError):
        HamConfig(c0=0.0).validate()
    with pytest.raises(ConfigError):
        HamConfig(M=0).validate()
    with pytest.raises(ConfigError):
        HamConfig(linear_op=OperatorExpr.of((1.0, [U, U]))).validate()
    assert HamConfig().guess_policy == "constant_in_time_from_ic"
    assert HamConfig().c0 == -1.0 and HamConfig().M == 10


def test_expm_integrator_agrees_with_rk4():
    p = builtin_problem("reaction_diffusion", n=32, n_steps=200)
    a, _ = ham_solve(p, HamConfig(M=3))
    b, _ = ham_solve(p, HamConfig(M=3, integrator="expm"))
    # expm freezes the forcing at step midpoints, a second-order rule
    assert np.abs(a.values - b.values).max() < 1e-7
