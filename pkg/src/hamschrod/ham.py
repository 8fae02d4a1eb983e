"""Homotopy decomposition of ``u_t = N[u] + g`` into linear deformation problems.

The embedding parameter ``q`` never exists at runtime. Only the Taylor
coefficients ``psi_m`` of the deformation family are stored, together with
their time derivatives, which are propagated through the linear solves
instead of being recovered by differencing.

With the auxiliary operator ``L* = d/dt - L`` the order-``m`` problem reads

    d(delta_m)/dt = L delta_m + f_m,    f_m = c0 * Delta_{m-1},
    psi_m = delta_m + chi_m * psi_{m-1},

where ``Delta_0 = d(psi_0)/dt - N[psi_0] - g`` and, for ``k >= 1``,
``Delta_k = d(psi_k)/dt - D_k N`` with ``D_k`` the k-th homotopy derivative.
"""

from dataclasses import dataclass

import numpy as np

from .classical import discretize, integrate_expm, integrate_rk4
from .errors import ConfigError, DivergenceError, GuessError, OrderError
from .grids import FieldSeries, FieldSnapshot
from .operators import Derivative, OperatorExpr, apply_values, differentiate_values
from .problem import validate_problem

BACKENDS = ("classical", "schrodingerise")
INTEGRATORS = ("rk4", "expm")


def chi(m):
    if m < 0:
        raise OrderError(f"order must be non-negative, got {m}")
    return 0 if m <= 1 else 1


@dataclass(frozen=True, eq=False)
class HamConfig:
    """Knobs of one homotopy solve.

    ``linear_op`` None means the linearization of ``N`` about the initial
    data. ``guess`` None means the constant-in-time guess ``psi_0 = alpha``.
    """

    c0: float = -1.0
    M: int = 10
    iterations: int = 0
    linear_op: OperatorExpr = None
    guess: FieldSeries = None
    backend: str = "classical"
    integrator: str = "rk4"
    schrod: object = None
    divergence_factor: float = 10.0
    divergence_window: int = 3

    @property
    def guess_policy(self):
        return "constant_in_time_from_ic" if self.guess is None else "user_supplied"

    def validate(self):
        if not np.isfinite(self.c0) or self.c0 == 0:
            raise ConfigError("c0 must be a finite non-zero constant")
        if int(self.M) != self.M or self.M < 1:
            raise ConfigError(f"M must be a positive integer, got {self.M}")
        if int(self.iterations) != self.iterations or self.iterations < 0:
            raise ConfigError(f"iterations must be a non-negative integer, got {self.iterations}")
        if self.backend not in BACKENDS and not callable(self.backend):
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.integrator not in INTEGRATORS:
            raise ConfigError(f"unknown integrator {self.integrator!r}")
        if self.linear_op is not None and not self.linear_op.is_linear:
            raise ConfigError("linear_op fails the linearity check")
        if self.divergence_window < 1 or self.divergence_factor <= 1:
            raise ConfigError("divergence guard needs window >= 1 and factor > 1")
        return self


@dataclass(frozen=True, eq=False)
class DeformationSolveRecord:
    m: int
    f_m: FieldSeries
    delta_m: FieldSeries
    residual_norm_after: float
    iteration: int = 0

    @property
    def f_m_norm(self):
        if self.f_m is None:
            return 0.0
        return l2_norm(self.f_m.values, self.f_m.grid, self.f_m.time)

    def to_json(self):
        return {"m": self.m, "iteration": self.iteration,
                "residual_norm_after": float(self.residual_norm_after),
                "f_m_norm": float(self.f_m_norm)}


class HomotopySeries:
    """Append-only store of ``psi_0 .. psi_m`` and their time derivatives."""

    def __init__(self, psi0, scheme="spectral"):
        dpsi0 = psi0.time_derivative
        if dpsi0 is None:
            dpsi0 = np.gradient(psi0.values, psi0.time.dt, axis=0, edge_order=2)
        self.grid = psi0.grid
        self.time = psi0.time
        self.scheme = scheme
        self.psi = [psi0.values]
        self.dpsi_dt = [np.asarray(dpsi0)]
        self._spatial = {}
        self._sums = [psi0.values]
        self._dsums = [np.asarray(dpsi0)]

    def __len__(self):
        return len(self.psi)

    def append(self, psi, dpsi_dt):
        self.psi.append(np.asarray(psi))
        self.dpsi_dt.append(np.asarray(dpsi_dt))
        self._sums.append(self._sums[-1] + self.psi[-1])
        self._dsums.append(self._dsums[-1] + self.dpsi_dt[-1])

    def field(self, m):
        return FieldSeries(self.psi[m], self.grid, self.time, self.dpsi_dt[m])

    def spatial(self, m, order):
        """Cached ``order``-th spatial derivative of ``psi_m``."""
        key = (m, order)
        if key not in self._spatial:
            self._spatial[key] = differentiate_values(self.psi[m], order, self.grid, self.scheme)
        return self._spatial[key]

    def partial_sum(self, M):
        if not 0 <= M < len(self):
            raise OrderError(f"need orders 0..{M}, have 0..{len(self) - 1}")
        return FieldSeries(self._sums[M], self.grid, self.time, self._dsums[M])


def _dk_values(expr, series, k):
    """``(1/k!) d^k N[Psi]/dq^k`` at ``q = 0`` on every space-time node."""
    if k >= len(series):
        raise OrderError(f"homotopy derivative of order {k} needs psi_0..psi_{k}")
    t = series.time.t
    total = 0.0
    for term in expr.terms:
        acc = None
        for f in term.factors:
            if isinstance(f, Derivative):
                seq = [series.spatial(j, f.order) for j in range(k + 1)]
            else:
                seq = [f.sample(series.grid, t)] + [None] * k
            acc = seq if acc is None else _cauchy(acc, seq, k)
        if acc is None:
            # a bare constant term: its q-expansion has no higher coefficients
            acc = [np.ones(series.psi[0].shape)] + [None] * k
        if acc[k] is not None:
            total = total + term.coefficient * acc[k]
    return np.broadcast_to(total, series.psi[0].shape)


def _cauchy(left, right, k):
    out = []
    for j in range(k + 1):
        s = None
        for i in range(j + 1):
            a, b = left[i], right[j - i]
            if a is None or b is None:
                continue
            s = a * b if s is None else s + a * b
        out.append(s)
    return out


def homotopy_derivative(expr, series, k, t_index=None):
    """k-th homotopy derivative of ``expr``; a snapshot if ``t_index`` is given."""
    values = _dk_values(expr, series, k)
    if t_index is None:
        return FieldSeries(values, series.grid, series.time)
    return FieldSnapshot(values[t_index], series.time.t[t_index])


def delta_term(k, series, problem):
    if k >= len(series):
        raise OrderError(f"Delta_{k} needs psi_0..psi_{k}")
    if k == 0:
        psi0 = series.psi[0]
        n_psi = apply_values(problem.nonlinearity, psi0, series.grid, series.time.t,
                             problem.scheme)
        values = series.dpsi_dt[0] - n_psi - problem.forcing_values()
    else:
        # g enters only through Delta_0
        values = series.dpsi_dt[k] - _dk_values(problem.nonlinearity, series, k)
    return FieldSeries(values, series.grid, series.time)


def deformation_rhs(m, series, problem, c0):
    if c0 == 0:
        raise ConfigError("c0 must be non-zero")
    if m < 1:
        raise OrderError(f"deformation orders start at 1, got {m}")
    return delta_term(m - 1, series, problem).scaled(c0)


def default_linear_op(problem):
    """Linearization of ``N`` about the initial data; ``N`` itself when ``N`` is linear."""
    expr = problem.nonlinearity
    if expr.is_linear and expr.time_independent:
        return expr
    return expr.frechet(problem.initial, problem.grid, problem.scheme)


def _initial_target(m, series, problem):
    if m == 1:
        return problem.initial.values - series.psi[0][0]
    return np.zeros(series.grid.n)


def _boundary_target(m, series, problem):
    n_t = series.time.n_steps + 1
    if m == 1:
        beta = problem.boundary.trace(series.time.t)
        return np.broadcast_to(beta, (n_t,))[:, None] - series.psi[0][:, [0, -1]]
    return np.zeros((n_t, 2))


def solve_order(m, series, problem, config, backend=None, linear_op=None):
    """Solve the order-``m`` deformation problem; returns ``(psi_m, record)``.

    ``series`` must hold ``psi_0 .. psi_{m-1}``; it is not modified.
    """
    if len(series) != m:
        raise OrderError(f"order {m} needs exactly psi_0..psi_{m - 1}, have {len(series)}")
    linear_op = linear_op if linear_op is not None else (
        config.linear_op if config.linear_op is not None else default_linear_op(problem))
    f_m = deformation_rhs(m, series, problem, config.c0)
    c = chi(m)
    delta0 = _initial_target(m, series, problem) - c * series.psi[m - 1][0]
    if m >= 2 and config.guess_policy == "constant_in_time_from_ic":
        scale = max(1.0, np.abs(series.psi[0][0]).max())
        if np.abs(delta0).max() > 1e-10 * scale:
            raise GuessError(f"order {m} starts from non-zero data {np.abs(delta0).max():.3g}")
    trace = None
    if not problem.periodic:
        trace = _boundary_target(m, series, problem) - c * series.psi[m - 1][:, [0, -1]]
    sys = discretize(linear_op, f_m, delta0, problem.grid, problem.scheme,
                     boundary_trace=trace)
    delta = _run_backend(sys, config, backend)
    values, rate = delta.values, delta.time_derivative
    if not np.iscomplexobj(series.psi[0]) and np.iscomplexobj(values):
        values, rate = values.real, rate.real
    psi_m = values + c * series.psi[m - 1]
    dpsi_m = rate + c * series.dpsi_dt[m - 1]
    psi = FieldSeries(psi_m, series.grid, series.time, dpsi_m)
    running = series.partial_sum(m - 1) + psi
    norm, _ = residual(running, problem)
    record = DeformationSolveRecord(m, f_m, FieldSeries(values, series.grid, series.time, rate),
                                    norm)
    return psi, record


def _run_backend(sys, config, backend=None):
    backend = backend if backend is not None else config.backend
    if callable(backend):
        return backend(sys)
    if backend == "schrodingerise":
        from .schrodinger import SchrodConfig, schrodingerise_solve

        return schrodingerise_solve(sys, config.schrod or SchrodConfig())
    if config.integrator == "expm":
        return integrate_expm(sys)
    return integrate_rk4(sys)


def assemble_approximation(series, M):
    """``psi_0 + sum_{m=1..M} psi_m`` with its propagated time derivative."""
    return series.partial_sum(M)


def l2_norm(values, grid, time):
    h = grid.h if grid is not None else 1.0
    return float(np.sqrt(np.sum(np.abs(values) ** 2) * h * time.dt))


def residual(candidate, problem):
    """Defect ``u_t - N[u] - g`` of ``candidate`` and its discrete space-time L2 norm.

    The stored time derivative is used when the candidate carries one;
    otherwise it is differenced to second order. Dirichlet end nodes are
    excluded since the PDE does not hold there.
    """
    values = candidate.values
    rate = candidate.time_derivative
    if rate is None:
        rate = np.gradient(values, candidate.time.dt, axis=0, edge_order=2)
    defect = rate - apply_values(problem.nonlinearity, values, problem.grid,
                                 candidate.time.t, problem.scheme) - problem.forcing_values()
    if not problem.periodic:
        defect = np.array(defect)
        defect[:, [0, -1]] = 0.0
    field = FieldSeries(defect, candidate.grid, candidate.time)
    return l2_norm(defect, problem.grid, problem.time), field


def _guard(norms, config, m):
    if not np.isfinite(norms[-1]):
        raise DivergenceError(f"residual became non-finite at order {m}")
    w = config.divergence_window
    if len(norms) > w and norms[-1] > config.divergence_factor * norms[-1 - w]:
        raise DivergenceError(
            f"residual grew x{norms[-1] / norms[-1 - w]:.3g} over {w} orders (order {m})")


def ham_solve(problem, config=None):
    """Mth-order homotopy approximation, optionally re-entered as the new guess.

    Returns ``(solution, history)``; ``history`` holds one record per order
    per pass, including an ``m = 0`` entry for each pass's guess.
    """
    config = (config or HamConfig()).validate()
    report = validate_problem(problem)
    if report:
        raise ConfigError("; ".join(report))
    linear_op = config.linear_op if config.linear_op is not None else default_linear_op(problem)
    guess = config.guess
    if guess is None:
        guess = FieldSeries.constant_in_time(problem.initial, problem.grid, problem.time)
    history = []
    for it in range(config.iterations + 1):
        series = HomotopySeries(guess, problem.scheme)
        norm0, _ = residual(series.partial_sum(0), problem)
        history.append(DeformationSolveRecord(0, None, None, norm0, it))
        norms = [norm0]
        for m in range(1, config.M + 1):
            psi, record = solve_order(m, series, problem, config, linear_op=linear_op)
            series.append(psi.values, psi.time_derivative)
            history.append(DeformationSolveRecord(m, record.f_m, record.delta_m,
                                                  record.residual_norm_after, it))
            norms.append(record.residual_norm_after)
            _guard(norms, config, m)
        guess = series.partial_sum(config.M)
    return guess, history
