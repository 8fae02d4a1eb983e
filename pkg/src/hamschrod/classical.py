"""Classical route: space discretization to ``du/dt = A u + b`` and reference integrators."""

import json
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import ConfigError, DomainError, NaNError
from .grids import FieldSeries, TimeGrid
from .operators import apply_values, require_linear


class StabilityWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """``du/dt = A u + b(t)``, ``u(0) = a``, with ``b`` sampled on ``time``.

    ``A`` may be non-Hermitian. ``grid`` is carried along only so solutions
    can be labelled with node coordinates.
    """

    A: np.ndarray
    b: np.ndarray
    a: np.ndarray
    time: TimeGrid
    grid: object = None

    def __post_init__(self):
        A = np.array(self.A)
        a = np.array(self.a)
        n = len(a)
        b = np.array(self.b)
        if b.ndim == 1:
            b = np.broadcast_to(b, (self.time.n_steps + 1, n)).copy()
        if A.shape != (n, n):
            raise DomainError(f"A has shape {A.shape}, expected ({n}, {n})")
        if b.shape != (self.time.n_steps + 1, n):
            raise DomainError(f"b has shape {b.shape}, expected {(self.time.n_steps + 1, n)}")
        for name, arr in (("A", A), ("b", b), ("a", a)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self):
        return len(self.a)

    @property
    def is_real(self):
        return not (np.iscomplexobj(self.A) or np.iscomplexobj(self.b) or np.iscomplexobj(self.a))

    def b_mid(self, step):
        return 0.5 * (self.b[step] + self.b[step + 1])

    def to_json(self):
        doc = {"t_final": self.time.t_final, "n_steps": self.time.n_steps}
        for name in ("A", "b", "a"):
            arr = getattr(self, name)
            doc[name] = np.real(arr).tolist()
            if np.iscomplexobj(arr):
                doc[name + "_imag"] = np.imag(arr).tolist()
        return doc

    @classmethod
    def from_json(cls, doc):
        if isinstance(doc, str):
            doc = json.loads(doc)
        arrays = {}
        for name in ("A", "b", "a"):
            arr = np.array(doc[name], dtype=float)
            if name + "_imag" in doc:
                arr = arr + 1j * np.array(doc[name + "_imag"], dtype=float)
            arrays[name] = arr
        return cls(time=TimeGrid(float(doc["t_final"]), int(doc["n_steps"])), **arrays)


def operator_matrix(linear_op, grid, scheme="spectral"):
    """Matrix of a time-independent linear operator, built column by column."""
    require_linear(linear_op)
    if not linear_op.time_independent:
        raise ConfigError("linear operator must have time-independent coefficients")
    # row j of the result is L applied to the unit field e_j
    return apply_values(linear_op, np.eye(grid.n), grid, 0.0, scheme).T


def discretize(linear_op, forcing, initial, grid, scheme="spectral", time=None,
               boundary_trace=None):
    """Method-of-lines system for ``u_t = L u + f``.

    ``forcing`` is a :class:`FieldSeries` or an array of shape
    ``(n_steps + 1, n)``. With ``boundary_trace`` (Dirichlet data at each
    time node, shape ``(n_steps + 1,)`` or ``(n_steps + 1, 2)`` for distinct
    ends) the two end rows of ``A`` are zeroed and the end entries of ``b``
    carry the trace's rate of change.
    """
    if isinstance(forcing, FieldSeries):
        time = forcing.time
        forcing = forcing.values
    if time is None:
        raise ConfigError("a time grid is needed when forcing is a bare array")
    A = operator_matrix(linear_op, grid, scheme)
    b = np.array(forcing, dtype=np.result_type(forcing, float))
    a = np.array(getattr(initial, "values", initial))
    if boundary_trace is not None:
        trace = np.asarray(boundary_trace, dtype=float)
        if trace.ndim == 1:
            trace = np.stack([trace, trace], axis=1)
        rate = np.gradient(trace, time.dt, axis=0, edge_order=2)
        A = A.copy()
        A[[0, -1], :] = 0.0
        b[:, [0, -1]] = rate
    return LinearSystem(A, b, a, time, grid)


def _check_finite(u, step):
    if not np.all(np.isfinite(u)):
        raise NaNError(f"state became non-finite at step {step}")


def integrate_rk4(sys, stability_limit=2.5):
    """Classic RK4; the forcing is interpolated linearly to the half step."""
    dt = sys.time.dt
    lam = np.abs(np.linalg.eigvals(sys.A)).max() if sys.n else 0.0
    if lam * dt > stability_limit:
        warnings.warn(f"|lambda_max| dt = {lam * dt:.3g} exceeds {stability_limit}",
                      StabilityWarning, stacklevel=2)
    A = sys.A
    u = np.array(sys.a, dtype=np.result_type(A, sys.b, sys.a, float))
    out = np.empty((sys.time.n_steps + 1, sys.n), dtype=u.dtype)
    out[0] = u
    for s in range(sys.time.n_steps):
        b0, b1 = sys.b[s], sys.b[s + 1]
        bm = 0.5 * (b0 + b1)
        k1 = A @ u + b0
        k2 = A @ (u + 0.5 * dt * k1) + bm
        k3 = A @ (u + 0.5 * dt * k2) + bm
        k4 = A @ (u + dt * k3) + b1
        u = u + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        _check_finite(u, s + 1)
        out[s + 1] = u
    return FieldSeries(out, sys.grid, sys.time, out @ A.T + sys.b)


def step_propagators(A, dt):
    """``(e^{A dt}, int_0^dt e^{A s} ds)`` from one exponential of ``[[A, I], [0, 0]]``."""
    n = len(A)
    block = np.zeros((2 * n, 2 * n), dtype=np.result_type(A, float))
    block[:n, :n] = A
    block[:n, n:] = np.eye(n)
    E = expm(block * dt)
    return E[:n, :n], E[:n, n:]


def integrate_expm(sys):
    """Exact exponential stepping with the forcing frozen at each step midpoint.

    Equivalent to exponentiating ``[[A, b_mid], [0, 0]]`` per step; the
    identity-bordered block gives both propagators once for all steps.
    """
    E, P = step_propagators(sys.A, sys.time.dt)
    u = np.array(sys.a, dtype=np.result_type(E, sys.b, sys.a))
    out = np.empty((sys.time.n_steps + 1, sys.n), dtype=u.dtype)
    out[0] = u
    for s in range(sys.time.n_steps):
        u = E @ u + P @ sys.b_mid(s)
        _check_finite(u, s + 1)
        out[s + 1] = u
    return FieldSeries(out, sys.grid, sys.time, out @ sys.A.T + sys.b)


def solve_nonlinear_reference(problem, refine=1):
    """Method-of-lines RK4 on the full nonlinear problem, ``refine`` times finer.

    The result is restricted back to the problem's own grids.
    """
    if int(refine) != refine or refine < 1:
        raise ConfigError(f"refine must be a positive integer, got {refine}")
    fine = problem.refined(int(refine)) if refine > 1 else problem
    grid, dt = fine.grid, fine.time.dt
    ends = fine.boundary_nodes
    bc = fine.boundary

    def rhs(u, t):
        r = apply_values(fine.nonlinearity, u, grid, t, fine.scheme) + fine.forcing_at(t)
        if ends:
            r[ends] = bc.trace_rate(t)
        return r

    u = np.array(fine.initial.values, dtype=float)
    keep = np.empty((problem.time.n_steps + 1, problem.grid.n), dtype=u.dtype)
    keep_rate = np.empty_like(keep)
    stride = slice(None, None, int(refine))
    t = 0.0
    for s in range(fine.time.n_steps):
        k1 = rhs(u, t)
        if s % refine == 0:
            keep[s // refine] = u[stride]
            keep_rate[s // refine] = k1[stride]
        k2 = rhs(u + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = rhs(u + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = rhs(u + dt * k3, t + dt)
        u = u + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = (s + 1) * dt
        _check_finite(u, s + 1)
    keep[-1] = u[stride]
    keep_rate[-1] = rhs(u, t)[stride]
    return FieldSeries(keep, problem.grid, problem.time, keep_rate)
