"""Nonlinear evolution problems ``u_t = N[u] + g`` on a 1D grid."""

from dataclasses import dataclass, field

import numpy as np

from .grids import FieldSeries, FieldSnapshot, SpatialGrid, TimeGrid
from .operators import MAX_ORDER, SCHEMES, ClosedForm, Known, OperatorExpr, Term


@dataclass(frozen=True)
class BoundarySpec:
    """``periodic``, or ``dirichlet`` with a trace ``value(t)`` shared by both endpoints."""

    kind: str = "periodic"
    value: ClosedForm = None

    def trace(self, t):
        if self.value is None:
            return np.zeros_like(np.asarray(t, dtype=float))
        # uniform on the boundary set: evaluate at x = 0
        return np.asarray(self.value(0.0, t), dtype=float)

    def trace_rate(self, t):
        """Exact time derivative of :meth:`trace`."""
        if self.value is None:
            return np.zeros_like(np.asarray(t, dtype=float))
        return -self.value.decay * self.trace(t)


@dataclass(frozen=True, eq=False)
class EvolutionProblem:
    grid: SpatialGrid
    time: TimeGrid
    nonlinearity: OperatorExpr
    initial: FieldSnapshot
    forcing: object = None
    boundary: BoundarySpec = field(default_factory=BoundarySpec)
    scheme: str = "spectral"
    name: str = ""

    @property
    def periodic(self):
        return self.boundary.kind == "periodic"

    @property
    def boundary_nodes(self):
        return [] if self.periodic else [0, self.grid.n - 1]

    def forcing_values(self):
        """``g`` sampled on every space-time node, shape ``(n_steps + 1, n)``."""
        shape = (self.time.n_steps + 1, self.grid.n)
        if self.forcing is None:
            return np.zeros(shape)
        return np.broadcast_to(Known(self.forcing).sample(self.grid, self.time.t), shape)

    def forcing_at(self, t):
        if self.forcing is None:
            return np.zeros(self.grid.n)
        return Known(self.forcing).sample(self.grid, t)

    def refined(self, factor):
        """Same problem on grids ``factor`` times finer in space and time."""
        grid = self.grid.refined(factor)
        time = self.time.refined(factor)
        initial = FieldSnapshot(resample(self.initial.values, self.grid, grid), self.initial.t)
        forcing = self.forcing
        if isinstance(forcing, FieldSeries):
            fine_t = time.t
            coarse = np.stack([resample(v, self.grid, grid) for v in forcing.values])
            forcing = FieldSeries(
                np.stack([np.interp(fine_t, forcing.t, c) for c in coarse.T], axis=1), grid, time)
        elif forcing is not None and not isinstance(forcing, ClosedForm):
            forcing = resample(np.asarray(forcing), self.grid, grid)
        expr = OperatorExpr(tuple(_refine_term(t, self.grid, grid)
                                  for t in self.nonlinearity.terms))
        return EvolutionProblem(grid, time, expr, initial, forcing, self.boundary,
                                self.scheme, self.name)


def _refine_term(term, coarse, fine):
    factors = []
    for f in term.factors:
        if isinstance(f, Known) and not isinstance(f.source, (ClosedForm, FieldSeries)):
            f = Known(resample(np.asarray(f.source), coarse, fine))
        elif isinstance(f, Known) and isinstance(f.source, FieldSeries):
            raise ValueError("cannot refine a time-sampled known function inside an operator")
        factors.append(f)
    return Term(term.coefficient, tuple(factors))


def resample(values, grid, new_grid):
    """Interpolate a spatial profile onto ``new_grid`` (Fourier when periodic)."""
    values = np.asarray(values)
    if new_grid.n == grid.n:
        return values
    if grid.periodic:
        spec = np.fft.fft(values)
        n, m = grid.n, new_grid.n
        padded = np.zeros(m, dtype=complex)
        half = n // 2
        padded[:half] = spec[:half]
        padded[-(n - half):] = spec[half:]
        if n % 2 == 0:
            padded[half] *= 0.5
            padded[m - half] = padded[half]
        out = np.fft.ifft(padded) * (m / n)
        return out if np.iscomplexobj(values) else out.real
    from scipy.interpolate import CubicSpline

    return CubicSpline(grid.x, values)(new_grid.x)


def validate_problem(p):
    """List every violated invariant of ``p``; an empty list means runnable."""
    report = []
    n, nt = p.grid.n, p.time.n_steps
    if p.scheme not in SCHEMES:
        report.append(f"unknown scheme {p.scheme!r}")
    if p.boundary.kind not in ("periodic", "dirichlet"):
        report.append(f"unknown boundary kind {p.boundary.kind!r}")
    if p.periodic != p.grid.periodic:
        report.append("boundary kind and grid periodicity disagree")
    if p.boundary.kind == "dirichlet" and p.scheme == "spectral":
        report.append("dirichlet boundaries need the central_fd scheme")
    if len(p.initial.values) != n:
        report.append(f"initial condition has {len(p.initial.values)} nodes, grid has {n}")
    elif not np.all(np.isfinite(p.initial.values)):
        report.append("initial condition is not finite")
    if p.nonlinearity.max_order > MAX_ORDER:
        report.append(f"derivative order above cap {MAX_ORDER}")
    g = p.forcing
    if isinstance(g, FieldSeries):
        if g.values.shape != (nt + 1, n):
            report.append(f"forcing shape {g.values.shape} does not match grids {(nt + 1, n)}")
    elif g is not None and not isinstance(g, ClosedForm):
        if np.shape(g) != (n,):
            report.append(f"forcing shape {np.shape(g)} does not match grid ({n},)")
    for term in p.nonlinearity.terms:
        for f in term.factors:
            if isinstance(f, Known) and not isinstance(f.source, ClosedForm):
                shape = np.shape(getattr(f.source, "values", f.source))
                if shape[-1:] != (n,):
                    report.append(f"known function in N has shape {shape}, grid needs n={n}")
    if p.boundary.kind == "dirichlet" and len(p.initial.values) == n:
        beta0 = float(p.boundary.trace(0.0))
        ends = np.asarray(p.initial.values)[[0, -1]]
        if not np.allclose(ends, beta0, atol=1e-10):
            report.append(f"boundary value beta(0)={beta0} differs from initial data {ends.tolist()}")
    return report
