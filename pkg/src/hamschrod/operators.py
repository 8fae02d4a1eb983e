"""Polynomial-differential operators: AST, discrete derivatives, evaluation.

An operator is a sum of terms; each term is a real coefficient times a
pointwise product of factors. A factor is either a spatial derivative of the
state (``Derivative(0)`` is the state itself) or a known function of
``(x, t)``. Terms holding two or more state factors are nonlinear.

>>> burgers = OperatorExpr.of((0.1, [Derivative(2)]), (-1.0, [Derivative(0), Derivative(1)]))
>>> burgers.is_linear
False
"""

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np

from .errors import LinearityError, SchemeError
from .grids import FieldSeries, FieldSnapshot

MAX_ORDER = 4
SCHEMES = ("spectral", "central_fd")


@dataclass(frozen=True)
class Derivative:
    order: int = 0

    def __post_init__(self):
        if not 0 <= self.order <= MAX_ORDER:
            raise SchemeError(f"derivative order {self.order} outside [0, {MAX_ORDER}]")


@dataclass(frozen=True)
class ClosedForm:
    """``amplitude * shape(k x + phase) * exp(-decay t)`` with shape in const/sin/cos."""

    kind: str = "const"
    amplitude: float = 1.0
    k: float = 1.0
    phase: float = 0.0
    decay: float = 0.0

    def __post_init__(self):
        if self.kind not in ("const", "sin", "cos"):
            raise ValueError(f"unknown closed-form kind {self.kind!r}")

    def __call__(self, x, t=0.0):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        if self.kind == "const":
            shape = np.ones_like(x)
        elif self.kind == "sin":
            shape = np.sin(self.k * x + self.phase)
        else:
            shape = np.cos(self.k * x + self.phase)
        if t.ndim:
            return self.amplitude * shape * np.exp(-self.decay * t)[..., None]
        return self.amplitude * shape * np.exp(-self.decay * float(t))

    @property
    def time_independent(self):
        return self.decay == 0.0

    def to_json(self):
        return {"kind": self.kind, "amplitude": self.amplitude, "k": self.k,
                "phase": self.phase, "decay": self.decay}


@dataclass(frozen=True, eq=False)
class Known:
    """A known-function factor: a :class:`ClosedForm`, a fixed spatial profile
    (1D array), or a :class:`FieldSeries` sampled in time."""

    source: object

    @property
    def time_independent(self):
        if isinstance(self.source, ClosedForm):
            return self.source.time_independent
        return not isinstance(self.source, FieldSeries)

    def sample(self, grid, t):
        """Values on ``grid`` at time(s) ``t``; shape ``(n,)`` or ``(len(t), n)``."""
        src = self.source
        if isinstance(src, ClosedForm):
            return src(grid.x, t)
        if isinstance(src, FieldSeries):
            if src.grid.n != grid.n:
                raise SchemeError("sampled known function lives on a different grid")
            return _sample_series(src, t)
        values = np.asarray(src)
        if values.shape != (grid.n,):
            raise SchemeError(f"known profile has shape {values.shape}, grid needs ({grid.n},)")
        t = np.asarray(t)
        return np.broadcast_to(values, t.shape + values.shape) if t.ndim else values


def _sample_series(series, t):
    ts = series.t
    t = np.asarray(t, dtype=float)
    if t.ndim and t.shape == ts.shape and np.allclose(t, ts, rtol=0, atol=1e-12 * ts[-1]):
        return series.values
    tt = np.atleast_1d(t)
    idx = np.clip(np.searchsorted(ts, tt) - 1, 0, len(ts) - 2)
    w = ((tt - ts[idx]) / (ts[idx + 1] - ts[idx]))[:, None]
    out = (1 - w) * series.values[idx] + w * series.values[idx + 1]
    return out if t.ndim else out[0]


@dataclass(frozen=True, eq=False)
class Term:
    coefficient: float
    factors: tuple

    @property
    def state_factors(self):
        return [f for f in self.factors if isinstance(f, Derivative)]

    @property
    def degree(self):
        return len(self.state_factors)


@dataclass(frozen=True, eq=False)
class OperatorExpr:
    terms: tuple = ()

    @classmethod
    def of(cls, *pairs):
        """Build from ``(coefficient, [factors...])`` pairs."""
        return cls(tuple(Term(float(c), tuple(fs)) for c, fs in pairs))

    @property
    def is_linear(self):
        # state-free terms would make the map affine, so they disqualify too
        return all(t.degree == 1 for t in self.terms)

    @property
    def max_order(self):
        return max((f.order for t in self.terms for f in t.state_factors), default=0)

    @property
    def time_independent(self):
        return all(f.time_independent for t in self.terms for f in t.factors
                   if isinstance(f, Known))

    def __add__(self, other):
        return OperatorExpr(self.terms + other.terms)

    def __neg__(self):
        return self.scaled(-1.0)

    def __sub__(self, other):
        return self + (-other)

    def scaled(self, c):
        return OperatorExpr(tuple(Term(c * t.coefficient, t.factors) for t in self.terms))

    def linear_part(self):
        """Terms of degree exactly one (no constant terms, no products of state)."""
        return OperatorExpr(tuple(t for t in self.terms if t.degree == 1))

    def frechet(self, base, grid, scheme="spectral"):
        """Linearization of this operator about the state ``base``.

        ``base`` is a :class:`FieldSnapshot` or 1D array. Every state factor
        not being differentiated is frozen at ``base`` and becomes a known
        profile, so the result is linear by construction.
        """
        base = np.asarray(getattr(base, "values", base))
        cache = {}

        def frozen(order):
            if order not in cache:
                cache[order] = differentiate_values(base, order, grid, scheme)
            return cache[order]

        out = []
        for term in self.terms:
            for i, f in enumerate(term.factors):
                if not isinstance(f, Derivative):
                    continue
                others = [Known(frozen(g.order)) if isinstance(g, Derivative) else g
                          for j, g in enumerate(term.factors) if j != i]
                out.append(Term(term.coefficient, tuple(others) + (f,)))
        return OperatorExpr(tuple(out))


@lru_cache(maxsize=64)
def _fd_matrix(n, h, order, periodic):
    half = (order + 1) // 2
    central = np.arange(-half, half + 1)
    if periodic:
        w = _fd_weights(central, order)
        D = np.zeros((n, n))
        for s, wj in zip(central, w):
            D[np.arange(n), (np.arange(n) + s) % n] += wj
        return D / h**order
    width = order + 2
    D = np.zeros((n, n))
    for i in range(n):
        if i - half >= 0 and i + half < n:
            offs = central
        else:
            start = min(max(i - width // 2, 0), n - width)
            offs = np.arange(start, start + width) - i
        D[i, i + offs] = _fd_weights(offs, order)
    return D / h**order


def _fd_weights(offsets, order):
    offsets = np.asarray(offsets, dtype=float)
    k = np.arange(len(offsets))
    V = offsets[None, :] ** k[:, None] / np.array([factorial(j) for j in k])[:, None]
    rhs = (k == order).astype(float)
    return np.linalg.solve(V, rhs)


def _spectral_symbol(grid, order):
    k = np.fft.fftfreq(grid.n, d=grid.h) * 2 * np.pi
    sym = (1j * k) ** order
    if order % 2 == 1 and grid.n % 2 == 0:
        sym[grid.n // 2] = 0.0
    return sym


def differentiate_values(values, order, grid, scheme="spectral"):
    """Order-``order`` spatial derivative along the last axis of ``values``."""
    if scheme not in SCHEMES:
        raise SchemeError(f"unknown scheme {scheme!r}")
    if not 0 <= order <= MAX_ORDER:
        raise SchemeError(f"derivative order {order} outside [0, {MAX_ORDER}]")
    values = np.asarray(values)
    if order == 0:
        return values
    if scheme == "spectral":
        if not grid.periodic:
            raise SchemeError("spectral differentiation needs a periodic grid")
        out = np.fft.ifft(_spectral_symbol(grid, order) * np.fft.fft(values, axis=-1), axis=-1)
        return out if np.iscomplexobj(values) else out.real
    D = _fd_matrix(grid.n, grid.h, order, grid.periodic)
    return values @ D.T


def differentiate(field, order, grid, scheme="spectral"):
    return FieldSnapshot(differentiate_values(field.values, order, grid, scheme), field.t)


def apply_values(expr, values, grid, t=0.0, scheme="spectral"):
    """Evaluate ``expr`` on state samples ``values`` (last axis is space).

    ``t`` is a scalar or an array matching the leading axis of ``values``.
    """
    values = np.asarray(values)
    derivs = {}
    out = np.zeros(values.shape, dtype=np.result_type(values, float))
    for term in expr.terms:
        prod = term.coefficient
        for f in term.factors:
            if isinstance(f, Derivative):
                if f.order not in derivs:
                    derivs[f.order] = differentiate_values(values, f.order, grid, scheme)
                prod = prod * derivs[f.order]
            else:
                prod = prod * f.sample(grid, t)
        out = out + prod
    return out


def eval_operator(expr, field, grid, scheme="spectral"):
    return FieldSnapshot(apply_values(expr, field.values, grid, field.t, scheme), field.t)


def apply_series(expr, series, scheme="spectral"):
    """Nodewise evaluation over every snapshot of a :class:`FieldSeries`."""
    return apply_values(expr, series.values, series.grid, series.t, scheme)


def require_linear(expr):
    if not expr.is_linear:
        raise LinearityError("every term of a linear operator needs exactly one state factor")
