"""Uniform space/time grids and the sampled field containers built on them."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError


def _frozen(a, dtype=None):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform 1D grid on ``[x_min, x_max]``.

    A periodic grid omits the right endpoint, which aliases node 0.
    """

    x_min: float
    x_max: float
    n: int
    periodic: bool = True

    def __post_init__(self):
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)):
            raise DomainError("grid bounds must be finite")
        if not self.x_max > self.x_min:
            raise DomainError(f"x_max ({self.x_max}) must exceed x_min ({self.x_min})")
        if int(self.n) != self.n or self.n < 4:
            raise DomainError(f"need an integer node count n >= 4, got {self.n}")

    @property
    def length(self):
        return self.x_max - self.x_min

    @property
    def h(self):
        if self.periodic:
            return self.length / self.n
        return self.length / (self.n - 1)

    @property
    def x(self):
        return self.x_min + self.h * np.arange(self.n)

    def refined(self, factor):
        """Grid with ``factor`` times finer spacing sharing every node of this one."""
        if self.periodic:
            return SpatialGrid(self.x_min, self.x_max, self.n * factor, True)
        return SpatialGrid(self.x_min, self.x_max, (self.n - 1) * factor + 1, False)


def build_grid(x_min, x_max, n, periodic=True):
    return SpatialGrid(float(x_min), float(x_max), int(n), bool(periodic))


@dataclass(frozen=True)
class TimeGrid:
    t_final: float
    n_steps: int

    def __post_init__(self):
        if not (np.isfinite(self.t_final) and self.t_final > 0):
            raise DomainError(f"t_final must be positive, got {self.t_final}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise DomainError(f"n_steps must be a positive integer, got {self.n_steps}")

    @property
    def dt(self):
        return self.t_final / self.n_steps

    @property
    def t(self):
        return self.dt * np.arange(self.n_steps + 1)

    def refined(self, factor):
        return TimeGrid(self.t_final, self.n_steps * factor)


@dataclass(frozen=True, eq=False)
class FieldSnapshot:
    values: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True, eq=False)
class FieldSeries:
    """A field sampled on every node of a space-time grid.

    ``values[i]`` is the snapshot at ``time.t[i]``. ``time_derivative``, when
    present, holds the time derivative at the same nodes; producers that know
    it analytically attach it so downstream residuals never difference data.
    ``grid`` may be None for plain ODE states that have no spatial meaning.
    """

    values: np.ndarray
    grid: SpatialGrid
    time: TimeGrid
    time_derivative: np.ndarray = field(default=None)

    def __post_init__(self):
        values = _frozen(self.values)
        n = values.shape[-1] if self.grid is None else self.grid.n
        expected = (self.time.n_steps + 1, n)
        if values.shape != expected:
            raise DomainError(f"series shape {values.shape} does not match grids {expected}")
        object.__setattr__(self, "values", values)
        if self.time_derivative is not None:
            d = _frozen(self.time_derivative)
            if d.shape != expected:
                raise DomainError(f"time derivative shape {d.shape} != {expected}")
            object.__setattr__(self, "time_derivative", d)

    @property
    def t(self):
        return self.time.t

    @property
    def snapshots(self):
        return [FieldSnapshot(v, t) for v, t in zip(self.values, self.t)]

    def snapshot(self, index):
        return FieldSnapshot(self.values[index], self.t[index])

    def __add__(self, other):
        return FieldSeries(self.values + other.values, self.grid, self.time,
                           _sum_derivatives(self, other))

    def scaled(self, c):
        d = None if self.time_derivative is None else c * self.time_derivative
        return FieldSeries(c * self.values, self.grid, self.time, d)

    @property
    def n(self):
        return self.values.shape[1]

    @classmethod
    def zeros(cls, grid, time, dtype=float):
        z = np.zeros((time.n_steps + 1, grid.n), dtype=dtype)
        return cls(z, grid, time, z)

    @classmethod
    def constant_in_time(cls, snapshot, grid, time):
        values = np.broadcast_to(snapshot.values, (time.n_steps + 1, grid.n))
        return cls(values, grid, time, np.zeros_like(values))


def _sum_derivatives(a, b):
    if a.time_derivative is None or b.time_derivative is None:
        return None
    return a.time_derivative + b.time_derivative


def write_csv(series, path):
    """Write ``t,x,value_re,value_im`` rows, time-major, with round-trip floats."""
    x = np.arange(series.values.shape[1]) if series.grid is None else series.grid.x
    values = np.asarray(series.values)
    with open(path, "w", newline="") as fh:
        fh.write("t,x,value_re,value_im\n")
        for t, row in zip(series.t, values):
            ts = repr(float(t))
            for xi, v in zip(x, row):
                v = complex(v)
                fh.write(f"{ts},{float(xi)!r},{v.real!r},{v.imag!r}\n")


def read_csv(path):
    """Inverse of :func:`write_csv`; returns ``(t, x, values)`` arrays."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    t = np.unique(data[:, 0])
    x = data[: len(data) // len(t), 1]
    values = (data[:, 2] + 1j * data[:, 3]).reshape(len(t), len(x))
    if not np.any(values.imag):
        values = values.real
    return t, x, values
