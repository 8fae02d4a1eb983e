"""Empirical control of the convergence parameter ``c0``."""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import AllDivergedError, ConfigError, DivergenceError, EmptyCurveError, NaNError
from .ham import HamConfig, ham_solve

SWEEP_INTERVAL = (-2.0, -0.05)
SWEEP_POINTS = 40


def default_sweep(lo=SWEEP_INTERVAL[0], hi=SWEEP_INTERVAL[1], points=SWEEP_POINTS):
    return np.linspace(lo, hi, points)


@dataclass(frozen=True)
class C0Curve:
    """Residual norm at fixed order ``M`` for each sampled ``c0``.

    Runs that diverged carry ``inf``.
    """

    samples: tuple
    M: int
    problem: str = ""

    def __post_init__(self):
        c = [s[0] for s in self.samples]
        if any(v == 0 for v in c):
            raise ConfigError("c0 = 0 is not admissible")
        if any(b <= a for a, b in zip(c, c[1:])):
            raise ConfigError("c0 samples must be strictly increasing")

    @property
    def c0(self):
        return np.array([s[0] for s in self.samples])

    @property
    def residuals(self):
        return np.array([s[1] for s in self.samples])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("c0,residual_norm\n")
            for c, r in self.samples:
                fh.write(f"{float(c)!r},{float(r)!r}\n")


def _threads():
    n = int(os.environ.get("HAMSCHROD_THREADS", "1") or 1)
    return os.cpu_count() or 1 if n == 0 else max(1, n)


def residual_curve(problem, base_config, c0_values):
    """Run :func:`ham_solve` at every ``c0`` and record the final residual.

    Duplicates are dropped keeping first occurrences; the curve itself is
    ordered by ``c0``. Divergent runs are recorded as ``inf``.
    """
    values = list(dict.fromkeys(float(c) for c in c0_values))
    if any(c == 0 for c in values):
        raise ConfigError("c0 = 0 in sweep list")
    base_config = base_config or HamConfig()

    def one(c0):
        try:
            _, history = ham_solve(problem, replace(base_config, c0=c0))
        except (DivergenceError, NaNError):
            return np.inf
        return history[-1].residual_norm_after

    workers = _threads()
    if workers > 1 and len(values) > 1:
        with ThreadPoolExecutor(workers) as pool:
            norms = list(pool.map(one, values))
    else:
        norms = [one(c) for c in values]
    samples = tuple(sorted(zip(values, norms)))
    return C0Curve(samples, base_config.M, problem.name)


def select_c0(curve):
    """``c0`` with the least residual; ties go to the value nearest ``-1``, then to smaller ``|c0|``."""
    if not curve.samples:
        raise EmptyCurveError("curve has no samples")
    finite = [(c, r) for c, r in curve.samples if np.isfinite(r)]
    if not finite:
        raise AllDivergedError("every run in the sweep diverged")
    best = min(r for _, r in finite)
    ties = [c for c, r in finite if r == best]
    return min(ties, key=lambda c: (abs(c + 1.0), abs(c)))


def _verdict(ratios, window=3):
    tail = ratios[-window:]
    if len(tail) == window and all(r < 0.9 for r in tail):
        return "converging"
    if len(tail) == window and all(r > 1.1 for r in tail):
        return "diverging"
    return "stalled"


def convergence_report(history):
    """Per-order residuals, successive ratios and a verdict.

    ``history`` is a list of records (or plain residual norms). When it spans
    several outer iterations only the last pass is reported.
    """
    if not history:
        raise ValueError("empty history")
    if hasattr(history[0], "residual_norm_after"):
        last = max(getattr(r, "iteration", 0) for r in history)
        history = [r for r in history if getattr(r, "iteration", 0) == last]
        norms = [float(r.residual_norm_after) for r in history]
        orders = [r.m for r in history]
    else:
        norms = [float(r) for r in history]
        orders = list(range(len(norms)))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = [float(b / a) if a else float("inf") for a, b in zip(norms, norms[1:])]
    return {"orders": orders, "residuals": norms, "ratios": ratios, "verdict": _verdict(ratios)}
