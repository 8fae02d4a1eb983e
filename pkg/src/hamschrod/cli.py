"""Batch front end: ``hamschrod <command> --config <path> [--out <dir>]``.

Commands
--------
run               homotopy solve of a problem, writes solution.csv and history.json
sweep-c0          residual-vs-c0 curve (curve.csv), then a run at the selected c0
compare-backends  the same homotopy solve on both backends, writes diff.json
schrodingerise    solve one LinearSystem document through the warped Schrodinger form

Diagnostics go to standard error as one JSON object per line.
"""

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import builtins
from .classical import LinearSystem
from .convergence import convergence_report, default_sweep, residual_curve, select_c0
from .errors import HamSchrodError, ParseError, ValidationError, exit_code_for
from .grids import FieldSnapshot, TimeGrid, build_grid, write_csv
from .ham import BACKENDS, INTEGRATORS, HamConfig, ham_solve
from .operators import SCHEMES, ClosedForm, Derivative, Known, OperatorExpr, Term
from .problem import BoundarySpec, EvolutionProblem, validate_problem
from .schrodinger import SchrodConfig, schrodingerise_solve

COMMANDS = ("run", "sweep-c0", "compare-backends", "schrodingerise")

_TOP_KEYS = {"command", "problem", "ham", "schrod", "sweep", "system", "outputs"}
_HAM_KEYS = {"c0", "M", "iterations", "backend", "integrator", "linear_op",
             "divergence_factor", "divergence_window"}
_SCHROD_KEYS = {"N_p", "L_p", "p_star", "mu_margin"}
_SWEEP_KEYS = {"c0", "lo", "hi", "points"}
_BUILTIN_KEYS = {"builtin", "n", "t_final", "n_steps"}
_INLINE_KEYS = {"grid", "time", "nonlinearity", "initial", "forcing", "boundary", "scheme", "name"}
_GRID_KEYS = {"x_min", "x_max", "n", "periodic"}
_TIME_KEYS = {"t_final", "n_steps"}
_CLOSED_KEYS = {"kind", "amplitude", "k", "phase", "decay"}
_TERM_KEYS = {"coefficient", "factors"}
_BOUNDARY_KEYS = {"kind", "value"}


@dataclass
class RunConfig:
    command: str
    problem: EvolutionProblem = None
    ham: HamConfig = field(default_factory=HamConfig)
    schrod: SchrodConfig = None
    sweep: tuple = None
    system: LinearSystem = None
    outputs: str = "."


class _Reader:
    """Walks a JSON document, rejecting unknown keys and collecting violations."""

    def __init__(self):
        self.violations = []

    def keys(self, doc, ptr, allowed):
        if not isinstance(doc, dict):
            self.fail(ptr, f"expected an object, got {type(doc).__name__}")
            return {}
        for key in doc:
            if key not in allowed:
                raise ParseError(f"unknown key {key!r} (allowed: {sorted(allowed)})",
                                 f"{ptr}/{key}")
        return doc

    def fail(self, ptr, msg):
        self.violations.append((ptr, msg))

    def number(self, doc, key, ptr, default=None, check=None, msg=None, integer=False):
        if key not in doc:
            return default
        v = doc[key]
        here = f"{ptr}/{key}"
        kind = "an integer" if integer else "a number"
        if isinstance(v, bool) or not isinstance(v, (int, float)) or (
                integer and not float(v).is_integer()) or not math.isfinite(v):
            self.fail(here, f"expected {kind}, got {v!r}")
            return default
        v = int(v) if integer else float(v)
        if check is not None and not check(v):
            self.fail(here, msg or f"invalid value {v!r}")
            return default
        return v

    def choice(self, doc, key, ptr, options, default=None):
        if key not in doc:
            return default
        v = doc[key]
        if v not in options:
            self.fail(f"{ptr}/{key}", f"expected one of {list(options)}, got {v!r}")
            return default
        return v


def _closed_form(r, doc, ptr):
    doc = r.keys(doc, ptr, _CLOSED_KEYS)
    kind = r.choice(doc, "kind", ptr, ("const", "sin", "cos"), "const")
    return ClosedForm(kind,
                      r.number(doc, "amplitude", ptr, 1.0),
                      r.number(doc, "k", ptr, 1.0),
                      r.number(doc, "phase", ptr, 0.0),
                      r.number(doc, "decay", ptr, 0.0))


def _field_source(r, doc, ptr, n):
    """A closed form object or a list of ``n`` nodal values."""
    if isinstance(doc, list):
        try:
            arr = np.array(doc, dtype=float)
        except (TypeError, ValueError):
            r.fail(ptr, "expected a list of numbers")
            return None
        if n is not None and arr.shape != (n,):
            r.fail(ptr, f"expected {n} nodal values, got shape {arr.shape}")
        return arr
    return _closed_form(r, doc, ptr)


def _operator(r, doc, ptr, n=None):
    if not isinstance(doc, list):
        r.fail(ptr, "expected a list of terms")
        return OperatorExpr()
    terms = []
    for i, tdoc in enumerate(doc):
        tp = f"{ptr}/{i}"
        tdoc = r.keys(tdoc, tp, _TERM_KEYS)
        coef = r.number(tdoc, "coefficient", tp, 1.0)
        factors = []
        for j, fdoc in enumerate(tdoc.get("factors", [])):
            fp = f"{tp}/factors/{j}"
            fdoc = r.keys(fdoc, fp, {"derivative", "known"})
            if len(fdoc) != 1:
                r.fail(fp, "a factor has exactly one of 'derivative' or 'known'")
            elif "derivative" in fdoc:
                order = r.number(fdoc, "derivative", fp, 0, lambda v: 0 <= v <= 4,
                                 "derivative order must lie in [0, 4]", integer=True)
                factors.append(Derivative(order))
            else:
                src = _field_source(r, fdoc["known"], f"{fp}/known", n)
                if src is not None:
                    factors.append(Known(src))
        terms.append(Term(coef, tuple(factors)))
    return OperatorExpr(tuple(terms))


def _problem(r, doc, ptr="/problem"):
    if isinstance(doc, str):
        doc = {"builtin": doc}
    if isinstance(doc, dict) and "builtin" in doc:
        doc = r.keys(doc, ptr, _BUILTIN_KEYS)
        name = r.choice(doc, "builtin", ptr, tuple(builtins.DEFAULTS))
        n = r.number(doc, "n", ptr, None, lambda v: v >= 4, "n must be >= 4", integer=True)
        tf = r.number(doc, "t_final", ptr, None, lambda v: v > 0, "t_final must be positive")
        ns = r.number(doc, "n_steps", ptr, None, lambda v: v >= 1, "n_steps must be >= 1",
                      integer=True)
        return None if name is None else builtins.builtin_problem(name, n, tf, ns)
    doc = r.keys(doc, ptr, _INLINE_KEYS)
    for key in ("grid", "time", "nonlinearity", "initial"):
        if key not in doc:
            r.fail(f"{ptr}/{key}", "required")
    gdoc = r.keys(doc.get("grid", {}), f"{ptr}/grid", _GRID_KEYS)
    tdoc = r.keys(doc.get("time", {}), f"{ptr}/time", _TIME_KEYS)
    gp, tp = f"{ptr}/grid", f"{ptr}/time"
    x0 = r.number(gdoc, "x_min", gp, 0.0)
    x1 = r.number(gdoc, "x_max", gp, 2 * np.pi)
    n = r.number(gdoc, "n", gp, 64, lambda v: v >= 4, "n must be >= 4", integer=True)
    periodic = gdoc.get("periodic", True)
    if not isinstance(periodic, bool):
        r.fail(f"{gp}/periodic", "expected a boolean")
        periodic = True
    if not x1 > x0:
        r.fail(f"{gp}/x_max", "x_max must exceed x_min")
        return None
    tf = r.number(tdoc, "t_final", tp, 1.0, lambda v: v > 0, "t_final must be positive")
    ns = r.number(tdoc, "n_steps", tp, 1000, lambda v: v >= 1, "n_steps must be >= 1",
                  integer=True)
    grid = build_grid(x0, x1, n, periodic)
    expr = _operator(r, doc.get("nonlinearity", []), f"{ptr}/nonlinearity", n)
    init = _field_source(r, doc.get("initial", {}), f"{ptr}/initial", n)
    forcing = doc.get("forcing")
    if forcing is not None:
        forcing = _field_source(r, forcing, f"{ptr}/forcing", n)
    bdoc = r.keys(doc.get("boundary", {}), f"{ptr}/boundary", _BOUNDARY_KEYS)
    bkind = r.choice(bdoc, "kind", f"{ptr}/boundary", ("periodic", "dirichlet"),
                     "periodic" if periodic else "dirichlet")
    bvalue = None
    if "value" in bdoc:
        bvalue = _closed_form(r, bdoc["value"], f"{ptr}/boundary/value")
    scheme = r.choice(doc, "scheme", ptr, SCHEMES, "spectral" if periodic else "central_fd")
    name = doc.get("name", "inline")
    if init is None:
        return None
    values = init(grid.x, 0.0) if isinstance(init, ClosedForm) else init
    if np.shape(values) != (n,):
        return None
    problem = EvolutionProblem(grid, TimeGrid(tf, ns), expr, FieldSnapshot(values, 0.0),
                               forcing, BoundarySpec(bkind, bvalue), scheme, str(name))
    for msg in validate_problem(problem):
        r.fail(ptr, msg)
    return problem


def _ham(r, doc, ptr="/ham"):
    doc = r.keys(doc, ptr, _HAM_KEYS)
    c0 = r.number(doc, "c0", ptr, -1.0, lambda v: v != 0, "c0 must be non-zero")
    M = r.number(doc, "M", ptr, 10, lambda v: v >= 1, "M must be >= 1", integer=True)
    K = r.number(doc, "iterations", ptr, 0, lambda v: v >= 0, "iterations must be >= 0",
                 integer=True)
    backend = r.choice(doc, "backend", ptr, BACKENDS, "classical")
    integrator = r.choice(doc, "integrator", ptr, INTEGRATORS, "rk4")
    factor = r.number(doc, "divergence_factor", ptr, 10.0, lambda v: v > 1,
                      "divergence_factor must exceed 1")
    window = r.number(doc, "divergence_window", ptr, 3, lambda v: v >= 1,
                      "divergence_window must be >= 1", integer=True)
    linear_op = None
    if "linear_op" in doc:
        linear_op = _operator(r, doc["linear_op"], f"{ptr}/linear_op")
        if not linear_op.is_linear:
            r.fail(f"{ptr}/linear_op", "operator is not linear")
    return HamConfig(c0=c0, M=M, iterations=K, linear_op=linear_op, backend=backend,
                     integrator=integrator, divergence_factor=factor,
                     divergence_window=window)


def _schrod(r, doc, ptr="/schrod"):
    doc = r.keys(doc, ptr, _SCHROD_KEYS)
    kw = {
        "N_p": r.number(doc, "N_p", ptr, 1024, lambda v: v >= 4 and not v & (v - 1),
                        "N_p must be a power of two >= 4", integer=True),
        "L_p": r.number(doc, "L_p", ptr, 20.0, lambda v: v > 0, "L_p must be positive"),
        "p_star": r.number(doc, "p_star", ptr, None, lambda v: v > 0, "p_star must be positive"),
        "mu_margin": r.number(doc, "mu_margin", ptr, 0.1, lambda v: v >= 0,
                              "mu_margin must be non-negative"),
    }
    try:
        return SchrodConfig(**kw)
    except HamSchrodError as exc:
        r.fail(ptr, str(exc))
        return None


def _sweep(r, doc, ptr="/sweep"):
    doc = r.keys(doc, ptr, _SWEEP_KEYS)
    if "c0" in doc:
        values = doc["c0"]
        if not isinstance(values, list) or not values:
            r.fail(f"{ptr}/c0", "expected a non-empty list of numbers")
            return None
        out = []
        for i, v in enumerate(values):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                r.fail(f"{ptr}/c0/{i}", f"expected a number, got {v!r}")
            elif v == 0:
                r.fail(f"{ptr}/c0/{i}", "c0 must be non-zero")
            else:
                out.append(float(v))
        return tuple(out)
    lo = r.number(doc, "lo", ptr, -2.0)
    hi = r.number(doc, "hi", ptr, -0.05)
    pts = r.number(doc, "points", ptr, 40, lambda v: v >= 1, "points must be >= 1",
                   integer=True)
    grid = default_sweep(lo, hi, pts)
    if np.any(grid == 0):
        r.fail(ptr, "sweep interval contains c0 = 0")
    return tuple(float(c) for c in grid)


def _system(r, doc, ptr="/system", base=None):
    if isinstance(doc, str):
        path = Path(doc) if base is None else Path(base) / doc
        try:
            doc = json.loads(path.read_text())
        except OSError as exc:
            r.fail(ptr, f"cannot read system file: {exc}")
            return None
        except json.JSONDecodeError as exc:
            raise ParseError(f"system file is not valid JSON: {exc}", ptr) from exc
    r.keys(doc, ptr, {"A", "b", "a", "t_final", "n_steps", "A_imag", "b_imag", "a_imag"})
    try:
        return LinearSystem.from_json(doc)
    except (KeyError, TypeError, ValueError, HamSchrodError) as exc:
        r.fail(ptr, f"invalid linear system: {exc}")
        return None


def parse_config(document, command=None, base_dir=None):
    """Validate a JSON config document into a :class:`RunConfig`.

    Unknown keys raise :class:`ParseError` at once; every other problem is
    gathered into a single :class:`ValidationError`.
    """
    try:
        doc = json.loads(document) if isinstance(document, (str, bytes)) else document
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg} at line {exc.lineno} column {exc.colno}",
                         "") from exc
    r = _Reader()
    doc = r.keys(doc, "", _TOP_KEYS)
    if r.violations:
        raise ValidationError(r.violations)
    cmd = doc.get("command", command)
    if command is not None and cmd != command:
        r.fail("/command", f"document says {cmd!r} but {command!r} was requested")
    if cmd not in COMMANDS:
        r.fail("/command", f"expected one of {list(COMMANDS)}, got {cmd!r}")
    ham = _ham(r, doc.get("ham", {}))
    schrod = _schrod(r, doc["schrod"]) if "schrod" in doc else None
    if ham.backend == "schrodingerise" and "schrod" not in doc:
        r.fail("/schrod", "backend 'schrodingerise' requires a schrod block")
    cfg = RunConfig(cmd, ham=ham, schrod=schrod, outputs=str(doc.get("outputs", ".")))
    if cmd == "schrodingerise":
        if "system" not in doc:
            r.fail("/system", "required for the schrodingerise command")
        else:
            cfg.system = _system(r, doc["system"], base=base_dir)
        if "problem" in doc:
            r.fail("/problem", "not used by the schrodingerise command")
    else:
        if "problem" not in doc:
            r.fail("/problem", "required")
        else:
            cfg.problem = _problem(r, doc["problem"])
        if "system" in doc:
            r.fail("/system", f"not used by the {cmd} command")
    if "sweep" in doc and cmd != "sweep-c0":
        r.fail("/sweep", "only used by the sweep-c0 command")
    if cmd == "sweep-c0":
        cfg.sweep = _sweep(r, doc.get("sweep", {}))
    if r.violations:
        raise ValidationError(r.violations)
    if cfg.ham.backend == "schrodingerise":
        cfg.ham = replace(cfg.ham, schrod=cfg.schrod)
    return cfg


def _emit(stream, **event):
    stream.write(json.dumps(event, default=float) + "\n")
    stream.flush()


def _write_history(history, path):
    Path(path).write_text(json.dumps([r.to_json() for r in history], indent=2) + "\n")


def _solve_and_write(problem, ham, out, err, suffix=""):
    start = time.perf_counter()
    solution, history = ham_solve(problem, ham)
    for rec in history:
        _emit(err, event="order", backend=ham.backend, m=rec.m, iteration=rec.iteration, residual_norm=rec.residual_norm_after)
    write_csv(solution, out / f"solution{suffix}.csv")
    _write_history(history, out / f"history{suffix}.json")
    report = convergence_report(history)
    (out / f"report{suffix}.json").write_text(json.dumps(report, indent=2) + "\n")
    _emit(err, event="solved", backend=ham.backend, seconds=time.perf_counter() - start,
          verdict=report["verdict"], residual_norm=history[-1].residual_norm_after)
    return solution, history


def run(config, stderr=None):
    """Execute ``config``; returns the process exit status."""
    err = stderr or sys.stderr
    out = Path(config.outputs)
    try:
        out.mkdir(parents=True, exist_ok=True)
        _emit(err, event="start", command=config.command,
              problem=getattr(config.problem, "name", None))
        if config.command == "run":
            _solve_and_write(config.problem, config.ham, out, err)
        elif config.command == "sweep-c0":
            curve = residual_curve(config.problem, config.ham, config.sweep)
            curve.to_csv(out / "curve.csv")
            best = select_c0(curve)
            _emit(err, event="sweep", points=len(curve.samples), selected_c0=best)
            _solve_and_write(config.problem, replace(config.ham, c0=best), out, err)
        elif config.command == "compare-backends":
            classical = replace(config.ham, backend="classical")
            quantum = replace(config.ham, backend="schrodingerise",
                              schrod=config.schrod or SchrodConfig())
            u, _ = _solve_and_write(config.problem, classical, out, err)
            v, _ = _solve_and_write(config.problem, quantum, out, err, "_schrodingerise")
            d = np.abs(np.asarray(u.values) - np.asarray(v.values))
            h = config.problem.grid.h
            diff = {"max_norm": float(d.max()),
                    "l2": float(np.sqrt(np.sum(d ** 2) * h * config.problem.time.dt))}
            (out / "diff.json").write_text(json.dumps(diff, indent=2) + "\n")
            _emit(err, event="diff", **diff)
        else:
            sol, diag = schrodingerise_solve(config.system, config.schrod or SchrodConfig(),
                                             return_diagnostics=True)
            write_csv(sol, out / "solution.csv")
            (out / "diagnostics.json").write_text(json.dumps(diag, indent=2) + "\n")
            _emit(err, event="diagnostics", **diag)
    except HamSchrodError as exc:
        code = exit_code_for(exc)
        _emit(err, event="error", type=type(exc).__name__, message=str(exc), exit_code=code)
        return code
    _emit(err, event="done", exit_code=0)
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(prog="hamschrod", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", help="output directory (overrides 'outputs' in the config)")
    args = parser.parse_args(argv)
    try:
        text = Path(args.config).read_text()
        config = parse_config(text, args.command, base_dir=os.path.dirname(args.config))
    except OSError as exc:
        _emit(sys.stderr, event="error", type="OSError", message=str(exc), exit_code=1)
        return 1
    except HamSchrodError as exc:
        code = exit_code_for(exc)
        event = {"event": "error", "type": type(exc).__name__, "message": str(exc),
                 "exit_code": code}
        if isinstance(exc, ParseError):
            event["pointer"] = exc.pointer
        if isinstance(exc, ValidationError):
            event["violations"] = [{"pointer": p, "message": m} for p, m in exc.violations]
        _emit(sys.stderr, **event)
        return code
    if args.out:
        config.outputs = args.out
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
