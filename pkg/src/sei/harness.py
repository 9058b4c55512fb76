"""Experiment harness: convergence, efficiency and energy-drift studies.

Each study takes an :class:`ExperimentSpec`, integrates the requested
trajectories, and returns plain result rows that can be written to CSV and
parsed back exactly (floats are emitted in shortest round-trip form).  Rows
for distinct (method, step) pairs are independent and may be computed
concurrently; the ``SEI_THREADS`` environment variable caps the worker
count.  Timing runs are always sequential to avoid contention skew.
"""

from __future__ import annotations

import csv
import io
import math
import os
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields as dc_fields, field as dc_field
from pathlib import Path

import numpy as np

from .dynamics import BenchmarkField, FieldModel, hamiltonian, initial_condition, from_momentum
from .integrators import REFERENCE_H_MAX, StepperConfig, integrate, reference_solve
from .state import State8

EXPERIMENTS = ("convergence", "timing", "hamiltonian")

#: Steps used by the built-in studies: h = 2^-5 ... 2^-10.
H_LIST_DEFAULT = tuple(2.0**-j for j in range(5, 11))

#: Acceptance window for the fitted convergence order of both methods.
SLOPE_WINDOW = (1.85, 2.15)

#: Errors at or below this are reported as exact and excluded from slope fits.
EXACT_FLOOR = 1e-12

#: Step used by the energy-drift study unless the spec pins a single one.
HAMILTONIAN_H_DEFAULT = 2.0**-6

#: Number of repetitions per timing measurement (median is reported).
TIMING_REPEATS = 5


def worker_count() -> int:
    """Harness parallelism: SEI_THREADS if set, else one worker per core."""
    raw = os.environ.get("SEI_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise ValueError(f"SEI_THREADS must be a positive integer, got {raw!r}")
    return n


def _map_tasks(fn, tasks):
    workers = min(worker_count(), len(tasks))
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def resolve_ic(ic) -> State8:
    """Initial condition from a preset name, a custom (x, p) mapping, or a state."""
    if isinstance(ic, State8):
        return ic
    if isinstance(ic, str):
        return initial_condition(ic)
    if isinstance(ic, dict):
        extras = set(ic) - {"x", "p", "tbar"}
        if extras:
            raise ValueError(f"unknown initial-condition keys: {sorted(extras)}")
        if "x" not in ic or "p" not in ic:
            raise ValueError('custom initial condition needs "x" and "p"')
        return from_momentum(ic["x"], float(ic.get("tbar", 0.0)), ic["p"])
    raise ValueError(f"cannot interpret initial condition {ic!r}")


def steps_for(h: float, T: float) -> int:
    """Integer step count n with n*h = T, required exact to one part in 1e9."""
    n = round(T / h)
    if n < 1 or abs(n * h - T) > 1e-9 * abs(T):
        raise ValueError(f"step {h} does not divide T = {T}")
    return n


@dataclass(frozen=True, eq=False)
class ExperimentSpec:
    """Configuration of one study run.

    ``T`` and ``methods`` default per experiment: T = 1 with methods
    ("sei",) for convergence, T = 1 with both methods for timing, and
    T = 120 with both methods for the energy-drift study (use T = 1000 with
    methods ("sei",) for the long run).  The energy-drift study integrates
    at a single step: ``h_list[0]`` when exactly one step is given,
    otherwise 2^-6.
    """

    experiment: str
    ic: object = "I"
    h_list: tuple = H_LIST_DEFAULT
    T: float | None = None
    methods: tuple | None = None
    output_path: str | Path | None = None
    field: FieldModel = dc_field(default_factory=BenchmarkField)

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        h_list = tuple(float(h) for h in self.h_list)
        if not h_list:
            raise ValueError("h_list must not be empty")
        for h in h_list:
            if not 0.0 < h <= 1.0:
                raise ValueError("every step in h_list must be in (0,1]")
        object.__setattr__(self, "h_list", h_list)
        T = float(self.T) if self.T is not None else (120.0 if self.experiment == "hamiltonian" else 1.0)
        if T <= 0.0:
            raise ValueError("T must be positive")
        object.__setattr__(self, "T", T)
        if self.methods is None:
            methods = ("sei",) if self.experiment == "convergence" else ("sei", "heun")
        elif isinstance(self.methods, str):
            methods = (self.methods,)
        else:
            methods = tuple(self.methods)
        unknown = set(methods) - {"sei", "heun"}
        if not methods or unknown:
            raise ValueError(f"methods must be a non-empty subset of ('sei', 'heun'), got {methods!r}")
        object.__setattr__(self, "methods", methods)
        resolve_ic(self.ic)
        if self.experiment == "hamiltonian":
            h_used = h_list[0] if len(h_list) == 1 else HAMILTONIAN_H_DEFAULT
            steps_for(h_used, T)
        else:
            for h in h_list:
                steps_for(h, T)


def experiment_from_config(experiment: str, doc: dict | None = None, **overrides) -> ExperimentSpec:
    """Build a spec from a JSON-style document merged under explicit overrides.

    Recognized document keys: ic, h (single step), h_list, T, methods,
    output_path, and the field selection keys (field, B, E).  Override
    keyword arguments win over the document.
    """
    from .dynamics import field_from_config

    doc = dict(doc or {})
    extras = set(doc) - {"ic", "h", "h_list", "T", "methods", "output_path", "field", "B", "E"}
    if extras:
        raise ValueError(f"unknown configuration keys: {sorted(extras)}")
    field_doc = {k: doc[k] for k in ("field", "B", "E") if k in doc}
    kwargs: dict = {"field": field_from_config(field_doc)}
    if "h" in doc and "h_list" in doc:
        raise ValueError('give either "h" or "h_list", not both')
    if "h" in doc:
        kwargs["h_list"] = (float(doc["h"]),)
    if "h_list" in doc:
        kwargs["h_list"] = tuple(float(h) for h in doc["h_list"])
    for key in ("ic", "T", "methods", "output_path"):
        if key in doc:
            kwargs[key] = doc[key]
    for key, value in overrides.items():
        if value is not None:
            kwargs[key] = value
    return ExperimentSpec(experiment=experiment, **kwargs)


def err_u(num: State8, exact: State8) -> float:
    """Summed relative error of the position and velocity blocks.

    ``|y_n - y(tau)| / |y(tau)| + |u_n - u(tau)| / |u(tau)|`` in Euclidean
    norms; the reference state must have nonzero block norms.
    """
    ny = float(np.linalg.norm(exact.y))
    nu = float(np.linalg.norm(exact.u))
    if ny == 0.0 or nu == 0.0:
        raise ValueError("exact state has a zero-norm block; relative error undefined")
    return float(np.linalg.norm(num.y - exact.y) / ny + np.linalg.norm(num.u - exact.u) / nu)


def fit_slope(hs, errs) -> float:
    """Least-squares slope of log2(err) against log2(h)."""
    hs = np.asarray(hs, dtype=float)
    errs = np.asarray(errs, dtype=float)
    if hs.size < 3:
        raise ValueError("slope fit requires at least 3 points")
    return float(np.polyfit(np.log2(hs), np.log2(errs), 1)[0])


@dataclass(frozen=True)
class ConvergenceRow:
    method: str
    h: float
    T: float
    err_u: float
    status: str


@dataclass(frozen=True)
class HamiltonianRow:
    method: str
    h: float
    T: float
    tau: float
    rel_err_h: float
    status: str


@dataclass(frozen=True)
class TimingRow:
    method: str
    h: float
    T: float
    err_u: float
    seconds: float
    evaluations: int
    status: str


@dataclass(frozen=True)
class ConvergenceResult:
    rows: list
    slopes: dict
    reference_gap: float


@dataclass(frozen=True)
class HamiltonianResult:
    rows: list
    max_rel_err: dict


@dataclass(frozen=True)
class TimingResult:
    rows: list


def _reference_pair(field, u0, T, h_min):
    """Reference state plus its step-halving validation gap (max-norm)."""
    h_ref = min(h_min / 32.0, REFERENCE_H_MAX)
    exact = reference_solve(field, u0, T, h_ref)
    check = reference_solve(field, u0, T, h_ref / 2.0)
    return exact, float(np.max(np.abs(exact.vec - check.vec)))


def convergence_study(spec: ExperimentSpec) -> ConvergenceResult:
    """Global error against the validated reference for every (method, h).

    Fits the log2-log2 slope per method over rows with status "ok"; rows at
    or below the exact floor are flagged "exact" and excluded from the fit,
    which is skipped (slope None) with fewer than 3 usable rows.
    """
    if spec.experiment != "convergence":
        raise ValueError("spec.experiment must be 'convergence'")
    u0 = resolve_ic(spec.ic)
    exact, gap = _reference_pair(spec.field, u0, spec.T, min(spec.h_list))

    def compute(task) -> ConvergenceRow:
        method, h = task
        cfg = StepperConfig(h, steps_for(h, spec.T), spec.field, u0.x)
        res = integrate(cfg, u0, method)
        if not res.ok:
            return ConvergenceRow(method, h, spec.T, math.nan, "failed")
        err = err_u(res.final, exact)
        return ConvergenceRow(method, h, spec.T, err, "exact" if err <= EXACT_FLOOR else "ok")

    rows = _map_tasks(compute, [(m, h) for m in spec.methods for h in spec.h_list])
    slopes = {}
    for method in spec.methods:
        ok = [r for r in rows if r.method == method and r.status == "ok"]
        slopes[method] = fit_slope([r.h for r in ok], [r.err_u for r in ok]) if len(ok) >= 3 else None
    if spec.output_path is not None:
        write_rows(spec.output_path, rows)
    return ConvergenceResult(rows, slopes, gap)


def hamiltonian_study(spec: ExperimentSpec) -> HamiltonianResult:
    """Relative energy error sampled along one trajectory per method."""
    if spec.experiment != "hamiltonian":
        raise ValueError("spec.experiment must be 'hamiltonian'")
    if not spec.field.has_potential:
        raise ValueError("field has no potential")
    u0 = resolve_ic(spec.ic)
    h = spec.h_list[0] if len(spec.h_list) == 1 else HAMILTONIAN_H_DEFAULT
    num_steps = steps_for(h, spec.T)
    stride = max(1, math.ceil(num_steps / 10000))
    h0 = hamiltonian(spec.field, u0)

    def compute(method) -> list[HamiltonianRow]:
        samples: list[tuple[float, float]] = []

        def observe(step, tau, s):
            samples.append((tau, abs(hamiltonian(spec.field, s) - h0) / abs(h0)))

        cfg = StepperConfig(h, num_steps, spec.field, u0.x)
        res = integrate(cfg, u0, method, observers=(observe,), stride=stride)
        rows = [HamiltonianRow(method, h, spec.T, tau, rel, "ok") for tau, rel in samples]
        if not res.ok:
            rows.append(HamiltonianRow(method, h, spec.T, res.failed_at_step * h, math.nan, "failed"))
        return rows

    rows = [row for chunk in _map_tasks(compute, list(spec.methods)) for row in chunk]
    maxes = {}
    for m in spec.methods:
        try:
            maxes[m] = max_rel_err(rows, m)
        except ValueError:
            maxes[m] = math.nan
    if spec.output_path is not None:
        write_rows(spec.output_path, rows)
    return HamiltonianResult(rows, maxes)


def max_rel_err(rows, method: str, tau_max: float | None = None) -> float:
    """Largest sampled relative energy error for a method, optionally windowed."""
    vals = [
        r.rel_err_h
        for r in rows
        if r.method == method and r.status == "ok" and (tau_max is None or r.tau <= tau_max)
    ]
    if not vals:
        raise ValueError(f"no usable rows for method {method!r}")
    return max(vals)


def timing_study(spec: ExperimentSpec) -> TimingResult:
    """Wall-clock (median of repetitions) and exact evaluation counts per row.

    Runs strictly sequentially; seconds are machine-dependent and reported
    for inspection only, while the evaluation counters are exact.
    """
    if spec.experiment != "timing":
        raise ValueError("spec.experiment must be 'timing'")
    u0 = resolve_ic(spec.ic)
    exact, _ = _reference_pair(spec.field, u0, spec.T, min(spec.h_list))
    rows = []
    for method in spec.methods:
        for h in spec.h_list:
            cfg = StepperConfig(h, steps_for(h, spec.T), spec.field, u0.x)
            runs = [integrate(cfg, u0, method) for _ in range(TIMING_REPEATS)]
            secs = statistics.median(r.seconds for r in runs)
            res = runs[0]
            if res.ok:
                rows.append(
                    TimingRow(method, h, spec.T, err_u(res.final, exact), secs, res.evaluations, "ok")
                )
            else:
                rows.append(TimingRow(method, h, spec.T, math.nan, secs, res.evaluations, "failed"))
    if spec.output_path is not None:
        write_rows(spec.output_path, rows)
    return TimingResult(rows)


# --------------------------------------------------------------------------
# CSV emission: one file per experiment, header row, shortest round-trip
# float formatting so that parsing an emitted file reproduces the rows.
# --------------------------------------------------------------------------

_CASTERS = {"str": str, "float": float, "int": int}


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_rows(target, rows) -> None:
    """Write result rows as CSV to a path or file-like object."""
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to write")
    names = [f.name for f in dc_fields(rows[0])]

    def emit(handle) -> None:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(names)
        for row in rows:
            writer.writerow([_cell(getattr(row, n)) for n in names])

    if isinstance(target, (str, Path)):
        with open(target, "w", newline="") as handle:
            emit(handle)
    else:
        emit(target)


def read_rows(source, row_type) -> list:
    """Parse rows written by :func:`write_rows` back into ``row_type``."""
    casters = {f.name: _CASTERS[str(f.type)] for f in dc_fields(row_type)}

    def parse(handle) -> list:
        reader = csv.DictReader(handle)
        return [row_type(**{k: casters[k](v) for k, v in rec.items()}) for rec in reader]

    if isinstance(source, (str, Path)):
        with open(source, newline="") as handle:
            return parse(handle)
    return parse(source)


def rows_to_csv_text(rows) -> str:
    """CSV document for result rows as a string (used for stdout emission)."""
    buf = io.StringIO()
    write_rows(buf, rows)
    return buf.getvalue()
