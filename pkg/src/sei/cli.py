"""Command-line entry point.

Subcommands: ``run`` (single trajectory, final state as JSON),
``convergence`` / ``hamiltonian`` / ``timing`` (the built-in studies, CSV to
--out or stdout) and ``selftest`` (numerical sanity suite).  Options given
on the command line override the JSON configuration document.

Exit codes: 0 success; 1 failed trajectory or failed acceptance gate;
2 usage error; 3 unreadable configuration or unmet configuration
precondition.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from . import harness
from .dynamics import FieldDomainError, field_from_config
from .harness import (
    SLOPE_WINDOW,
    ExperimentSpec,
    experiment_from_config,
    max_rel_err,
    resolve_ic,
    rows_to_csv_text,
    steps_for,
)
from .integrators import StepperConfig, integrate

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3

_STUDIES = ("convergence", "hamiltonian", "timing")


class ConfigError(Exception):
    """Unreadable or inconsistent configuration input."""


@dataclass(frozen=True)
class CliInvocation:
    subcommand: str
    config_path: str | None
    overrides: dict


def _add_common(sub, *, h_help: str, t_default: str, method_default: str) -> None:
    sub.add_argument("--config", metavar="PATH", default=None,
                     help="JSON configuration document (default: none); flags override it")
    sub.add_argument("--ic", choices=("I", "II"), default=None,
                     help="initial-condition preset (default: I)")
    sub.add_argument("--method", default=None, metavar="NAME",
                     help=f"integration method(s), comma-separated subset of sei,heun "
                          f"(default: {method_default})")
    sub.add_argument("--h", default=None, metavar="STEP", help=h_help)
    sub.add_argument("--T", default=None, type=float, metavar="TIME",
                     help=f"final proper time (default: {t_default})")
    sub.add_argument("--out", default=None, metavar="PATH",
                     help="output file (default: stdout)")
    sub.add_argument("--field", choices=("paper", "uniform", "zero"), default=None,
                     help="field model (default: paper)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sei",
        description="Symmetric exponential integrator for relativistic charged-particle motion.",
    )
    subs = parser.add_subparsers(dest="subcommand", required=True)

    run = subs.add_parser("run", help="integrate a single trajectory and print the final state")
    _add_common(run, h_help="time step (default: 0.015625)", t_default="1.0", method_default="sei")

    conv = subs.add_parser("convergence", help="global-error study over a range of steps")
    _add_common(conv, h_help="comma-separated steps (default: 2^-5..2^-10)",
                t_default="1.0", method_default="sei")

    ham = subs.add_parser("hamiltonian", help="relative energy error along a trajectory")
    _add_common(ham, h_help="time step (default: 0.015625)", t_default="120.0",
                method_default="sei,heun")

    tim = subs.add_parser("timing", help="wall-clock and work-count comparison")
    _add_common(tim, h_help="comma-separated steps (default: 2^-5..2^-10)",
                t_default="1.0", method_default="sei,heun")

    subs.add_parser("selftest", help="run the built-in numerical sanity suite")
    return parser


def parse_args(argv) -> CliInvocation:
    ns = build_parser().parse_args(argv)
    overrides = {
        key: value
        for key, value in vars(ns).items()
        if key not in ("subcommand", "config") and value is not None
    }
    return CliInvocation(ns.subcommand, getattr(ns, "config", None), overrides)


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as handle:
            doc = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"configuration {path} must contain a JSON object")
    return doc


def _parse_methods(raw: str) -> tuple:
    methods = tuple(m.strip() for m in raw.split(",") if m.strip())
    if not methods or set(methods) - {"sei", "heun"}:
        raise ValueError(f"--method must be a comma-separated subset of sei,heun, got {raw!r}")
    return methods


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _cmd_run(inv: CliInvocation) -> int:
    doc = _load_config(inv.config_path)
    ov = inv.overrides
    extras = set(doc) - {"field", "B", "E", "ic", "h", "T", "method"}
    if extras:
        raise ConfigError(f"unknown configuration keys: {sorted(extras)}")
    field_doc = {k: doc[k] for k in ("field", "B", "E") if k in doc}
    if "field" in ov:
        field_doc["field"] = ov["field"]
    try:
        field = field_from_config(field_doc)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    u0 = resolve_ic(ov.get("ic", doc.get("ic", "I")))
    h = float(ov.get("h", doc.get("h", 2.0**-6)))
    T = float(ov.get("T", doc.get("T", 1.0)))
    method = ov.get("method", doc.get("method", "sei"))
    if method not in ("sei", "heun"):
        raise ValueError(f"method must be sei or heun, got {method!r}")
    if not 0.0 < h <= 1.0:
        raise ValueError("h must be in (0,1]")
    cfg = StepperConfig(h, steps_for(h, T), field, u0.x)
    res = integrate(cfg, u0, method)
    if not res.ok:
        print(f"trajectory failed at step {res.failed_at_step}: {res.failure}", file=sys.stderr)
        return EXIT_FAILURE
    final = res.final
    payload = {
        "x": list(final.x),
        "tbar": final.tbar,
        "v": list(final.v),
        "gamma": final.gamma,
        "steps": res.steps,
        "evaluations": res.evaluations,
        "seconds": res.seconds,
        "status": res.status,
    }
    _emit(json.dumps(payload, indent=2) + "\n", ov.get("out"))
    return EXIT_OK


def _build_spec(inv: CliInvocation) -> ExperimentSpec:
    doc = _load_config(inv.config_path)
    try:
        # Validate the document on its own so config defects exit with the
        # configuration code rather than the usage code.
        experiment_from_config(inv.subcommand, doc)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    ov = dict(inv.overrides)
    out = ov.pop("out", None)
    if "field" in ov:
        doc = dict(doc)
        doc["field"] = ov.pop("field")
        if doc["field"] != "uniform":
            doc.pop("B", None)
            doc.pop("E", None)
    if "method" in ov:
        ov["methods"] = _parse_methods(ov.pop("method"))
    if "h" in ov:
        try:
            ov["h_list"] = tuple(float(part) for part in str(ov.pop("h")).split(","))
        except ValueError as exc:
            raise ValueError(f"--h expects a float or comma-separated floats: {exc}") from exc
    return experiment_from_config(inv.subcommand, doc, output_path=out, **ov)


def _rows_out(rows, spec: ExperimentSpec) -> None:
    # Studies write output_path themselves; mirror to stdout when unset.
    if spec.output_path is None:
        sys.stdout.write(rows_to_csv_text(rows))


def _failed_rows(rows) -> list:
    return [r for r in rows if r.status == "failed"]


def _cmd_convergence(inv: CliInvocation) -> int:
    spec = _build_spec(inv)
    result = harness.convergence_study(spec)
    _rows_out(result.rows, spec)
    code = EXIT_OK
    print(f"reference validation gap: {result.reference_gap:.3e}", file=sys.stderr)
    for method, slope in result.slopes.items():
        if slope is None:
            print(f"{method}: slope fit skipped (rows exact or failed)", file=sys.stderr)
            continue
        lo, hi = SLOPE_WINDOW
        verdict = "ok" if lo <= slope <= hi else "OUTSIDE WINDOW"
        print(f"{method}: fitted slope {slope:.4f} [{lo}, {hi}] {verdict}", file=sys.stderr)
        if not lo <= slope <= hi:
            code = EXIT_FAILURE
    if _failed_rows(result.rows):
        print(f"{len(_failed_rows(result.rows))} trajectory failure(s)", file=sys.stderr)
        code = EXIT_FAILURE
    return code


def _cmd_hamiltonian(inv: CliInvocation) -> int:
    spec = _build_spec(inv)
    if not spec.field.has_potential:
        raise ConfigError("field has no potential")
    result = harness.hamiltonian_study(spec)
    _rows_out(result.rows, spec)
    for method, worst in result.max_rel_err.items():
        print(f"{method}: max relative energy error {worst:.3e}", file=sys.stderr)
    if _failed_rows(result.rows):
        print(f"{len(_failed_rows(result.rows))} trajectory failure(s)", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def _cmd_timing(inv: CliInvocation) -> int:
    spec = _build_spec(inv)
    result = harness.timing_study(spec)
    _rows_out(result.rows, spec)
    if _failed_rows(result.rows):
        print(f"{len(_failed_rows(result.rows))} trajectory failure(s)", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def _cmd_selftest(inv: CliInvocation) -> int:
    from .selftest import run_checks

    results = run_checks()
    for check in results:
        print(f"{'PASS' if check.ok else 'FAIL'}  {check.name}: {check.detail}")
    failures = [c for c in results if not c.ok]
    print(f"{len(results) - len(failures)}/{len(results)} checks passed")
    return EXIT_OK if not failures else EXIT_FAILURE


_HANDLERS = {
    "run": _cmd_run,
    "convergence": _cmd_convergence,
    "hamiltonian": _cmd_hamiltonian,
    "timing": _cmd_timing,
    "selftest": _cmd_selftest,
}


def dispatch(inv: CliInvocation) -> int:
    try:
        return _HANDLERS[inv.subcommand](inv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FieldDomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main(argv=None) -> int:
    return dispatch(parse_args(argv))


def entrypoint() -> None:  # pragma: no cover - console script shim
    sys.exit(main())
