"""Built-in numerical sanity suite behind ``sei selftest``.

A fast, deterministic subset of the verification battery: kernel norm
estimates, branch continuity, agreement with the series/quadrature oracles,
equivalence of the real dynamics with the complex-coordinate formulation,
and exact time reversal of the two-step map.  Each check reports one line.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dynamics, so3
from .integrators import PairState, StepperConfig, integrate, sei_map
from .oracles import matrix_from_action, phi1_gauss, series_exp_so3, spectral_norm
from .state import State8

_SEED = 20250810


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str


def _random_linear_parts(rng, n, scale=10.0):
    return [so3.LinearPart.from_b(rng.uniform(-scale, scale, 3)) for _ in range(n)]


def _check(name, worst, bound, fmt="{:.3e}") -> CheckResult:
    return CheckResult(name, worst <= bound, f"worst {fmt.format(worst)} (bound {fmt.format(bound)})")


def check_rotation_orthogonality(samples=300) -> CheckResult:
    rng = np.random.default_rng(_SEED)
    worst = 0.0
    for lp in _random_linear_parts(rng, samples):
        t = rng.uniform(-10.0, 10.0)
        r = so3.exp_so3(t, lp)
        worst = max(worst, float(np.linalg.norm(r.T @ r - np.eye(3), ord="fro")))
    return _check("rotation orthogonality", worst, 1e-12)


def check_phi1_norm(samples=300) -> CheckResult:
    rng = np.random.default_rng(_SEED + 1)
    worst = 0.0
    for lp in _random_linear_parts(rng, samples):
        h = rng.uniform(0.0, 1.0) or 0.5
        worst = max(worst, spectral_norm(so3.phi1_so3(h, lp)))
    return _check("phi1 spectral norm <= 1", worst, 1.0 + 1e-12, fmt="{:.15f}")


def check_propagator_norm(samples=300) -> CheckResult:
    rng = np.random.default_rng(_SEED + 2)
    worst = 0.0
    for lp in _random_linear_parts(rng, samples):
        h = rng.uniform(0.0, 1.0) or 0.5
        prop = so3.LinearPropagator(h, lp)
        margin = spectral_norm(matrix_from_action(prop.apply, 8)) - (1.0 + h)
        worst = max(worst, margin)
    return _check("block propagator norm <= 1+h", worst, 1e-10)


def check_rotation_group(samples=200) -> CheckResult:
    rng = np.random.default_rng(_SEED + 3)
    worst = 0.0
    for lp in _random_linear_parts(rng, samples, scale=5.0):
        s, t = rng.uniform(-3.0, 3.0, 2)
        diff = so3.exp_so3(s + t, lp) - so3.exp_so3(s, lp) @ so3.exp_so3(t, lp)
        worst = max(worst, float(np.abs(diff).max()))
    return _check("rotation group property", worst, 1e-12)


def check_branch_continuity() -> CheckResult:
    worst = 0.0
    for theta in (1e-4, 1e-2, 1.0, 25.0):
        lp = so3.LinearPart.from_b((0.6 * theta, -0.64 * theta, 0.48 * theta))
        t = so3.SMALL_ANGLE / lp.theta
        for trig, series in (
            (so3._exp_coeffs_trig, so3._exp_coeffs_series),
            (so3._phi1_coeffs_trig, so3._phi1_coeffs_series),
        ):
            a1, b1 = trig(t, lp.theta)
            a2, b2 = series(t, lp.theta)
            diff = abs(a1 - a2) * np.abs(lp.s).max() + abs(b1 - b2) * np.abs(lp.s2).max()
            worst = max(worst, float(diff))
    return _check("small-angle branch continuity", worst, 1e-13)


def check_series_oracle(samples=200) -> CheckResult:
    rng = np.random.default_rng(_SEED + 4)
    worst = 0.0
    for lp in _random_linear_parts(rng, samples, scale=2.0 / np.sqrt(3.0)):
        t = rng.uniform(0.0, 1.0) or 0.5
        worst = max(worst, float(np.abs(so3.exp_so3(t, lp) - series_exp_so3(t, lp)).max()))
    return _check("rotation vs series oracle", worst, 1e-12)


def check_phi1_oracle(samples=40) -> CheckResult:
    rng = np.random.default_rng(_SEED + 5)
    worst = 0.0
    for lp in _random_linear_parts(rng, samples, scale=2.0):
        t = rng.uniform(0.0, 1.0) or 0.5
        worst = max(worst, float(np.abs(so3.phi1_so3(t, lp) - phi1_gauss(t, lp)).max()))
    return _check("phi1 vs quadrature oracle", worst, 1e-10)


def check_complex_equivalence(samples=300) -> CheckResult:
    rng = np.random.default_rng(_SEED + 6)
    field = dynamics.BenchmarkField()
    worst = 0.0
    for _ in range(samples):
        x = rng.uniform(-2.0, 2.0, 3)
        x[0] += 2.0 * np.sign(x[0] or 1.0)  # keep clear of the potential axis
        s = dynamics.from_momentum(x, rng.uniform(-1.0, 1.0), rng.uniform(-2.0, 2.0, 3))
        x0 = rng.uniform(-1.0, 1.0, 3)
        real = dynamics.nonlinear_remainder(field, x0, s).vec
        z = dynamics.complex_remainder(field, x0, dynamics.to_complex(s))
        mapped = z.real.copy()
        mapped[7] = z[7].imag
        worst = max(worst, float(np.abs(real - mapped).max()))
    return _check("real vs complex remainder", worst, 1e-13)


def check_time_reversal(samples=200) -> CheckResult:
    rng = np.random.default_rng(_SEED + 7)
    field = dynamics.BenchmarkField()
    worst = 0.0
    for _ in range(samples):
        h = float(rng.choice((2.0**-4, 2.0**-8)))
        vecs = rng.standard_normal((2, 8))
        vecs[:, 0] += 2.0  # axis clearance for the remainder evaluation
        older, mid = State8(vecs[0]), State8(vecs[1])
        lp = so3.LinearPart.from_field(field, mid.x)
        forward = sei_map(PairState(mid, older), h, lp, field)
        back = sei_map(PairState(mid, forward.current), -h, lp, field)
        err = np.linalg.norm(back.current.vec - older.vec) / np.linalg.norm(older.vec)
        worst = max(worst, float(err))
    return _check("two-step time reversal", worst, 1e-12)


def check_uniform_field_exactness() -> CheckResult:
    field = dynamics.UniformField(B=(0.3, -1.1, 0.7))
    u0 = dynamics.from_momentum((0.2, -0.4, 1.0), 0.0, (0.5, 0.25, -0.75))
    h, T = 2.0**-3, 1.0
    cfg = StepperConfig(h, round(T / h), field, u0.x)
    res = integrate(cfg, u0, "sei")
    lp = cfg.linear_part
    expected = np.empty(8)
    expected[0:3] = u0.x + T * (so3.phi1_so3(T, lp) @ u0.v)
    expected[3] = u0.tbar + T * u0.gamma
    expected[4:7] = so3.exp_so3(T, lp) @ u0.v
    expected[7] = u0.gamma
    worst = float(np.abs(res.final.vec - expected).max())
    return _check("uniform-field exactness", worst, 1e-11)


def check_presets() -> CheckResult:
    field = dynamics.BenchmarkField()
    worst = 0.0
    for name in ("I", "II"):
        s = dynamics.initial_condition(name)
        worst = max(worst, abs(s.gamma - np.sqrt(1.0 + float(s.v @ s.v))))
        worst = max(worst, abs(dynamics.hamiltonian(field, s) - (field.V(s.x) + s.gamma)))
        worst = max(worst, abs(dynamics.minkowski_defect(s)))
    return _check("initial-condition presets", worst, 1e-14)


ALL_CHECKS = (
    check_rotation_orthogonality,
    check_phi1_norm,
    check_propagator_norm,
    check_rotation_group,
    check_branch_continuity,
    check_series_oracle,
    check_phi1_oracle,
    check_complex_equivalence,
    check_time_reversal,
    check_uniform_field_exactness,
    check_presets,
)


def run_checks() -> list[CheckResult]:
    """Run every check; deterministic and fast (a few seconds)."""
    return [check() for check in ALL_CHECKS]
