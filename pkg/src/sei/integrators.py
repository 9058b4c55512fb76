"""Two-step symmetric exponential stepper, Heun baseline, reference solver.

The stepper advances the extended pair state (U^{n+1}, U^n).  One step of
the map Phi_h reads

    U^{n+1} = exp(2hL) U^{n-1} + 2h exp(hL) F(U^n)

with the frozen linear propagator applied blockwise and the remainder F
evaluated once per step.  The recursion is started with

    U^1 = exp(hL) (U^0 + h F(U^0))

The map is symmetric: Phi_{-h} around the middle state inverts Phi_h
exactly, which :func:`sei_map` exposes by accepting negative steps.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field as dc_field

import numpy as np

from .dynamics import FieldDomainError, FieldModel, _remainder_vec, _rhs_vec
from .so3 import LinearPart, LinearPropagator
from .state import State8

METHODS = ("sei", "heun")

#: Coarsest admissible step for the reference solver.
REFERENCE_H_MAX = 2.0**-14


@dataclass(frozen=True, eq=False)
class PairState:
    """Extended two-step state: the newest iterate and its predecessor."""

    current: State8
    previous: State8

    def __post_init__(self) -> None:
        if not (self.current.isfinite() and self.previous.isfinite()):
            raise ValueError("pair state components must be finite")


@dataclass(frozen=True, eq=False)
class StepperConfig:
    """Immutable per-trajectory configuration.

    The linearization point is fixed for the whole integration (normally the
    initial position); the frozen linear part and its step propagators are
    precomputed here and shared by every step.
    """

    h: float
    num_steps: int
    field: FieldModel
    x0: np.ndarray
    linear_part: LinearPart = dc_field(init=False, repr=False)
    _propagators: dict = dc_field(init=False, repr=False, default_factory=dict)

    def __post_init__(self) -> None:
        if not (isinstance(self.h, (int, float)) and 0.0 < self.h <= 1.0):
            raise ValueError("h must be in (0,1]")
        if not (isinstance(self.num_steps, int) and self.num_steps >= 0):
            raise ValueError("num_steps must be a non-negative integer")
        x0 = np.array(self.x0, dtype=float)
        if x0.shape != (3,):
            raise ValueError("x0 must be a 3-vector")
        x0.flags.writeable = False
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "linear_part", LinearPart.from_field(self.field, x0))

    def propagator(self, h: float) -> LinearPropagator:
        """Cached step propagator of the frozen linear part."""
        prop = self._propagators.get(h)
        if prop is None:
            prop = self._propagators[h] = LinearPropagator(h, self.linear_part)
        return prop


def _phi_vec(
    prev: np.ndarray,
    curr: np.ndarray,
    h: float,
    prop_h: LinearPropagator,
    prop_2h: LinearPropagator,
    field: FieldModel,
    b0: np.ndarray,
) -> np.ndarray:
    f = _remainder_vec(field, b0, curr)
    return prop_2h.apply(prev) + (2.0 * h) * prop_h.apply(f)


def sei_start(cfg: StepperConfig, u0: State8) -> PairState:
    """Starter step: U^1 = exp(hL)(U^0 + h F(U^0))."""
    b0 = cfg.linear_part.b0
    f0 = _remainder_vec(cfg.field, b0, u0.vec)
    u1 = cfg.propagator(cfg.h).apply(u0.vec + cfg.h * f0)
    return PairState(State8(u1), u0)


def sei_step(cfg: StepperConfig, p: PairState) -> PairState:
    """One application of the two-step map Phi_h at the configured step."""
    new = _phi_vec(
        p.previous.vec,
        p.current.vec,
        cfg.h,
        cfg.propagator(cfg.h),
        cfg.propagator(2.0 * cfg.h),
        cfg.field,
        cfg.linear_part.b0,
    )
    return PairState(State8(new), p.current)


def sei_map(p: PairState, h: float, lp: LinearPart, field: FieldModel) -> PairState:
    """The two-step map Phi_h for an arbitrary finite step.

    Unlike :func:`sei_step` this places no sign restriction on ``h``;
    negative steps realize the time-reversed map.
    """
    if not math.isfinite(h):
        raise ValueError("h must be finite")
    new = _phi_vec(
        p.previous.vec,
        p.current.vec,
        h,
        LinearPropagator(h, lp),
        LinearPropagator(2.0 * h, lp),
        field,
        lp.b0,
    )
    return PairState(State8(new), p.current)


def heun_step(field: FieldModel, s: State8, h: float) -> State8:
    """One explicit trapezoidal (Heun) step on the full equations of motion.

    Uses exactly two field evaluations.
    """
    k1 = _rhs_vec(field, s.vec)
    k2 = _rhs_vec(field, s.vec + h * k1)
    return State8(s.vec + 0.5 * h * (k1 + k2))


def reference_solve(field: FieldModel, u0: State8, T: float, h_ref: float) -> State8:
    """High-accuracy reference state at proper time T.

    Classical fourth-order one-step integration with step ``h_ref``
    (required to be at most 2^-14; slightly shrunk if it does not divide T).
    Callers validate the result by halving ``h_ref``: on the built-in study
    configurations at T=1 the two results agree to <= 1e-10.
    """
    if not 0.0 < h_ref <= REFERENCE_H_MAX:
        raise ValueError(f"h_ref must be in (0, {REFERENCE_H_MAX}]")
    if T < 0.0:
        raise ValueError("T must be non-negative")
    if T == 0.0:
        return u0
    n_exact = T / h_ref
    n = round(n_exact)
    if n < 1 or abs(n - n_exact) > 1e-9 * n:
        n = max(1, math.ceil(n_exact))
    h = T / n
    half = 0.5 * h
    sixth = h / 6.0
    u = np.array(u0.vec)
    for _ in range(n):
        k1 = _rhs_vec(field, u)
        k2 = _rhs_vec(field, u + half * k1)
        k3 = _rhs_vec(field, u + half * k2)
        k4 = _rhs_vec(field, u + h * k3)
        u = u + sixth * (k1 + 2.0 * (k2 + k3) + k4)
    return State8(u)


@dataclass(frozen=True)
class TrajectoryResult:
    """Outcome of one trajectory integration."""

    final: State8 | None
    steps: int
    evaluations: int
    seconds: float
    status: str
    failure: str | None = None
    failed_at_step: int | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def integrate(
    cfg: StepperConfig,
    u0: State8,
    method: str,
    observers=(),
    stride: int = 1,
) -> TrajectoryResult:
    """Run ``cfg.num_steps`` steps of the chosen method from ``u0``.

    Observers are callables ``(step_index, proper_time, state)`` invoked at
    step 0, every ``stride`` steps, and at the final step.  Every step is
    checked for finiteness; the first violation aborts the trajectory with a
    failure record instead of an exception.  Field-domain errors and
    numerical-range errors raised mid-step (a diverging trajectory can push
    intermediate stage values past the float range before the committed
    state does, including inside an observer) are recorded the same way.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if not (isinstance(stride, int) and stride >= 1):
        raise ValueError("stride must be a positive integer")
    observers = tuple(observers)
    h = cfg.h
    n_total = cfg.num_steps

    def notify(n: int, vec: np.ndarray) -> None:
        if observers and (n % stride == 0 or n == n_total):
            s = State8(vec)
            for obs in observers:
                obs(n, n * h, s)

    evals = 0
    step = 0
    start = time.perf_counter()

    def failed(reason: str) -> TrajectoryResult:
        return TrajectoryResult(
            final=None,
            steps=step - 1 if step > 0 else 0,
            evaluations=evals,
            seconds=time.perf_counter() - start,
            status="failed",
            failure=reason,
            failed_at_step=step,
        )

    try:
        np_guard = np.errstate(over="ignore", invalid="ignore")
        np_guard.__enter__()
        if observers:
            for obs in observers:
                obs(0, 0.0, u0)
        if n_total == 0:
            return TrajectoryResult(u0, 0, 0, time.perf_counter() - start, "ok")

        if method == "sei":
            b0 = cfg.linear_part.b0
            field = cfg.field
            prop_h = cfg.propagator(h)
            prop_2h = cfg.propagator(2.0 * h)
            two_h = 2.0 * h
            step = 1
            u_prev = np.array(u0.vec)
            f0 = _remainder_vec(field, b0, u_prev)
            evals += 1
            u_curr = prop_h.apply(u_prev + h * f0)
            if not np.isfinite(u_curr).all():
                return failed("non-finite state")
            notify(1, u_curr)
            for n in range(2, n_total + 1):
                step = n
                f = _remainder_vec(field, b0, u_curr)
                evals += 1
                u_next = prop_2h.apply(u_prev) + two_h * prop_h.apply(f)
                if not np.isfinite(u_next).all():
                    return failed("non-finite state")
                u_prev = u_curr
                u_curr = u_next
                notify(n, u_curr)
            final = u_curr
        else:
            field = cfg.field
            u = np.array(u0.vec)
            for n in range(1, n_total + 1):
                step = n
                k1 = _rhs_vec(field, u)
                k2 = _rhs_vec(field, u + h * k1)
                evals += 2
                u = u + 0.5 * h * (k1 + k2)
                if not np.isfinite(u).all():
                    return failed("non-finite state")
                notify(n, u)
            final = u
    except FieldDomainError as exc:
        return failed(f"field domain error: {exc}")

    return TrajectoryResult(
        final=State8(final),
        steps=n_total,
        evaluations=evals,
        seconds=time.perf_counter() - start,
        status="ok",
    )
