"""Explicit symmetric exponential integrator for relativistic charged-particle motion.

The equations of motion are integrated in an 8-dimensional spacetime form:
the linear part (frozen magnetic generator at the initial position) is
propagated exactly through closed Rodrigues formulas, while the nonlinear
remainder enters through an explicit, time-reversible two-step recursion
with one field evaluation per step.  A trapezoidal Runge-Kutta baseline, a
validated reference solver and an experiment harness (convergence order,
work counts, long-time energy drift) are included, plus a small CLI.
"""

from .dynamics import (
    AXIS_GUARD,
    BenchmarkField,
    FieldDomainError,
    FieldModel,
    UniformField,
    ZeroField,
    field_from_config,
    from_momentum,
    hamiltonian,
    initial_condition,
    minkowski_defect,
    nonlinear_remainder,
    state_derivative,
)
from .harness import (
    ExperimentSpec,
    H_LIST_DEFAULT,
    SLOPE_WINDOW,
    convergence_study,
    err_u,
    experiment_from_config,
    fit_slope,
    hamiltonian_study,
    max_rel_err,
    read_rows,
    resolve_ic,
    timing_study,
    write_rows,
)
from .integrators import (
    PairState,
    StepperConfig,
    TrajectoryResult,
    heun_step,
    integrate,
    reference_solve,
    sei_map,
    sei_start,
    sei_step,
)
from .so3 import LinearPart, LinearPropagator, exp_hl_apply, exp_so3, hat, phi1_so3
from .state import State8

__version__ = "0.1.0"

__all__ = [
    "AXIS_GUARD",
    "BenchmarkField",
    "ExperimentSpec",
    "FieldDomainError",
    "FieldModel",
    "H_LIST_DEFAULT",
    "LinearPart",
    "LinearPropagator",
    "PairState",
    "SLOPE_WINDOW",
    "State8",
    "StepperConfig",
    "TrajectoryResult",
    "UniformField",
    "ZeroField",
    "convergence_study",
    "err_u",
    "exp_hl_apply",
    "exp_so3",
    "experiment_from_config",
    "field_from_config",
    "fit_slope",
    "from_momentum",
    "hamiltonian",
    "hamiltonian_study",
    "hat",
    "heun_step",
    "initial_condition",
    "integrate",
    "max_rel_err",
    "minkowski_defect",
    "nonlinear_remainder",
    "phi1_so3",
    "read_rows",
    "reference_solve",
    "resolve_ic",
    "sei_map",
    "sei_start",
    "sei_step",
    "state_derivative",
    "timing_study",
    "write_rows",
]
