"""Physical model: states, electromagnetic fields, remainder term, invariants.

In proper time the spacetime coordinates (x, tbar, v, gamma) obey

    dx/dtau    = v
    dtbar/dtau = gamma
    dv/dtau    = gamma * E(x) + v x B(x)
    dgamma/dtau = E(x) . v

The equations are split into a linear part frozen at the initial position
and the nonlinear remainder handled by :func:`nonlinear_remainder`.  The
same dynamics can be written with a purely imaginary lab time and
relativistic factor (t = i*tbar, w = i*gamma); that complex formulation is
kept here as a testing oracle (see the "complex coordinates" section) while
all production code stays real.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod

import numpy as np

from .state import State8

# Squared distance from the x3-axis below which the electrostatic potential
# of the benchmark field is treated as singular.
AXIS_GUARD = 1e-24


class FieldDomainError(Exception):
    """Raised when a field evaluator is queried outside its domain."""


class FieldModel(ABC):
    """Static electromagnetic field evaluated pointwise.

    Implementations must be pure: no mutable state, so evaluators can be
    shared freely between concurrent trajectory workers.  ``V`` is optional;
    fields that provide it must satisfy ``E = -grad V`` and advertise it via
    ``has_potential``.
    """

    has_potential: bool = False

    @abstractmethod
    def B(self, x: np.ndarray) -> np.ndarray:
        """Magnetic field at position x."""

    @abstractmethod
    def E(self, x: np.ndarray) -> np.ndarray:
        """Electric field at position x."""

    def V(self, x: np.ndarray) -> float:
        """Scalar potential at position x (where available)."""
        raise NotImplementedError(f"{type(self).__name__} has no scalar potential")


class ZeroField(FieldModel):
    """Field-free space; the motion reduces to a straight drift."""

    has_potential = True

    def B(self, x):
        return np.zeros(3)

    def E(self, x):
        return np.zeros(3)

    def V(self, x):
        return 0.0


class UniformField(FieldModel):
    """Constant magnetic and electric field with linear potential V = -E.x."""

    has_potential = True

    def __init__(self, B, E=(0.0, 0.0, 0.0)):
        self._B = np.array(B, dtype=float)
        self._E = np.array(E, dtype=float)
        if self._B.shape != (3,) or self._E.shape != (3,):
            raise ValueError("B and E must be 3-vectors")
        self._B.flags.writeable = False
        self._E.flags.writeable = False

    def B(self, x):
        return self._B

    def E(self, x):
        return self._E

    def V(self, x):
        return -float(self._E[0] * x[0] + self._E[1] * x[1] + self._E[2] * x[2])


class BenchmarkField(FieldModel):
    """Curved magnetic field plus an inverse-distance electrostatic potential.

        B(x) = (cos x2 - x1, 1 + sin x3, cos x1 + x3)
        V(x) = (x1^2 + x2^2)^(-1/2),   E = -grad V

    The potential is singular on the x3-axis; evaluating V or E there raises
    :class:`FieldDomainError` instead of returning Inf, so a trajectory that
    strays onto the axis fails loudly.
    """

    has_potential = True

    def B(self, x):
        x1, x2, x3 = float(x[0]), float(x[1]), float(x[2])
        return np.array((math.cos(x2) - x1, 1.0 + math.sin(x3), math.cos(x1) + x3))

    def _r2(self, x) -> float:
        x1, x2 = float(x[0]), float(x[1])
        r2 = x1 * x1 + x2 * x2  # products, not **: overflow must give inf, not raise
        if r2 < AXIS_GUARD:
            raise FieldDomainError(
                f"potential singular on the x3-axis: x1^2+x2^2 = {r2:.3e} at x = {np.asarray(x)}"
            )
        return r2

    def E(self, x):
        scale = self._r2(x) ** -1.5
        return np.array((float(x[0]) * scale, float(x[1]) * scale, 0.0))

    def V(self, x):
        return self._r2(x) ** -0.5


def field_from_config(doc: dict) -> FieldModel:
    """Build a field from a configuration document.

    Schema: ``{"field": "paper" | "uniform" | "zero", "B": [b1,b2,b3],
    "E": [e1,e2,e3]}`` where B/E apply only to "uniform".  "paper" selects
    the built-in benchmark field.
    """
    if not isinstance(doc, dict):
        raise ValueError("field configuration must be a JSON object")
    name = doc.get("field", "paper")
    extras = set(doc) - {"field", "B", "E"}
    if extras:
        raise ValueError(f"unknown field configuration keys: {sorted(extras)}")
    if name == "paper":
        kind: FieldModel | None = BenchmarkField()
    elif name == "zero":
        kind = ZeroField()
    elif name == "uniform":
        return UniformField(doc.get("B", (0.0, 0.0, 0.0)), doc.get("E", (0.0, 0.0, 0.0)))
    else:
        raise ValueError(f"unknown field {name!r}; expected paper, uniform or zero")
    if "B" in doc or "E" in doc:
        raise ValueError('"B"/"E" are only valid for the uniform field')
    return kind


def from_momentum(x, tbar: float, p) -> State8:
    """Physical state from position, lab time and momentum; gamma = sqrt(1+|p|^2)."""
    p = np.asarray(p, dtype=float)
    gamma = math.sqrt(1.0 + float(p @ p))
    return State8.of(x, tbar, p, gamma)


#: Initial-condition presets used throughout the built-in studies.
IC_PRESETS = {
    "I": ((1.0 / 3.0, 0.25, 0.5), (0.4, 2.0 / 3.0, 1.0)),
    "II": ((0.0, 1.0, 0.1), (0.09, 0.05, 0.2)),
}


def initial_condition(name: str) -> State8:
    """One of the named initial-condition presets ("I" or "II")."""
    try:
        x, p = IC_PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown initial condition {name!r}; expected one of {sorted(IC_PRESETS)}")
    return from_momentum(x, 0.0, p)


def _remainder_vec(field: FieldModel, b0: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Remainder increment on a raw state vector, with B(x0) precomputed."""
    x = u[0:3]
    B = field.B(x)
    E = field.E(x)
    d1 = B[0] - b0[0]
    d2 = B[1] - b0[1]
    d3 = B[2] - b0[2]
    v1, v2, v3, g = u[4], u[5], u[6], u[7]
    out = np.zeros(8)
    out[4] = v2 * d3 - v3 * d2 + g * E[0]
    out[5] = v3 * d1 - v1 * d3 + g * E[1]
    out[6] = v1 * d2 - v2 * d1 + g * E[2]
    out[7] = E[0] * v1 + E[1] * v2 + E[2] * v3
    return out


def nonlinear_remainder(field: FieldModel, x0, s: State8) -> State8:
    """Nonlinear remainder after freezing the magnetic generator at x0.

    The position block of the increment is zero; the velocity block is
    ``(v x (B(x) - B(x0)) + gamma*E(x), E(x).v)``.
    """
    b0 = field.B(np.asarray(x0, dtype=float))
    return State8(_remainder_vec(field, b0, s.vec))


def _rhs_vec(field: FieldModel, u: np.ndarray) -> np.ndarray:
    """Full equations of motion on a raw state vector."""
    x = u[0:3]
    B = field.B(x)
    E = field.E(x)
    v1, v2, v3, g = u[4], u[5], u[6], u[7]
    out = np.empty(8)
    out[0] = v1
    out[1] = v2
    out[2] = v3
    out[3] = g
    out[4] = v2 * B[2] - v3 * B[1] + g * E[0]
    out[5] = v3 * B[0] - v1 * B[2] + g * E[1]
    out[6] = v1 * B[1] - v2 * B[0] + g * E[2]
    out[7] = E[0] * v1 + E[1] * v2 + E[2] * v3
    return out


def state_derivative(field: FieldModel, s: State8) -> State8:
    """Proper-time derivative of the full spacetime state."""
    return State8(_rhs_vec(field, s.vec))


def hamiltonian(field: FieldModel, s: State8) -> float:
    """Conserved energy V(x) + gamma of the exact flow."""
    if not field.has_potential:
        raise ValueError("field has no potential")
    return field.V(s.x) + s.gamma


def minkowski_defect(s: State8) -> float:
    """gamma^2 - |v|^2 - 1; zero along exact trajectories of physical states."""
    v = s.v
    return s.gamma**2 - float(v @ v) - 1.0


# --------------------------------------------------------------------------
# Complex coordinates (testing oracle)
#
# With t = i*tbar and w = i*gamma the state becomes the complex 8-vector
# (x, t, v, w) and the velocity-block dynamics are generated by the 4x4
# matrices below.  Production code never touches these; tests use them to
# confirm that the real formulation is an exact rewrite.
# --------------------------------------------------------------------------


def magnetic_generator(B) -> np.ndarray:
    """4x4 velocity-block generator of the magnetic force (real entries)."""
    b1, b2, b3 = float(B[0]), float(B[1]), float(B[2])
    return np.array([
        [0.0, b3, -b2, 0.0],
        [-b3, 0.0, b1, 0.0],
        [b2, -b1, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0],
    ])


def electric_generator(E) -> np.ndarray:
    """4x4 velocity-block generator of the electric force (imaginary entries)."""
    e = np.asarray(E, dtype=float)
    out = np.zeros((4, 4), dtype=complex)
    out[0:3, 3] = -1j * e
    out[3, 0:3] = 1j * e
    return out


def to_complex(s: State8) -> np.ndarray:
    """Complex coordinates (x, i*tbar, v, i*gamma) of a real state."""
    z = s.vec.astype(complex)
    z[3] *= 1j
    z[7] *= 1j
    return z


def from_complex(z: np.ndarray, tol: float = 1e-9) -> State8:
    """Real state from complex coordinates, checking the realness structure."""
    z = np.asarray(z, dtype=complex)
    drift = max(
        float(np.max(np.abs(z[[0, 1, 2, 4, 5, 6]].imag))),
        abs(z[3].real),
        abs(z[7].real),
    )
    if drift > tol:
        raise ValueError(f"complex state violates realness structure by {drift:.3e}")
    vec = z.real.copy()
    vec[3] = z[3].imag
    vec[7] = z[7].imag
    return State8(vec)


def complex_remainder(field: FieldModel, x0, z: np.ndarray) -> np.ndarray:
    """Remainder increment computed entirely in complex coordinates."""
    x = z[0:3].real
    G = (
        magnetic_generator(field.B(x))
        - magnetic_generator(field.B(np.asarray(x0, dtype=float)))
        + electric_generator(field.E(x))
    )
    out = np.zeros(8, dtype=complex)
    out[4:8] = G @ z[4:8]
    return out


def complex_rhs(field: FieldModel, z: np.ndarray) -> np.ndarray:
    """Full equations of motion in complex coordinates."""
    x = z[0:3].real
    G = magnetic_generator(field.B(x)) + electric_generator(field.E(x))
    out = np.empty(8, dtype=complex)
    out[0:4] = z[4:8]
    out[4:8] = G @ z[4:8]
    return out
