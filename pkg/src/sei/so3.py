"""Closed-form matrix functions of the frozen magnetic generator.

The linear part of the spacetime equations of motion is built from the
skew-symmetric 3x3 matrix ``S = hat(b0)`` of the magnetic field at the
linearization point.  Everything the integrator needs from it has a closed
Rodrigues form:

    exp(t S)  = I + sin(t*theta)/theta * S + (1 - cos(t*theta))/theta^2 * S^2
    phi1(t S) = I + (1 - cos(t*theta))/(t*theta^2) * S
                  + (1 - sin(t*theta)/(t*theta))/theta^2 * S^2

with ``theta = |b0|`` and ``phi1(A) = int_0^1 exp(sigma A) dsigma``.  Below
the small-angle threshold both switch to series coefficients: the
trigonometric forms lose ~(t*theta)^-1 * ulp to cancellation there, while
the truncated series is accurate to machine precision.

The full step propagator is the 8x8 block map

    (x, tbar, v, gamma) -> (x + h*phi1(hS) v,  tbar + h*gamma,  exp(hS) v,  gamma)

which is never materialized as a matrix; :class:`LinearPropagator` applies
it blockwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .state import State8

# Switch point between the trigonometric and series coefficient branches.
SMALL_ANGLE = 1e-4

_IDENTITY3 = np.eye(3)
_IDENTITY3.flags.writeable = False


def hat(b) -> np.ndarray:
    """Skew matrix of a 3-vector, oriented so that ``hat(b) @ v == cross(v, b)``."""
    b1, b2, b3 = float(b[0]), float(b[1]), float(b[2])
    return np.array([
        [0.0, b3, -b2],
        [-b3, 0.0, b1],
        [b2, -b1, 0.0],
    ])


@dataclass(frozen=True, eq=False)
class LinearPart:
    """Frozen linearization data: field vector b0, its norm, and S, S^2.

    Built once per trajectory (the linearization point is fixed for the whole
    integration) and safe to share between threads: all members are read-only.
    """

    b0: np.ndarray
    theta: float
    s: np.ndarray
    s2: np.ndarray

    @classmethod
    def from_b(cls, b0) -> "LinearPart":
        b0 = np.array(b0, dtype=float)
        if b0.shape != (3,):
            raise ValueError(f"b0 must be a 3-vector, got shape {b0.shape}")
        if not np.isfinite(b0).all():
            raise ValueError("b0 must be finite")
        s = hat(b0)
        s2 = s @ s
        for arr in (b0, s, s2):
            arr.flags.writeable = False
        return cls(b0=b0, theta=float(np.linalg.norm(b0)), s=s, s2=s2)

    @classmethod
    def from_field(cls, field, x0) -> "LinearPart":
        """Linearize ``field`` at the point ``x0``."""
        return cls.from_b(field.B(np.asarray(x0, dtype=float)))


def _exp_coeffs_trig(t: float, theta: float) -> tuple[float, float]:
    z = t * theta
    return math.sin(z) / theta, (1.0 - math.cos(z)) / (theta * theta)


def _exp_coeffs_series(t: float, theta: float) -> tuple[float, float]:
    # Next omitted terms are O((t*theta)^4) relative, below machine epsilon
    # for |t*theta| < SMALL_ANGLE.
    z2 = (t * theta) ** 2
    return t * (1.0 - z2 / 6.0), t * t * (0.5 - z2 / 24.0)


def _phi1_coeffs_trig(t: float, theta: float) -> tuple[float, float]:
    z = t * theta
    return (1.0 - math.cos(z)) / (t * theta * theta), (1.0 - math.sin(z) / z) / (theta * theta)


def _phi1_coeffs_series(t: float, theta: float) -> tuple[float, float]:
    z2 = (t * theta) ** 2
    return t * (0.5 - z2 / 24.0), t * t * (1.0 / 6.0 - z2 / 120.0)


def exp_so3(t: float, lp: LinearPart) -> np.ndarray:
    """Rotation ``exp(t S)`` evaluated in closed form."""
    if abs(t * lp.theta) < SMALL_ANGLE:
        a, b = _exp_coeffs_series(t, lp.theta)
    else:
        a, b = _exp_coeffs_trig(t, lp.theta)
    return _IDENTITY3 + a * lp.s + b * lp.s2


def phi1_so3(t: float, lp: LinearPart) -> np.ndarray:
    """First phi-function ``phi1(t S) = int_0^1 exp(sigma t S) dsigma``."""
    if abs(t * lp.theta) < SMALL_ANGLE:
        a, b = _phi1_coeffs_series(t, lp.theta)
    else:
        a, b = _phi1_coeffs_trig(t, lp.theta)
    return _IDENTITY3 + a * lp.s + b * lp.s2


class LinearPropagator:
    """Exact flow of the frozen linear part over a fixed step.

    Precomputes ``exp(h S)`` and ``h * phi1(h S)`` so repeated applications
    cost two 3x3 mat-vecs.  The block structure (identity position block,
    untouched gamma) is exploited directly instead of forming an 8x8 matrix.
    """

    __slots__ = ("h", "rot", "drift")

    def __init__(self, h: float, lp: LinearPart):
        if not math.isfinite(h):
            raise ValueError("step must be finite")
        self.h = float(h)
        self.rot = exp_so3(self.h, lp)
        self.drift = self.h * phi1_so3(self.h, lp)

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Apply the block map to a raw length-8 vector."""
        out = np.empty(8)
        v = u[4:7]
        out[0:3] = u[0:3] + self.drift @ v
        out[3] = u[3] + self.h * u[7]
        out[4:7] = self.rot @ v
        out[7] = u[7]
        return out


def exp_hl_apply(h: float, lp: LinearPart, u: State8) -> State8:
    """Image of a state under the step propagator of the frozen linear part.

    Position block: ``x <- x + h*phi1(hS) v``, ``tbar <- tbar + h*gamma``.
    Velocity block: ``v <- exp(hS) v``, ``gamma`` untouched.
    """
    return State8(LinearPropagator(h, lp).apply(u.vec))
