"""Spacetime state container shared by the kernel and integrator modules.

The eight real coordinates are laid out as one flat vector::

    [x1, x2, x3, tbar, v1, v2, v3, gamma]

`x` is the position, `tbar` the lab time, `v` the momentum (equal to the
spatial part of the 4-velocity in these units) and `gamma` the relativistic
factor.  The container itself enforces nothing beyond shape: constructors
such as :func:`sei.dynamics.from_momentum` are responsible for physical
consistency (``gamma == sqrt(1 + |v|^2)``), and raw non-physical vectors are
legitimate inputs for the linear kernels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class State8:
    """Immutable 8-component spacetime state (position block + velocity block)."""

    vec: np.ndarray

    def __post_init__(self) -> None:
        vec = np.array(self.vec, dtype=float)
        if vec.shape != (8,):
            raise ValueError(f"state vector must have shape (8,), got {vec.shape}")
        vec.flags.writeable = False
        object.__setattr__(self, "vec", vec)

    @classmethod
    def of(cls, x, tbar: float, v, gamma: float) -> "State8":
        """Assemble a state from its named components."""
        vec = np.empty(8)
        vec[0:3] = x
        vec[3] = tbar
        vec[4:7] = v
        vec[7] = gamma
        return cls(vec)

    @property
    def x(self) -> np.ndarray:
        return self.vec[0:3]

    @property
    def tbar(self) -> float:
        return float(self.vec[3])

    @property
    def v(self) -> np.ndarray:
        return self.vec[4:7]

    @property
    def gamma(self) -> float:
        return float(self.vec[7])

    @property
    def y(self) -> np.ndarray:
        """Position block (x, tbar), the first four components."""
        return self.vec[0:4]

    @property
    def u(self) -> np.ndarray:
        """Velocity block (v, gamma), the last four components."""
        return self.vec[4:8]

    def isfinite(self) -> bool:
        return bool(np.isfinite(self.vec).all())

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        x, v = self.x, self.v
        return (
            f"State8(x=({x[0]:.6g}, {x[1]:.6g}, {x[2]:.6g}), tbar={self.tbar:.6g}, "
            f"v=({v[0]:.6g}, {v[1]:.6g}, {v[2]:.6g}), gamma={self.gamma:.6g})"
        )
