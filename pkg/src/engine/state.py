#!/usr/bin/env python3
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True, eq=False)
class StateVector:
    """
    Heliocentric J2000 ecliptic state.

    r in km, v in km/s, m in kg (None for bodies), t in MJD.
    """

    r: np.ndarray
    v: np.ndarray
    t: float
    m: Optional[float] = None

    def __post_init__(self) -> None:
        r = np.array(self.r, dtype=float).reshape(3)
        v = np.array(self.v, dtype=float).reshape(3)
        r.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "t", float(self.t))
        if self.m is not None:
            object.__setattr__(self, "m", float(self.m))

    # -------------------------------------------------------------------------
    # Derived quantities
    # -------------------------------------------------------------------------
    @property
    def radius(self) -> float:
        return float(np.linalg.norm(self.r))

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.v))

    def specific_energy(self, mu: float) -> float:
        return 0.5 * self.speed**2 - mu / self.radius

    def angular_momentum(self) -> np.ndarray:
        return np.cross(self.r, self.v)

    # -------------------------------------------------------------------------
    # Builders
    # -------------------------------------------------------------------------
    def with_mass(self, m: Optional[float]) -> "StateVector":
        return StateVector(self.r, self.v, self.t, m)

    def vector(self) -> np.ndarray:
        """Flat [r, v, m] array for integrators."""
        if self.m is None:
            raise ValueError("State has no mass")
        return np.concatenate([self.r, self.v, [self.m]])

    @staticmethod
    def from_vector(y: np.ndarray, t: float) -> "StateVector":
        return StateVector(y[0:3], y[3:6], t, float(y[6]))

    def __repr__(self) -> str:
        mass = "unset" if self.m is None else f"{self.m:.6f} kg"
        return (
            f"StateVector(t={self.t:.6f}, r={np.array2string(self.r, precision=3)}, "
            f"v={np.array2string(self.v, precision=6)}, m={mass})"
        )
