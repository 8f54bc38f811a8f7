"""Space-time grid for the periodic wave equation.

The time step is locked to the spatial step (CFL number 1).  Cell ``(n, j)``
is the rectangle ``[n*dt, (n+1)*dt) x [j*dx, (j+1)*dx)``; node ``(n, j)`` is
its lower-left corner ``(n*dt, j*dx)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_NX = 2**16


@dataclass(frozen=True)
class GridSpec:
    J: float
    nx: int
    nt: int

    def __post_init__(self):
        if not (self.J > 0 and math.isfinite(self.J)):
            raise ValueError(f"circle length must be positive, got {self.J}")
        if self.nx < 8:
            raise ValueError(f"need at least 8 spatial cells, got {self.nx}")
        if self.nt < 1:
            raise ValueError(f"need at least one time step, got {self.nt}")

    @classmethod
    def from_horizon(cls, J: float, nx: int, T: float) -> "GridSpec":
        """Build a grid whose horizon ``T`` is an integer number of steps."""
        dx = J / nx
        steps = T / dx
        nt = int(round(steps))
        if nt < 1 or abs(steps - nt) > 1e-9 * max(1.0, steps):
            raise ValueError(
                f"T={T} is not a whole number of steps dt=J/nx={dx}")
        return cls(J=float(J), nx=int(nx), nt=nt)

    @property
    def dx(self) -> float:
        return self.J / self.nx

    @property
    def dt(self) -> float:
        return self.dx

    @property
    def cfl(self) -> float:
        return self.dt / self.dx

    @property
    def T(self) -> float:
        return self.nt * self.dt

    @property
    def cell_area(self) -> float:
        return self.dt * self.dx

    def x(self) -> np.ndarray:
        return np.arange(self.nx) * self.dx

    def t(self) -> np.ndarray:
        return np.arange(self.nt + 1) * self.dt

    def time_index(self, t: float) -> int:
        """Snap a time onto the grid; raises if it is not (close to) a node."""
        k = t / self.dt
        n = int(round(k))
        if abs(k - n) > 1e-8 * max(1.0, abs(k)):
            raise ValueError(f"t={t} is not a grid time (dt={self.dt})")
        if n < 0 or n > self.nt:
            raise ValueError(f"t={t} outside [0, {self.T}]")
        return n

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(J=self.J, nx=self.nx * factor, nt=self.nt * factor)
