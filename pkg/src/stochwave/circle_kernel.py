"""Wave kernels on the line and on the circle, d'Alembert solutions and
light-cone geometry on the grid.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .grid import GridSpec

_SNAP_TOL = 1e-9


def wrap(x, J: float):
    """Reduce ``x`` into ``[0, J)``."""
    v = np.mod(x, J)
    # np.mod can return J itself for tiny negative inputs
    v = np.where(v >= J, 0.0, v)
    return float(v) if np.ndim(v) == 0 else v


@dataclass(frozen=True)
class CircleCoord:
    value: float
    J: float

    def __post_init__(self):
        object.__setattr__(self, "value", wrap(float(self.value), self.J))

    def node(self, grid: GridSpec) -> int:
        """Nearest grid node (index taken modulo nx)."""
        return int(round(self.value / grid.dx)) % grid.nx


@dataclass(frozen=True)
class LightCone:
    """Backward light cone ``{(s, y): |x - y| < t - s}`` of an apex ``(t, x)``.

    ``y`` is a point of the real line (unwrapped); use :func:`cone_members`
    for the circle picture, where copies ``y + kJ`` are counted separately.
    """
    apex_t: float
    apex_x: float

    def contains(self, s, y):
        return np.abs(self.apex_x - y) < self.apex_t - s


def line_kernel(t, x):
    """``S(t, x) = 1/2 * 1(|x| <= t)``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("wave kernel needs t >= 0")
    out = np.where(np.abs(x) <= t, 0.5, 0.0)
    return float(out) if out.ndim == 0 else out


def circle_kernel(t, x, J: float):
    """Periodised kernel ``S_I(t, x) = sum_n S(t, x + nJ)``.

    Only ``|n + floor(x/J)| <= ceil(t/J) + 1`` can contribute; the sum runs
    over that window for every entry (vectorised over ``t`` and ``x``).
    ``x + n*J`` is evaluated directly so points on the jump stay exact.
    """
    if J <= 0:
        raise ValueError("J must be positive")
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(t < 0):
        raise ValueError("wave kernel needs t >= 0")
    t, x = np.broadcast_arrays(t, x)
    nmax = int(math.ceil(float(t.max()) / J)) + 1 if t.size else 1
    n0 = np.floor(x / J)
    out = np.zeros(t.shape)
    for k in range(-nmax, nmax + 1):
        out += np.abs(x + (k - n0) * J) <= t
    out *= 0.5
    return float(out) if out.ndim == 0 else out


def kernel_space_integral(t: float, J: float) -> float:
    """``int_0^J S_I(t, x - y) dy``, which equals ``t`` for every ``J``."""
    if t < 0:
        raise ValueError("wave kernel needs t >= 0")
    if J <= 0:
        raise ValueError("J must be positive")
    return float(t)


def space_quadrature(t: float, J: float, x: float = 0.0, n: int = 10**4
                     ) -> float:
    """Midpoint-rule value of ``int_0^J S_I(t, x - y) dy`` with ``n`` points.

    The period is first cut at the kernel's jumps ``y = x -+ t (mod J)`` and
    the points are shared out between the pieces by length, so the rule is
    exact up to rounding for this piecewise-constant integrand.
    """
    cuts = np.unique(np.concatenate([[0.0, J], wrap(np.array([x - t, x + t]), J)]))
    lengths = np.diff(cuts)
    keep = lengths > 0
    cuts, lengths = cuts[:-1][keep], lengths[keep]
    counts = np.maximum(1, np.floor(n * lengths / J).astype(int))
    total = 0.0
    for a, L, k in zip(cuts, lengths, counts):
        y = a + (np.arange(k) + 0.5) * (L / k)
        total += float(np.sum(circle_kernel(t, x - y, J))) * (L / k)
    return total


@dataclass
class InitialData:
    """Position ``u0`` and velocity ``u1`` sampled on the ``nx`` grid nodes."""
    u0: np.ndarray
    u1: np.ndarray
    J: float
    c0: float = field(default=None)
    C0: float = field(default=None)

    def __post_init__(self):
        self.u0 = np.asarray(self.u0, dtype=float)
        self.u1 = np.asarray(self.u1, dtype=float)
        if self.u0.ndim != 1 or self.u0.shape != self.u1.shape:
            raise ValueError("u0 and u1 must be 1-D arrays of equal length")
        if self.c0 is None:
            self.c0 = float(self.u0.min())
        if self.C0 is None:
            self.C0 = float(self.u0.max())

    @property
    def nx(self) -> int:
        return self.u0.size

    @classmethod
    def constant(cls, grid: GridSpec, u0: float, u1: float = 0.0):
        return cls(np.full(grid.nx, float(u0)), np.full(grid.nx, float(u1)),
                   grid.J)

    @classmethod
    def cosine(cls, grid: GridSpec, mean: float = 0.0, amp: float = 1.0,
               mode: int = 1, u1: float = 0.0):
        x = grid.x()
        u0 = mean + amp * np.cos(2 * np.pi * mode * x / grid.J)
        return cls(u0, np.full(grid.nx, float(u1)), grid.J)

    def validate(self):
        """Check the positivity/boundedness assumptions on the initial data."""
        if not np.all(np.isfinite(self.u0)) or not np.all(np.isfinite(self.u1)):
            raise ValueError("initial data must be finite")
        if not 0 < self.c0 <= self.C0:
            raise ValueError(
                f"need 0 < c0 <= C0, got c0={self.c0}, C0={self.C0}")
        lo, hi = self.u0.min(), self.u0.max()
        if lo < self.c0 - 1e-12 or hi > self.C0 + 1e-12:
            raise ValueError(
                f"u0 range [{lo}, {hi}] violates declared [{self.c0}, {self.C0}]")
        return self

    def on(self, grid: GridSpec) -> "InitialData":
        """Resample onto a refined grid (nx must be a multiple of ours)."""
        if grid.nx == self.nx:
            return self
        if grid.nx % self.nx:
            raise ValueError("can only resample onto an integer refinement")
        xs_coarse = np.arange(self.nx + 1) * (self.J / self.nx)
        xs = grid.x()
        u0 = np.interp(xs, xs_coarse, np.append(self.u0, self.u0[0]))
        u1 = np.interp(xs, xs_coarse, np.append(self.u1, self.u1[0]))
        return InitialData(u0, u1, self.J, self.c0, self.C0)


def window_sum(values: np.ndarray, lo, hi) -> np.ndarray:
    """Sum ``values[k % n]`` over unwrapped integer ``k`` in ``[lo, hi]``.

    ``values`` may carry leading batch axes; the window runs along the last
    axis.  ``lo``/``hi`` broadcast against each other; empty windows give 0.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    lo = np.asarray(lo, dtype=np.int64)
    hi = np.asarray(hi, dtype=np.int64)
    prefix = np.concatenate(
        [np.zeros(values.shape[:-1] + (1,)), np.cumsum(values, axis=-1)],
        axis=-1)
    total = prefix[..., -1:]

    def upto(k):  # sum over unwrapped indices [0, k)
        q, r = np.divmod(k, n)
        return q * total + np.take(prefix, r, axis=-1)

    out = upto(hi + 1) - upto(lo)
    return np.where(hi >= lo, out, 0.0)


def _node_index(init: InitialData, x) -> int:
    if isinstance(x, CircleCoord):
        x = x.value
    dx = init.J / init.nx
    return int(round(wrap(float(x), init.J) / dx)) % init.nx


def _time_steps(init: InitialData, t: float) -> int:
    dx = init.J / init.nx
    m = int(round(t / dx))
    if abs(t / dx - m) > 1e-8 * max(1.0, t / dx):
        raise ValueError(f"t={t} is not a multiple of dx={dx}")
    return m


def dalembert_row(init: InitialData, m: int) -> np.ndarray:
    """Free wave solution at time ``m*dx`` on every node.

    Position part by exact shifts; velocity part ``int S_I(t, x-y) u1(y) dy``
    by the trapezoid rule over the wrapped interval ``[x - t, x + t]``.
    """
    nx = init.nx
    dx = init.J / nx
    i = np.arange(nx)
    pos = 0.5 * (init.u0[(i + m) % nx] + init.u0[(i - m) % nx])
    if m == 0:
        return pos
    s = window_sum(init.u1, i - m, i + m)
    s -= 0.5 * (init.u1[(i - m) % nx] + init.u1[(i + m) % nx])
    return pos + 0.5 * dx * s


def dalembert(init: InitialData, t: float, x, horizon: float | None = None
              ) -> float:
    """Free wave solution ``w(t, x)`` with the initial data of ``init``.

    ``t`` must be a multiple of the grid spacing and ``x`` is snapped to the
    nearest node.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if horizon is not None and t > horizon * (1 + 1e-12):
        raise ValueError(f"t={t} beyond horizon {horizon}")
    m = _time_steps(init, t)
    i = _node_index(init, x)
    return float(dalembert_row(init, m)[i])


def _snap(v: float) -> float:
    r = round(v)
    return float(r) if abs(v - r) < _SNAP_TOL * max(1.0, abs(v)) else v


def cone_rows(cone: LightCone, grid: GridSpec) -> np.ndarray:
    """Multiplicity of every cell inside the backward cone, shape (rows, nx).

    A cell belongs to the cone when its rectangle meets the open cone; copies
    of the cell at ``y + kJ`` are counted separately.  Row ``n`` covers
    ``[n dt, (n+1) dt)`` and only rows with ``n dt < apex_t`` appear.
    """
    dx = grid.dx
    x = float(cone.apex_x)
    n_rows = int(math.ceil(_snap(cone.apex_t / grid.dt)))
    n_rows = max(0, min(n_rows, grid.nt))
    out = np.zeros((n_rows, grid.nx), dtype=np.int64)
    for n in range(n_rows):
        r = cone.apex_t - n * grid.dt
        if r <= 0:
            continue
        lo = math.floor(_snap((x - r) / dx))
        hi = math.ceil(_snap((x + r) / dx)) - 1
        if hi < lo:
            continue
        idx = np.arange(lo, hi + 1) % grid.nx
        out[n] = np.bincount(idx, minlength=grid.nx)
    return out


def cone_members(cone: LightCone, grid: GridSpec) -> Counter:
    """Cells ``(time index, space index)`` in the cone, with multiplicity."""
    if cone.apex_t < 0 or cone.apex_t > grid.T * (1 + 1e-12):
        raise ValueError("apex time outside [0, T]")
    rows = cone_rows(cone, grid)
    n_idx, j_idx = np.nonzero(rows)
    return Counter({(int(n), int(j)): int(rows[n, j])
                    for n, j in zip(n_idx, j_idx)})


def grid_cone(grid: GridSpec, m: int, i: int) -> LightCone:
    """Cone with apex at node ``(m, i)``."""
    return LightCone(m * grid.dt, i * grid.dx)
