"""Leapfrog solver for the truncated stochastic wave equation on the circle.

Scheme (CFL number 1)::

    u[n+1, j] = u[n, j+1] + u[n, j-1] - u[n-1, j] + (s[n, j-1] + s[n, j]) / 2

where ``s[n, c]`` is the source carried by cell ``c`` of time row ``n``::

    s[n, c] = g(ubar) * W[n, c] + w_n * (ubar v 1/N)^(-alpha) * dt * dx
    ubar    = (u[n, c] + u[n, c+1]) / 2

with ``w_0 = 1/2`` (second-order start) and ``w_n = 1`` afterwards.  Spreading
each cell over both of its corner nodes makes the discrete Green's function
equal to 1/2 on exactly the cells that meet the open backward light cone, so
the solution is an exact cell-sum Duhamel formula (see ``analysis``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .circle_kernel import InitialData
from .grid import GridSpec
from .noise import NoiseGrid, noise_row

DEFAULT_TRUNCATION = 10**6
DEFAULT_TAU_LEVELS = (10, 100, 1000, 10**4, 10**5, 10**6)


@dataclass(frozen=True)
class ConstantG:
    value: float = 1.0

    def __call__(self, u):
        return np.full(np.shape(u), self.value) if np.ndim(u) else self.value

    @property
    def bounds(self):
        return self.value, self.value

    @property
    def lipschitz(self):
        return 0.0


@dataclass(frozen=True)
class SineG:
    """``g(u) = mean + amp * sin(freq * u)``; bounded and Lipschitz."""
    mean: float = 1.0
    amp: float = 0.5
    freq: float = 1.0

    def __call__(self, u):
        return self.mean + self.amp * np.sin(self.freq * np.asarray(u))

    @property
    def bounds(self):
        return self.mean - abs(self.amp), self.mean + abs(self.amp)

    @property
    def lipschitz(self):
        return abs(self.amp * self.freq)


@dataclass(frozen=True)
class ModelParams:
    alpha: float
    g: Callable = field(default_factory=ConstantG)
    trunc_level: int = DEFAULT_TRUNCATION
    drift_enabled: bool = True

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.trunc_level < 1:
            raise ValueError("truncation level N must be >= 1")
        c_g, C_g = self.g_bounds
        if not 0 < c_g <= C_g:
            raise ValueError(f"need 0 < c_g <= C_g, got {c_g}, {C_g}")

    @property
    def g_bounds(self) -> tuple[float, float]:
        return tuple(self.g.bounds)

    @property
    def floor(self) -> float:
        return 1.0 / self.trunc_level

    def check_g(self, lo: float = -50.0, hi: float = 50.0, n: int = 1000):
        """Spot-check the declared bounds of ``g`` on a lattice of values."""
        y = np.linspace(lo, hi, n)
        vals = np.asarray(self.g(y), dtype=float)
        c_g, C_g = self.g_bounds
        if vals.min() < c_g - 1e-12 or vals.max() > C_g + 1e-12:
            raise ValueError("g leaves its declared bounds")
        return True

    def drift(self, u):
        return np.maximum(u, self.floor) ** (-self.alpha)

    def replace(self, **kw) -> "ModelParams":
        d = dict(alpha=self.alpha, g=self.g, trunc_level=self.trunc_level,
                 drift_enabled=self.drift_enabled)
        d.update(kw)
        return ModelParams(**d)


@dataclass
class PathState:
    prev: np.ndarray
    curr: np.ndarray
    step_index: int
    dead: bool = False


@dataclass
class PathRecord:
    seed: int | None
    alpha: float
    hit: bool
    tau_hat: float
    tau_N_hats: dict
    minima: np.ndarray
    singular_integral: float
    singular_trace: np.ndarray  # cumulative over rows, length stop_index + 1
    stop_index: int
    stop_reason: str  # "hit" | "horizon" | "invalid"
    dt: float = math.nan
    invalid: bool = False
    log_weight: float = math.nan
    history: np.ndarray | None = None
    final: np.ndarray | None = None  # field on the stop row

    @property
    def min_over_run(self) -> float:
        return float(np.min(self.minima)) if self.minima.size else math.nan


def cell_average(u: np.ndarray) -> np.ndarray:
    """Field value attached to cell ``c``: mean of nodes ``c`` and ``c+1``."""
    return 0.5 * (u + np.roll(u, -1, axis=-1))


def cell_sources(u, W, params: ModelParams, spec: GridSpec,
                 row_weight: float = 1.0) -> np.ndarray:
    ubar = cell_average(u)
    s = params.g(ubar) * W
    if params.drift_enabled:
        s = s + row_weight * spec.cell_area * params.drift(ubar)
    return s


def node_sources(s: np.ndarray) -> np.ndarray:
    return 0.5 * (s + np.roll(s, 1, axis=-1))


def _first(u0, u1, W, params, spec):
    src = node_sources(cell_sources(u0, W, params, spec, 0.5))
    lap = np.roll(u0, -1, axis=-1) + np.roll(u0, 1, axis=-1)
    return 0.5 * lap + spec.dt * u1 + src


def _leapfrog(prev, curr, W, params, spec):
    src = node_sources(cell_sources(curr, W, params, spec))
    return np.roll(curr, -1, axis=-1) + np.roll(curr, 1, axis=-1) - prev + src


def first_step_init(init: InitialData, params: ModelParams, spec: GridSpec,
                    noise: NoiseGrid) -> PathState:
    u0 = init.u0.copy()
    u1 = _first(u0, init.u1, noise.increments[0], params, spec)
    return PathState(u0, u1, 1)


def step(state: PathState, params: ModelParams, noise: NoiseGrid,
         spec: GridSpec) -> PathState:
    """Advance one time step; the input state is left untouched."""
    if state.dead:
        raise RuntimeError("cannot step a path in the cemetery state")
    n = state.step_index
    if n + 1 > spec.nt:
        raise RuntimeError("stepping past the horizon")
    nxt = _leapfrog(state.prev, state.curr, noise.increments[n], params, spec)
    return PathState(state.curr, nxt, n + 1)


def _row_singular(u, params, spec):
    ubar = cell_average(u)
    return spec.cell_area * np.sum(params.drift(ubar) ** 2, axis=-1)


def run_batch(params: ModelParams, init: InitialData, spec: GridSpec,
              seeds: Sequence[int] | None = None, hit_level: float = 0.0,
              noises: Sequence[NoiseGrid] | None = None,
              record_history: bool = False,
              tau_levels: Sequence[int] = DEFAULT_TAU_LEVELS
              ) -> list[PathRecord]:
    """March several independent paths at once.

    Each path stops at the first row whose spatial minimum is ``<= hit_level``
    (cemetery), at a non-finite value (invalid), or at the horizon.  Results
    do not depend on which other paths share the batch.
    """
    if noises is None:
        if seeds is None:
            raise ValueError("need seeds or explicit noise grids")
        seeds = [int(s) for s in seeds]
    else:
        seeds = [nz.seed for nz in noises] if seeds is None else list(seeds)
        if len(noises) != len(seeds):
            raise ValueError("seeds and noises differ in length")
    if init.nx != spec.nx:
        raise ValueError("initial data does not match the grid")
    B, nx, nt = len(seeds), spec.nx, spec.nt
    levels = sorted(int(N) for N in tau_levels)

    def row(n, idx):
        if noises is not None:
            return np.stack([noises[b].increments[n] for b in idx])
        return np.stack([noise_row(spec, seeds[b], n) for b in idx])

    minima = np.full((B, nt + 1), np.nan)
    sing = np.zeros((B, nt + 1))
    tau_N = np.full((B, len(levels)), math.inf)
    stop = np.full(B, nt)
    reason = np.array(["horizon"] * B, dtype=object)
    hist = np.full((B, nt + 1, nx), np.nan) if record_history else None
    final = np.full((B, nx), np.nan)

    prev = np.tile(init.u0, (B, 1))
    alive = np.ones(B, dtype=bool)
    curr = None

    def observe(n, u, idx):
        with np.errstate(invalid="ignore"):
            finite = np.all(np.isfinite(u), axis=1)
            m = np.min(u, axis=1)
        minima[idx, n] = m
        final[idx] = u
        if hist is not None:
            hist[idx, n] = u
        for k, N in enumerate(levels):
            hitN = finite & (m <= 1.0 / N) & ~np.isfinite(tau_N[idx, k])
            tau_N[idx[hitN], k] = n * spec.dt
        bad = ~finite
        hit = finite & (m <= hit_level)
        stop[idx[bad | hit]] = n
        reason[idx[bad]] = "invalid"
        reason[idx[hit]] = "hit"
        alive[idx[bad | hit]] = False

    idx = np.arange(B)
    observe(0, prev, idx)
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(nt):
            idx = np.flatnonzero(alive)
            if idx.size == 0:
                break
            W = row(n, idx)
            u = prev[idx] if n == 0 else curr[idx]
            sing[idx, n + 1] = sing[idx, n] + _row_singular(u, params, spec)
            if n == 0:
                nxt = _first(u, init.u1, W, params, spec)
                curr = np.empty_like(prev)
            else:
                nxt = _leapfrog(prev[idx], u, W, params, spec)
                prev[idx] = u
            curr[idx] = nxt
            observe(n + 1, nxt, idx)

    out = []
    for b in range(B):
        k = int(stop[b])
        r = reason[b]
        out.append(PathRecord(
            seed=seeds[b],
            alpha=params.alpha,
            hit=(r == "hit"),
            tau_hat=k * spec.dt if r == "hit" else math.inf,
            tau_N_hats={N: float(tau_N[b, i]) for i, N in enumerate(levels)},
            minima=minima[b, :k + 1].copy(),
            singular_integral=float(sing[b, k]),
            singular_trace=sing[b, :k + 1].copy(),
            stop_index=k,
            stop_reason=r,
            dt=spec.dt,
            invalid=(r == "invalid"),
            history=hist[b, :k + 1].copy() if hist is not None else None,
            final=final[b].copy(),
        ))
    return out


def run_path(params: ModelParams, init: InitialData, spec: GridSpec,
             seed: int | None = None, hit_level: float = 0.0,
             noise: NoiseGrid | None = None, record_history: bool = False,
             tau_levels: Sequence[int] = DEFAULT_TAU_LEVELS) -> PathRecord:
    """Single path; same numbers as the corresponding entry of a batch."""
    noises = [noise] if noise is not None else None
    seeds = [seed] if seed is not None or noise is None else None
    return run_batch(params, init, spec, seeds=seeds, hit_level=hit_level,
                     noises=noises, record_history=record_history,
                     tau_levels=tau_levels)[0]
