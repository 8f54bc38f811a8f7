"""Girsanov densities for removing (or adding) the singular drift.

For a drift-free path ``v`` driven by noise ``W`` the weight

    exp( sum h W  -  1/2 sum h^2 dt dx ),   h = h(v) = v^-alpha / g(v)

summed over the cells before the stopped horizon turns expectations over
drift-free paths into expectations over drifted ones.  ``h`` on row ``n`` is
built from the field on row ``n`` and paired with that row's increments, so
it is predictable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .noise import NoiseGrid
from .solver import ModelParams, PathRecord, cell_average


@dataclass(frozen=True)
class GirsanovWeight:
    log_density: float
    novikov_half_integral: float
    stop_time_used: float
    stop_index: int = 0

    @property
    def density(self) -> float:
        return math.exp(self.log_density)


@dataclass(frozen=True)
class StopSpec:
    m: float
    T: float

    def __post_init__(self):
        if not (self.m > 0 and self.T > 0):
            raise ValueError("integrability budget m and horizon T must be > 0")


@dataclass(frozen=True)
class ReweightResult:
    estimate: float
    stderr: float
    ess: float
    low_ess: bool


def drift_shift_h(r, params: ModelParams):
    """``h(r) = r^-alpha / g(r)`` for ``r > 0`` and ``h(0) = 0``."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("h(r) is only defined for r >= 0")
    with np.errstate(divide="ignore"):
        h = np.where(r > 0, r ** (-params.alpha) / params.g(r), 0.0)
    return float(h) if h.ndim == 0 else h


def shift_field(history: np.ndarray, params: ModelParams, n_rows: int
                ) -> np.ndarray:
    """Per-cell shift density for rows ``0 .. n_rows-1`` of a drift-free path.

    Matches the drift carried by the solver cell by cell: the cell value is
    floored at ``1/N`` and the first row carries half weight.
    """
    if history.shape[0] < n_rows:
        raise ValueError("field history shorter than the requested stop")
    ubar = cell_average(history[:n_rows])
    # same as drift_shift_h(ubar) wherever the floor is inactive
    h = params.drift(ubar) / params.g(ubar)
    if n_rows:
        h[0] *= 0.5
    return h


def exponential_martingale(h, noise: NoiseGrid, n_rows: int) -> tuple[float, float]:
    """``(sum h W, 1/2 sum h^2 dt dx)`` over the first ``n_rows`` rows."""
    if n_rows > noise.spec.nt:
        raise ValueError("stop beyond the noise horizon")
    W = noise.increments[:n_rows]
    h = np.asarray(h, dtype=float)
    if h.ndim == 2:
        h = h[:n_rows]
    h = np.broadcast_to(h, W.shape)
    linear = float(np.sum(h * W))
    half = 0.5 * float(np.sum(h * h)) * noise.spec.cell_area
    return linear, half


def stopped_horizon_index(record: PathRecord, stop: StopSpec) -> int:
    n_T = int(math.floor(stop.T / record.dt + 1e-9))
    n = min(record.stop_index, n_T)
    over = np.flatnonzero(record.singular_trace > stop.m)
    if over.size:
        n = min(n, int(over[0]))
    return n


def stopped_horizon(record: PathRecord, stop: StopSpec) -> float:
    """Grid version of ``tau ^ alpha_m ^ T`` for one path."""
    return stopped_horizon_index(record, stop) * record.dt


def log_density(record: PathRecord, noise: NoiseGrid, stop: StopSpec,
                params: ModelParams) -> GirsanovWeight:
    """Density of the drifted law against the drift-free one along ``record``.

    ``record`` must be a drift-free path with its field history.
    """
    if record.history is None:
        raise ValueError("log_density needs the path's field history")
    dt = noise.spec.dt
    n = stopped_horizon_index(record, stop)
    if record.history.shape[0] < n + 1 and n > 0:
        raise ValueError("field history shorter than the stopped horizon")
    h = shift_field(record.history, params, n)
    linear, half = exponential_martingale(h, noise, n)
    return GirsanovWeight(linear - half, half, n * dt, n)


def constant_shift_weight(K: float, noise: NoiseGrid, n_rows: int | None = None
                          ) -> GirsanovWeight:
    n = noise.spec.nt if n_rows is None else n_rows
    linear, half = exponential_martingale(K, noise, n)
    return GirsanovWeight(linear - half, half, n * noise.spec.dt, n)


def reweight_estimate(values, log_weights) -> ReweightResult:
    """Importance-sampling mean ``sum F_i exp(l_i) / n`` with its standard error.

    Weights are exponentiated after subtracting the largest log weight.
    """
    F = np.asarray(values, dtype=float)
    lw = np.asarray([w.log_density if isinstance(w, GirsanovWeight) else w
                     for w in log_weights], dtype=float)
    if F.shape != lw.shape or F.ndim != 1 or F.size == 0:
        raise ValueError("need one functional value per weight")
    shift = float(lw.max())
    w = np.exp(lw - shift)
    n = F.size
    with np.errstate(over="ignore"):
        scale = float(np.exp(shift))
    est = scale * float(np.mean(F * w))
    se = scale * float(np.std(F * w, ddof=1)) / math.sqrt(n) if n > 1 else math.inf
    ess = float(w.sum() ** 2 / np.sum(w * w))
    low = ess < 10
    if low:
        warnings.warn(f"effective sample size {ess:.1f} below 10", RuntimeWarning)
    return ReweightResult(est, se, ess, low)
