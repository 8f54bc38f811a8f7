"""Discrete space-time white noise and stochastic convolution.

Each cell ``(n, j)`` of the grid carries an independent ``N(0, dt*dx)``
increment.  Rows are drawn from a Philox stream keyed by ``(seed, n)`` so any
time row can be regenerated on its own.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circle_kernel import circle_kernel
from .grid import GridSpec

SEED_MASK = (1 << 64) - 1


def row_generator(seed: int, row: int) -> np.random.Generator:
    key = (int(seed) & SEED_MASK) | (int(row) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def noise_row(spec: GridSpec, seed: int, row: int) -> np.ndarray:
    """Increments of time row ``row``; identical to ``generate(...)[row]``."""
    z = row_generator(seed, row).standard_normal(spec.nx)
    return z * np.sqrt(spec.cell_area)


@dataclass
class NoiseGrid:
    spec: GridSpec
    seed: int | None
    increments: np.ndarray  # shape (nt, nx)
    # unshifted increments and the accumulated shift density, if shifted
    origin: tuple | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        shape = (self.spec.nt, self.spec.nx)
        if self.increments.shape != shape:
            raise ValueError(
                f"increments shape {self.increments.shape} != {shape}")

    def cell(self, n: int, j: int) -> float:
        return float(self.increments[n, j])

    def normalized(self) -> np.ndarray:
        return self.increments / np.sqrt(self.spec.cell_area)

    def coarsen(self, factor: int = 2) -> "NoiseGrid":
        """Sum ``factor x factor`` blocks of cells onto the coarser grid."""
        nt, nx = self.spec.nt, self.spec.nx
        if nt % factor or nx % factor:
            raise ValueError("grid not divisible by the coarsening factor")
        coarse = GridSpec(self.spec.J, nx // factor, nt // factor)
        block = self.increments.reshape(nt // factor, factor, nx // factor,
                                        factor).sum(axis=(1, 3))
        return NoiseGrid(coarse, self.seed, block)

    def masked(self, keep: np.ndarray) -> "NoiseGrid":
        return NoiseGrid(self.spec, self.seed,
                         np.where(keep, self.increments, 0.0))

    @classmethod
    def zeros(cls, spec: GridSpec) -> "NoiseGrid":
        return cls(spec, None, np.zeros((spec.nt, spec.nx)))


@dataclass
class DriftShift:
    """Shift density ``h`` per cell; row ``n`` may only use the field up to
    time row ``n`` (the solver builds it in that order)."""
    h_values: np.ndarray


def generate(spec: GridSpec, seed: int) -> NoiseGrid:
    inc = np.empty((spec.nt, spec.nx))
    for n in range(spec.nt):
        inc[n] = noise_row(spec, seed, n)
    return NoiseGrid(spec, int(seed), inc)


def generate_fine(spec: GridSpec, seed: int, levels: int) -> list[NoiseGrid]:
    """Noise on ``spec`` refined ``levels`` times, and all its coarsenings.

    Returns ``[coarsest, ..., finest]`` where the coarsest lives on ``spec``.
    """
    fine_spec = spec
    for _ in range(levels):
        fine_spec = fine_spec.refined(2)
    grids = [generate(fine_spec, seed)]
    for _ in range(levels):
        grids.append(grids[-1].coarsen(2))
    return grids[::-1]


def shift(noise: NoiseGrid, shift: DriftShift | np.ndarray | float) -> NoiseGrid:
    """Add ``h * dt * dx`` to every increment.

    Driving the solver with the result is the same as driving it with the
    original noise plus a drift ``g * h``.
    """
    h = shift.h_values if isinstance(shift, DriftShift) else shift
    h = np.asarray(h, dtype=float)
    if h.ndim and h.shape != noise.increments.shape:
        raise ValueError(
            f"shift shape {h.shape} != noise shape {noise.increments.shape}")
    # shifts are applied to the unshifted grid so that h then -h is exact
    base, total = noise.origin or (noise.increments, 0.0)
    total = total + h
    if not np.any(total):
        return NoiseGrid(noise.spec, noise.seed, base)
    return NoiseGrid(noise.spec, noise.seed,
                     base + total * noise.spec.cell_area, (base, total))


def convolution_weights(spec: GridSpec, t_index: int, x_index: int
                        ) -> np.ndarray:
    """``S_I(t - s, x - y)`` at the cell centres ``(s, y)`` of rows below
    ``t_index``; shape ``(t_index, nx)``.

    Centres sit exactly on the kernel's jump, so the kernel is evaluated in
    half-cell integer units where the comparison is exact.
    """
    if not 0 <= t_index <= spec.nt:
        raise ValueError("time index outside the grid")
    lag2 = 2 * (t_index - np.arange(t_index)) - 1
    off2 = 2 * (x_index - np.arange(spec.nx)) - 1
    return circle_kernel(lag2[:, None].astype(float),
                         off2[None, :].astype(float), 2.0 * spec.nx)


def stochastic_convolution(noise: NoiseGrid, rho, t_index: int, x_index: int
                           ) -> float:
    """Cell-sum approximation of ``int_0^t int S_I(t-s, x-y) rho W(dy ds)``.

    ``rho`` is a scalar or an array over cells (at least ``t_index`` rows).
    """
    w = convolution_weights(noise.spec, t_index, x_index)
    rho = np.asarray(rho, dtype=float)
    if rho.ndim:
        rho = rho[:t_index]
    return float(np.sum(w * rho * noise.increments[:t_index]))
