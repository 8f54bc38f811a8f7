"""Path diagnostics: Hölder exponents, the V + D + N decomposition, light-cone
drift integrals, the sector bound near a hitting point, dyadic level counts
and the spatial mean process.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .circle_kernel import InitialData, LightCone, cone_rows, dalembert_row
from .grid import GridSpec
from .noise import NoiseGrid
from .solver import ModelParams, cell_average


# --------------------------------------------------------------------------
# Hölder exponents

@dataclass
class HolderEstimate:
    beta_hat: float
    stderr: float
    lags_used: list
    direction: str
    p: float = 4.0
    constant: float = math.nan  # fitted prefactor of E|increment|^p, to the 1/p


def default_lags(n: int, count: int = 8) -> list[int]:
    hi = n // 8
    if hi < 2:
        return []
    lags = np.unique(np.round(np.geomspace(2, hi, count)).astype(int))
    return [int(v) for v in lags]


def _increments(a: np.ndarray, lag: int, direction: str) -> np.ndarray:
    if direction == "time":
        return a[..., lag:, :] - a[..., :-lag, :] if a.ndim > 1 \
            else a[lag:] - a[:-lag]
    if direction == "space":
        return np.roll(a, -lag, axis=-1) - a
    if direction == "joint":
        return np.roll(a[..., lag:, :], -lag, axis=-1) - a[..., :-lag, :]
    raise ValueError(f"unknown direction {direction!r}")


def holder_estimate(samples, direction: str = "time", lags=None, p: float = 4.0,
                    spacing: float = 1.0) -> HolderEstimate:
    """Fit ``log E|increment|^p = p*beta*log(lag) + c`` by least squares.

    ``samples`` is a 1-D series (time direction only) or an array whose last
    two axes are (time row, space node); leading axes are pooled.  NaN
    entries (rows after a path stopped) are ignored.
    """
    a = np.asarray(samples, dtype=float)
    if a.ndim == 1 and direction != "time":
        raise ValueError("1-D samples only support the time direction")
    n = a.shape[-1] if direction == "space" else \
        (a.shape[-2] if a.ndim > 1 else a.shape[0])
    lags = default_lags(n) if lags is None else sorted(int(v) for v in lags)
    if any(b <= c for b, c in zip(lags[1:], lags[:-1])):
        raise ValueError("lags must be strictly increasing")
    lags = [k for k in lags if 2 <= k <= n // 8]
    moments = []
    for k in lags:
        d = _increments(a, k, direction)
        moments.append(np.nanmean(np.abs(d) ** p))
    moments = np.asarray(moments)
    ok = np.isfinite(moments) & (moments > 0)
    lags = [k for k, good in zip(lags, ok) if good]
    if len(lags) < 4:
        raise ValueError(f"need at least 4 valid lags, got {len(lags)}")
    x = np.log(np.asarray(lags) * spacing)
    y = np.log(moments[ok])
    X = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    dof = len(x) - 2
    s2 = float(resid @ resid) / dof if dof > 0 else 0.0
    cov = s2 * np.linalg.inv(X.T @ X)
    return HolderEstimate(
        beta_hat=float(coef[1] / p),
        stderr=float(math.sqrt(cov[1, 1]) / p),
        lags_used=lags,
        direction=direction,
        p=p,
        constant=float(math.exp(coef[0] / p)),
    )


def fractional_brownian_motion(n: int, hurst: float, T: float = 1.0,
                               rng: np.random.Generator | None = None
                               ) -> np.ndarray:
    """Exact fBm on ``n + 1`` equispaced points of ``[0, T]`` by circulant
    embedding of the fractional Gaussian noise covariance."""
    if not 0 < hurst < 1:
        raise ValueError("Hurst index must lie in (0, 1)")
    rng = np.random.default_rng() if rng is None else rng
    k = np.arange(n + 1)
    gamma = 0.5 * (np.abs(k + 1) ** (2 * hurst) - 2 * k ** (2 * hurst)
                   + np.abs(k - 1) ** (2 * hurst))
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    eig = np.fft.fft(row).real
    if eig.min() < -1e-10 * eig.max():
        raise RuntimeError("circulant embedding is not non-negative definite")
    eig = np.clip(eig, 0, None)
    m = row.size
    z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    fgn = np.fft.fft(np.sqrt(eig / m) * z)[:n].real
    fgn *= (T / n) ** hurst
    return np.concatenate([[0.0], np.cumsum(fgn)])


# --------------------------------------------------------------------------
# cone sums and the decomposition

def cell_drift(history: np.ndarray, params: ModelParams) -> np.ndarray:
    """Drift density per cell as carried by the solver (first row halved)."""
    f = params.drift(cell_average(history))
    if f.shape[0]:
        f[0] *= 0.5
    return f


def cone_sums(F: np.ndarray, n_rows: int | None = None) -> np.ndarray:
    """``out[m, i] = sum`` of ``F[n, c]`` over the cells of the backward cone
    of node ``(m, i)``, i.e. ``n < m`` and ``c`` in ``[i-(m-n), i+(m-n)-1]``
    (unwrapped, so wrapped copies count again).  Rows ``0 .. n_rows-1``."""
    F = np.asarray(F, dtype=float)
    rows, nx = F.shape
    n_rows = rows + 1 if n_rows is None else n_rows
    prefix = np.concatenate([np.zeros((rows, 1)), np.cumsum(F, axis=1)], axis=1)
    total = prefix[:, -1:]
    i = np.arange(nx)
    out = np.zeros((n_rows, nx))
    for m in range(1, n_rows):
        k = (m - np.arange(m))[:, None]

        def upto(K):
            q, r = np.divmod(K, nx)
            return q * total[:m] + np.take_along_axis(prefix[:m], r, axis=1)

        out[m] = np.sum(upto(i + k) - upto(i - k), axis=0)
    return out


@dataclass
class DriftDecomposition:
    V: np.ndarray
    D: np.ndarray
    Nf: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.V + self.D + self.Nf


def _check_apex(history: np.ndarray, spec: GridSpec, apex) -> LightCone:
    if isinstance(apex, LightCone):
        cone = apex
    else:
        m, i = apex
        cone = LightCone(m * spec.dt, i * spec.dx)
    last = (history.shape[0] - 1) * spec.dt
    if cone.apex_t < 0 or cone.apex_t > last * (1 + 1e-12) + 1e-15:
        raise ValueError(f"apex time {cone.apex_t} outside recorded history")
    return cone


def drift_integral(history: np.ndarray, apex, params: ModelParams,
                   spec: GridSpec) -> float:
    """Cell-sum of ``(u v 1/N)^-alpha`` over the backward cone of ``apex``.

    ``apex`` is a :class:`LightCone` or a node ``(time index, space index)``.
    The first time row is a half-width cell in time and carries weight 1/2,
    which makes the sum exact (``t**2``) for a constant unit field.  Equals
    twice the drift part of the mild solution.
    """
    cone = _check_apex(history, spec, apex)
    mult = cone_rows(cone, spec)
    if mult.shape[0] == 0:
        return 0.0
    ubar = cell_average(history[:mult.shape[0]])
    inside = mult > 0
    if np.any(ubar[inside] <= params.floor):
        warnings.warn("field at or below the truncation floor inside the cone;"
                      " truncated value used", RuntimeWarning)
    f = cell_drift(history[:mult.shape[0]], params)
    return float(np.sum(mult * f) * spec.cell_area)


def drift_field(history: np.ndarray, params: ModelParams, spec: GridSpec
                ) -> np.ndarray:
    """Drift part ``D`` of the mild solution at every recorded node."""
    rows = history.shape[0]
    F = cell_drift(history[:rows - 1], params) * spec.cell_area
    return 0.5 * cone_sums(F, rows)


def noise_field(history: np.ndarray, noise: NoiseGrid, params: ModelParams
                ) -> np.ndarray:
    """Stochastic-convolution part ``N`` with ``rho = g(u)`` at every node."""
    rows = history.shape[0]
    rho = params.g(cell_average(history[:rows - 1]))
    return 0.5 * cone_sums(rho * noise.increments[:rows - 1], rows)


def decompose(history: np.ndarray, noise: NoiseGrid, params: ModelParams,
              spec: GridSpec, init: InitialData) -> DriftDecomposition:
    rows = history.shape[0]
    V = np.stack([dalembert_row(init, m) for m in range(rows)])
    if params.drift_enabled:
        D = drift_field(history, params, spec)
    else:
        D = np.zeros_like(V)
    Nf = noise_field(history, noise, params)
    return DriftDecomposition(V, D, Nf)


def mean_process(history: np.ndarray, spec: GridSpec) -> np.ndarray:
    """``V(t) = sum_j u(t, x_j) dx`` for each recorded row."""
    return np.sum(history, axis=-1) * spec.dx


# --------------------------------------------------------------------------
# cone monotonicity and the sector bound

def interior_nodes(m: int, i: int, nx: int) -> list[tuple[int, int]]:
    """Nodes ``(n, y)`` with ``1 <= n < m`` strictly inside the cone of
    ``(m, i)``; their own cones are non-empty."""
    out = []
    for n in range(1, m):
        k = m - n
        for d in range(-k + 1, k):
            out.append((n, (i + d) % nx))
    return sorted(set(out))


def cone_monotonicity_check(history: np.ndarray, apex: tuple[int, int],
                            n_samples: int, params: ModelParams,
                            spec: GridSpec, seed: int = 0) -> dict:
    m, i = apex
    _check_apex(history, spec, apex)
    positive = bool(np.all(history[:m + 1] > 0))
    nodes = interior_nodes(m, i, spec.nx)
    if not nodes:
        return {"apex": [m, i], "n_checked": 0, "violations": 0,
                "vacuous": True, "field_positive": positive}
    rng = np.random.default_rng(seed)
    pick = rng.choice(len(nodes), size=min(n_samples, len(nodes)),
                      replace=False)
    top = drift_integral(history, (m, i), params, spec)
    gaps = []
    for k in sorted(pick):
        n, y = nodes[k]
        gaps.append(drift_integral(history, (n, y), params, spec) - top)
    gaps = np.asarray(gaps)
    return {"apex": [m, i], "n_checked": int(gaps.size),
            "violations": int(np.sum(gaps >= 0)), "vacuous": False,
            "apex_value": top, "max_gap": float(gaps.max()),
            "field_positive": positive}


def sector_exponent(alpha: float, epsilon: float) -> float:
    return (3 - alpha) / 2 + epsilon * (alpha + 1)


def sector_bound(R, Y: float, alpha: float, epsilon: float):
    """Upper bound for ``u`` on the curved boundary of the sector of radius
    ``R`` below a level-``delta`` point."""
    R = np.asarray(R, dtype=float)
    c = math.pi * Y ** (-1 - alpha) / 2 ** (alpha + 2)
    return Y * R ** (0.5 - epsilon) * (1 - c * R ** sector_exponent(alpha, epsilon))


def sector_critical_radius(Y: float, alpha: float, epsilon: float) -> float:
    """Radius below which the sector bound is negative."""
    c = math.pi * Y ** (-1 - alpha) / 2 ** (alpha + 2)
    return c ** (-1.0 / sector_exponent(alpha, epsilon))


def sector_diagnostic(history: np.ndarray, params: ModelParams, spec: GridSpec,
                      delta: float, epsilon: float, Y: float | None = None,
                      R_values=None, include_drift: bool = True) -> dict:
    """Scan the sector bound around the first point where the path reaches
    ``delta``.

    ``Y`` defaults to the empirical (1/2 - epsilon)-Hölder constant of
    ``u - D`` at that point over its backward cone; this is a surrogate for
    the almost-sure random constant, not the constant itself.
    """
    alpha = params.alpha
    kappa = sector_exponent(alpha, epsilon)
    if alpha <= 3:
        raise ValueError(
            f"alpha={alpha} <= 3: (3-alpha)/2 + eps(alpha+1) < 0 has no "
            "solution eps > 0, the sector argument does not apply")
    if not 0 < epsilon < 0.5 or kappa >= 0:
        raise ValueError(
            f"epsilon={epsilon} gives exponent {kappa:.4g} >= 0; choose "
            f"epsilon < {(alpha - 3) / (2 * (alpha + 1)):.4g}")
    mins = np.nanmin(history, axis=1)
    crossed = np.flatnonzero(mins <= delta)
    if crossed.size == 0:
        raise ValueError(f"path never reaches level delta={delta}")
    n_d = int(crossed[0])
    if n_d == 0:
        raise ValueError(f"level delta={delta} already met at t=0; the "
                         "backward cone is empty")
    x_d = int(np.argmin(history[n_d]))  # argmin returns the smallest index
    t_d = n_d * spec.dt

    nodes = [(n, y) for n in range(n_d) for y in range(spec.nx)]
    d_idx = np.array([((y - x_d + spec.nx // 2) % spec.nx) - spec.nx // 2
                      for _, y in nodes])
    n_idx = np.array([n for n, _ in nodes])
    in_cone = np.abs(d_idx) < (n_d - n_idx)
    n_idx, d_idx = n_idx[in_cone], d_idx[in_cone]
    y_idx = (x_d + d_idx) % spec.nx
    dist = np.hypot((n_d - n_idx) * spec.dt, d_idx * spec.dx)

    rows = n_d + 1
    if include_drift:
        D = drift_field(history[:rows], params, spec)
    else:
        D = np.zeros((rows, spec.nx))
    VN = history[:rows] - D
    dVN = VN[n_idx, y_idx] - VN[n_d, x_d]
    dD = D[n_idx, y_idx] - D[n_d, x_d]
    estimated = Y is None
    if estimated:
        ratio = dVN / dist ** (0.5 - epsilon) if dist.size else np.array([0.0])
        Y = float(max(np.max(ratio), 1e-300))
    R_star = sector_critical_radius(Y, alpha, epsilon)
    if R_values is None:
        hi = max(t_d / 2, 2 * spec.dx)
        R_values = np.geomspace(spec.dx, hi, 12)
    ladder = []
    for R in np.atleast_1d(R_values):
        b = float(sector_bound(R, Y, alpha, epsilon))
        ring = np.abs(dist - R) <= 0.5 * spec.dx
        ring_u = history[n_idx[ring], y_idx[ring]]
        ladder.append({
            "R": float(R), "bound": b, "forces_negative": b < 0,
            "ring_points": int(ring.sum()),
            "ring_u_min": float(ring_u.min()) if ring_u.size else None,
            "ring_u_max": float(ring_u.max()) if ring_u.size else None,
        })
    return {
        "tau_delta": t_d, "x_delta": x_d * spec.dx, "tau_index": n_d,
        "x_index": x_d, "delta": delta, "epsilon": epsilon, "alpha": alpha,
        "exponent": kappa, "Y": Y, "Y_is_surrogate": estimated,
        "R_star": R_star, "ladder": ladder,
        "max_delta_D": float(dD.max()) if dD.size else 0.0,
        "cone_points": int(dist.size),
    }


# --------------------------------------------------------------------------
# dyadic level counts

@dataclass
class DyadicCount:
    n: int
    K: float
    lambda_n: float
    count: int
    epsilon: float
    lattice_size: int = 0


@dataclass
class DyadicReport:
    counts: list = field(default_factory=list)
    weighted_tail: float = 0.0
    n_cap: int | None = None
    capped: bool = False
    K_exceeded: bool = False


def dyadic_counts(history: np.ndarray, K: float, epsilon: float, max_n: int,
                  spec: GridSpec, alpha: float | None = None) -> DyadicReport:
    """Count lattice points with ``v <= 2^-n K`` on spacings ``lambda_n`` in
    time and ``2 lambda_n`` in space, anchored at the origin.

    The lattice covers the recorded (pre-hit) rows.  Levels whose spacing is
    finer than the grid are dropped and reported through ``n_cap``.
    """
    if not 0 < 2 * epsilon < 1:
        raise ValueError("need 0 < 2*epsilon < 1")
    if alpha is not None and not 2 * epsilon < 1 - alpha:
        raise ValueError(f"need 0 < 2*epsilon < 1 - alpha (alpha={alpha})")
    rows = history.shape[0]
    t_end = (rows - 1) * spec.dt
    rep = DyadicReport(K_exceeded=bool(np.nanmax(history) > K))
    if rep.K_exceeded:
        warnings.warn("field exceeds K; counts are outside the event A(K)",
                      RuntimeWarning)
    a = 0.0 if alpha is None else alpha
    for n in range(max_n + 1):
        lam = 2.0 ** (-(1 - 2 * epsilon) * n)
        if lam < spec.dt * (1 - 1e-12):
            rep.capped = True
            rep.n_cap = n - 1
            break
        tk = np.arange(0.0, t_end + 1e-12 * max(1, t_end), lam)
        yl = np.arange(0.0, spec.J - 1e-12, 2 * lam)
        ri = np.minimum(np.round(tk / spec.dt).astype(int), rows - 1)
        ci = np.round(yl / spec.dx).astype(int) % spec.nx
        v = history[np.ix_(ri, ci)]
        cnt = int(np.sum(v <= 2.0 ** (-n) * K))
        rep.counts.append(DyadicCount(n, K, lam, cnt, epsilon, v.size))
        rep.weighted_tail += 2.0 ** (2 * a * (n + 1)) * K ** (-2 * a) \
            * cnt * lam * 2 * lam
    if not rep.capped:
        rep.n_cap = max_n
    return rep


# --------------------------------------------------------------------------
# reports

def report_record(seed, name: str, payload) -> dict:
    if hasattr(payload, "__dataclass_fields__"):
        payload = asdict(payload)
    return {"seed": seed, "diagnostic": name, **payload}


def dumps_report(seed, name: str, payload) -> str:
    return json.dumps(report_record(seed, name, payload), default=_jsonable,
                      sort_keys=True)


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    raise TypeError(type(o))
