import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stochwave import (ConstantG, GridSpec, InitialData, ModelParams,
                       NoiseGrid, PathRecord, StopSpec, constant_shift_weight,
                       drift_shift_h, generate, log_density, reweight_estimate,
                       run_batch, run_path, shift, stopped_horizon)
from stochwave.girsanov import (exponential_martingale, shift_field,
                                stopped_horizon_index)


def record(stop_index, trace, hit=False, dt=0.1):
    trace = np.asarray(trace, dtype=float)
    return PathRecord(seed=0, alpha=0.5, hit=hit,
                      tau_hat=stop_index * dt if hit else math.inf,
                      tau_N_hats={}, minima=np.ones(stop_index + 1),
                      singular_integral=float(trace[-1]),
                      singular_trace=trace, stop_index=stop_index,
                      stop_reason="hit" if hit else "horizon", dt=dt)


# ------------------------------------------------------------- h(r)

def test_h_values():
    assert drift_shift_h(0.0, ModelParams(0.5)) == 0.0
    assert drift_shift_h(4.0, ModelParams(0.5)) == 0.5
    assert drift_shift_h(0.1, ModelParams(1.0, g=ConstantG(2.0))) == \
        pytest.approx(5.0)
    with pytest.raises(ValueError):
        drift_shift_h(-1.0, ModelParams(0.5))


# ---------------------------------------------------- stopped horizon

def test_stop_never_hits():
    r = record(10, np.linspace(0, 3, 11))
    assert stopped_horizon(r, StopSpec(5.0, 1.0)) == pytest.approx(1.0)


def test_stop_budget_crossed():
    r = record(10, np.arange(11.0))
    assert stopped_horizon(r, StopSpec(4.5, 1.0)) == pytest.approx(0.5)


def test_stop_hit_first():
    r = record(3, [0, 1, 2, 3], hit=True)
    assert stopped_horizon(r, StopSpec(4.5, 1.0)) == pytest.approx(0.3)


def test_stop_spec_rejects():
    with pytest.raises(ValueError):
        StopSpec(0.0, 1.0)


@given(st.lists(st.floats(0, 5), min_size=1, max_size=30),
       st.floats(0.01, 20), st.floats(0.01, 20), st.floats(0.05, 4))
def test_stop_dominance(incs, m1, m2, T):
    trace = np.concatenate([[0.0], np.cumsum(incs)])
    r = record(len(incs), trace)
    lo, hi = sorted([m1, m2])
    a = stopped_horizon(r, StopSpec(lo, T))
    b = stopped_horizon(r, StopSpec(hi, T))
    assert a <= b <= T + 1e-12


# ------------------------------------------------------- densities

def test_zero_shift_is_zero(small_spec):
    w = constant_shift_weight(0.0, generate(small_spec, 1))
    assert w.log_density == 0.0 and w.density == 1.0


def test_constant_shift_half_integral():
    spec = GridSpec(2.0, 40, 30)
    K = 1.7
    w = constant_shift_weight(K, generate(spec, 3))
    assert w.novikov_half_integral == pytest.approx(0.5 * K * K * 2.0 * spec.T,
                                                    rel=1e-12)
    assert w.stop_time_used == pytest.approx(spec.T)


def test_constant_shift_mean_one():
    spec = GridSpec(1.0, 16, 16)
    d = np.array([constant_shift_weight(0.8, generate(spec, s)).density
                  for s in range(2000)])
    assert abs(d.mean() - 1) < 3 * d.std(ddof=1) / np.sqrt(d.size)


def test_exponential_martingale_rows(small_spec):
    nz = generate(small_spec, 0)
    lin, half = exponential_martingale(2.0, nz, 5)
    assert lin == pytest.approx(2.0 * nz.increments[:5].sum())
    with pytest.raises(ValueError):
        exponential_martingale(1.0, nz, 33)


def test_log_density_needs_history(small_spec):
    p = ModelParams(0.5, drift_enabled=False)
    r = run_path(p, InitialData.constant(small_spec, 1.0), small_spec, seed=0)
    with pytest.raises(ValueError):
        log_density(r, generate(small_spec, 0), StopSpec(10, 1), p)


def test_predictable(small_spec, rng):
    p = ModelParams(0.5, drift_enabled=False)
    init = InitialData.cosine(small_spec, 1.0, 0.3)
    nz = generate(small_spec, 5)
    n = 12
    mixed = nz.increments.copy()
    mixed[n:] = rng.permutation(mixed[n:].ravel()).reshape(mixed[n:].shape)
    nz2 = NoiseGrid(small_spec, 5, mixed)
    parts = []
    for noise in (nz, nz2):
        r = run_path(p, init, small_spec, noise=noise, hit_level=-np.inf,
                     record_history=True)
        h = shift_field(r.history, p.replace(drift_enabled=True), n)
        parts.append(exponential_martingale(h, noise, n))
    assert parts[0] == parts[1]


def test_drift_removed_exactly(small_spec):
    # drift-free path v with noise W equals the drifted path driven by
    # W - h(v) dt dx, cell for cell
    drifted = ModelParams(0.5, g=ConstantG(1.3))
    free = drifted.replace(drift_enabled=False)
    init = InitialData.cosine(small_spec, 1.5, 0.3)
    nz = generate(small_spec, 9)
    v = run_path(free, init, small_spec, noise=nz, hit_level=-np.inf,
                 record_history=True)
    h = shift_field(v.history, drifted, small_spec.nt)
    u = run_path(drifted, init, small_spec, noise=shift(nz, -h),
                 hit_level=-np.inf, record_history=True)
    assert np.max(np.abs(u.history - v.history)) < 1e-12


def test_log_density_stops(small_spec):
    drifted = ModelParams(0.5)
    free = drifted.replace(drift_enabled=False)
    init = InitialData.constant(small_spec, 0.3)
    nz = generate(small_spec, 2)
    v = run_path(free, init, small_spec, noise=nz, record_history=True)
    full = log_density(v, nz, StopSpec(1e9, 1.0), drifted)
    early = log_density(v, nz, StopSpec(v.singular_trace[5] * 0.999, 1.0),
                        drifted)
    assert early.stop_index == 5  # first row whose running total exceeds m
    assert early.stop_index < full.stop_index
    assert full.stop_index == min(v.stop_index, small_spec.nt)


# -------------------------------------------------------- reweighting

def test_reweight_trivial(rng):
    lw = rng.normal(-0.5, 1.0, 3000)  # E exp(lw) = 1
    r1 = reweight_estimate(np.ones(3000), lw)
    assert abs(r1.estimate - 1) < 3 * r1.stderr
    r0 = reweight_estimate(np.zeros(3000), lw)
    assert r0.estimate == 0.0


def test_reweight_huge_logs_no_overflow():
    with pytest.warns(RuntimeWarning):
        r = reweight_estimate([1.0, 0.0, 1.0], [700.0, 699.0, 0.0])
    assert np.isfinite(r.estimate) and np.isfinite(r.ess)
    assert r.low_ess


def test_reweight_low_ess_warns():
    with pytest.warns(RuntimeWarning):
        reweight_estimate([1.0, 2.0], [0.0, 5.0])


def test_reweight_rejects_mismatch():
    with pytest.raises(ValueError):
        reweight_estimate([1.0], [0.0, 1.0])
