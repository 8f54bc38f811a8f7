import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from stochwave import (ConstantG, GridSpec, InitialData, ModelParams,
                       NoiseGrid, SineG, cone_rows, first_step_init, generate,
                       run_batch, run_path, step)
from stochwave.circle_kernel import dalembert_row, grid_cone
from stochwave.solver import PathState

FREE = ModelParams(alpha=1.0, drift_enabled=False)


# ------------------------------------------------------------ parameters

def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(alpha=0.0)
    with pytest.raises(ValueError):
        ModelParams(alpha=1.0, trunc_level=0)
    with pytest.raises(ValueError):
        ModelParams(alpha=1.0, g=SineG(0.5, 0.6))
    p = ModelParams(alpha=1.0, g=SineG(1.0, 0.5, 3.0))
    assert p.g_bounds == (0.5, 1.5)
    assert p.g.lipschitz == 1.5
    assert p.check_g()


def test_g_out_of_declared_bounds():
    class Liar:
        bounds = (1.0, 1.0)

        def __call__(self, u):
            return 1.0 + 0.1 * np.sin(u)
    with pytest.raises(ValueError):
        ModelParams(alpha=1.0, g=Liar()).check_g()


def test_truncated_drift():
    p = ModelParams(alpha=2.0, trunc_level=10)
    assert p.floor == 0.1
    assert np.allclose(p.drift(np.array([-1.0, 0.05, 0.5])), [100, 100, 4])
    assert p.replace(alpha=1.0).alpha == 1.0


# --------------------------------------------------------- deterministic

def test_first_step_constant():
    spec = GridSpec(1.0, 16, 4)
    st0 = first_step_init(InitialData.constant(spec, 0.4), FREE, spec,
                          NoiseGrid.zeros(spec))
    assert np.allclose(st0.curr, 0.4, atol=1e-15)
    init = InitialData.constant(spec, 0.4, u1=2.0)
    st1 = first_step_init(init, FREE, spec, NoiseGrid.zeros(spec))
    assert np.allclose(st1.curr, 0.4 + 2.0 * spec.dt, atol=1e-15)


def test_first_step_cosine():
    spec = GridSpec(1.0, 64, 4)
    init = InitialData.cosine(spec, 1.0, 0.5, mode=2)
    st0 = first_step_init(init, FREE, spec, NoiseGrid.zeros(spec))
    assert np.max(np.abs(st0.curr - dalembert_row(init, 1))) < 1e-10


def test_constant_stays_constant():
    spec = GridSpec(1.0, 32, 100)
    rec = run_path(FREE, InitialData.constant(spec, 0.3), spec,
                   noise=NoiseGrid.zeros(spec), record_history=True)
    assert np.allclose(rec.history, 0.3, atol=1e-14)


def test_cosine_exact():
    spec = GridSpec(1.0, 64, 1000)
    init = InitialData.cosine(spec, 2.0, 0.7, mode=5, u1=0.1)
    rec = run_path(FREE, init, spec, noise=NoiseGrid.zeros(spec),
                   record_history=True)
    for m in (1, 2, 333, 1000):
        assert np.max(np.abs(rec.history[m] - dalembert_row(init, m))) < 1e-10


def test_flat_field_follows_ode():
    # constant data with the drift on: u'' = 1/u for alpha = 1
    c, T = 0.5, 0.5
    spec = GridSpec.from_horizon(1.0, 1000, T)
    p = ModelParams(alpha=1.0, trunc_level=10 ** 12)
    rec = run_path(p, InitialData.constant(spec, c), spec,
                   noise=NoiseGrid.zeros(spec), record_history=True)
    ts = spec.t()
    sol = solve_ivp(lambda t, y: [y[1], 1.0 / y[0]], (0, T), [c, 0.0],
                    t_eval=ts, rtol=1e-12, atol=1e-14)
    want = sol.y[0]
    assert np.ptp(rec.history, axis=1).max() < 1e-12
    assert np.max(np.abs(rec.history[:, 0] / want - 1)) < 1e-4


# ----------------------------------------------------------- stepping

def test_step_matches_batch(small_spec):
    p = ModelParams(alpha=0.5, g=SineG(1.0, 0.3))
    init = InitialData.cosine(small_spec, 1.0, 0.2)
    nz = generate(small_spec, 4)
    rec = run_path(p, init, small_spec, noise=nz, hit_level=-np.inf,
                   record_history=True)
    state = first_step_init(init, p, small_spec, nz)
    rows = [state.prev, state.curr]
    while state.step_index < small_spec.nt:
        state = step(state, p, nz, small_spec)
        rows.append(state.curr)
    assert np.array_equal(np.array(rows), rec.history)


def test_step_contract(small_spec):
    nz = NoiseGrid.zeros(small_spec)
    dead = PathState(np.ones(32), np.ones(32), 3, dead=True)
    with pytest.raises(RuntimeError):
        step(dead, FREE, nz, small_spec)
    done = PathState(np.ones(32), np.ones(32), small_spec.nt)
    with pytest.raises(RuntimeError):
        step(done, FREE, nz, small_spec)


def test_step_leaves_input_alone(small_spec):
    s0 = PathState(np.ones(32), np.full(32, 2.0), 1)
    step(s0, FREE, generate(small_spec, 0), small_spec)
    assert np.all(s0.prev == 1) and np.all(s0.curr == 2) and s0.step_index == 1


# ----------------------------------------------------------- paths

def test_calm_path_does_not_hit():
    spec = GridSpec(1.0, 64, 8)
    rec = run_path(ModelParams(alpha=0.5), InitialData.constant(spec, 5.0),
                   spec, seed=1)
    assert not rec.hit and rec.tau_hat == math.inf
    assert rec.stop_reason == "horizon" and rec.stop_index == 8


def test_batch_independent_of_company(small_spec):
    p = ModelParams(alpha=0.5)
    init = InitialData.constant(small_spec, 0.2)
    batch = run_batch(p, init, small_spec, seeds=range(6), record_history=True)
    for r in batch:
        solo = run_path(p, init, small_spec, seed=r.seed, record_history=True)
        assert np.array_equal(solo.history, r.history)
        assert solo.singular_integral == r.singular_integral


def test_record_invariants():
    spec = GridSpec(1.0, 64, 64)
    recs = run_batch(ModelParams(alpha=0.5), InitialData.constant(spec, 0.2),
                     spec, seeds=range(40), record_history=True)
    assert any(r.hit for r in recs)
    for r in recs:
        taus = [r.tau_N_hats[N] for N in sorted(r.tau_N_hats)]
        assert taus == sorted(taus)
        assert r.history.shape[0] == r.stop_index + 1  # nothing after the stop
        assert r.singular_trace.shape == (r.stop_index + 1,)
        assert np.all(np.diff(r.singular_trace) > 0)
        if r.hit:
            assert r.tau_hat <= spec.T
            assert r.minima[-1] <= 0 and np.all(r.minima[:-1] > 0)


def test_singular_integral_by_hand(small_spec):
    p = ModelParams(alpha=0.7)
    init = InitialData.cosine(small_spec, 1.0, 0.3)
    rec = run_path(p, init, small_spec, seed=8, record_history=True)
    h = rec.history[:-1]
    ubar = 0.5 * (h + np.roll(h, -1, axis=1))
    want = np.sum(np.maximum(ubar, p.floor) ** (-2 * p.alpha)) \
        * small_spec.cell_area
    assert rec.singular_integral == pytest.approx(want, rel=1e-12)


def test_invalid_path_flagged(small_spec):
    init = InitialData(np.full(32, np.nan), np.zeros(32), 1.0)
    rec = run_path(FREE, init, small_spec, seed=0)
    assert rec.invalid and rec.stop_reason == "invalid" and not rec.hit


def test_overflow_flagged():
    spec = GridSpec(1.0, 16, 64)
    p = ModelParams(alpha=300.0, trunc_level=10 ** 6)
    rec = run_path(p, InitialData.constant(spec, 0.01), spec, seed=0)
    assert rec.invalid


def test_truncation_levels_agree_before_floor():
    spec = GridSpec(1.0, 64, 64)
    init = InitialData.constant(spec, 0.2)
    a = run_batch(ModelParams(0.5, trunc_level=100), init, spec,
                  seeds=range(20), record_history=True)
    b = run_batch(ModelParams(0.5, trunc_level=200), init, spec,
                  seeds=range(20), record_history=True)
    for ra, rb in zip(a, b):
        k = ra.tau_N_hats[100]
        k = ra.stop_index if math.isinf(k) else round(k / spec.dt)
        assert np.array_equal(ra.history[:k + 1], rb.history[:k + 1])


def test_drift_free_point_law():
    spec = GridSpec.from_horizon(1.0, 256, 0.25)
    init = InitialData.constant(spec, 0.0)
    vals = []
    for lo in range(0, 2000, 250):
        recs = run_batch(FREE, init, spec, seeds=range(lo, lo + 250),
                         hit_level=-np.inf, record_history=True)
        vals += [r.history[-1, 17] for r in recs]
    vals = np.array(vals)
    T = spec.T
    assert abs(vals.mean()) < 3 * vals.std() / np.sqrt(vals.size)
    se = vals.var() * np.sqrt(2 / (vals.size - 1))
    assert abs(vals.var() - T * T / 4) < 3 * se


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2 ** 64 - 1), m=st.integers(1, 24),
       i=st.integers(0, 15))
def test_locality(seed, m, i):
    spec = GridSpec(1.0, 16, 24)
    p = ModelParams(alpha=0.5, g=SineG(1.0, 0.4))
    init = InitialData.cosine(spec, 1.0, 0.3)
    nz = generate(spec, seed)
    keep = cone_rows(grid_cone(spec, m, i), spec) > 0
    keep = np.vstack([keep, np.zeros((spec.nt - keep.shape[0], 16), bool)])
    full = run_path(p, init, spec, noise=nz, hit_level=-np.inf,
                    record_history=True)
    cut = run_path(p, init, spec, noise=nz.masked(keep), hit_level=-np.inf,
                   record_history=True)
    assert full.history[m, i] == cut.history[m, i]
