"""Changing measure instead of changing the equation.

A constant shift K of the noise acts like a constant drift.  Weighting
drift-free paths by exp(K sum W - K^2 J T / 2) recovers expectations
under the shifted law.
"""
import numpy as np

from stochwave import (GridSpec, InitialData, ModelParams,
                       constant_shift_weight, generate, reweight_estimate,
                       run_batch, shift)
from stochwave.analysis import mean_process

K, n = 1.0, 2000
spec = GridSpec(1.0, 64, 64)
init = InitialData.constant(spec, 0.2)
free = ModelParams(alpha=1.0, drift_enabled=False)

noises = [generate(spec, s) for s in range(n)]
logw = [constant_shift_weight(K, nz).log_density for nz in noises]
plain = run_batch(free, init, spec, noises=noises, hit_level=-np.inf)
moved = run_batch(free, init, spec, noises=[shift(nz, K) for nz in noises],
                  hit_level=-np.inf)

F = lambda recs: np.array([mean_process(r.final, spec) < 0.45 for r in recs], float)
rw = reweight_estimate(F(plain), logw)
direct = F(moved)

print(f"mean density       {np.exp(logw).mean():.4f}   (should be 1)")
print(f"reweighted P(V<.45) {rw.estimate:.4f} +- {rw.stderr:.4f}   ESS {rw.ess:.0f}")
print(f"shifted    P(V<.45) {direct.mean():.4f} +- {direct.std() / np.sqrt(n):.4f}")
