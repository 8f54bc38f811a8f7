"""One path, taken apart.

Hölder exponents of the drift-free field, the split u = V + D + N, the
drift integral shrinking into the light cone, and dyadic near-zero counts.
"""
import numpy as np

from stochwave import (GridSpec, InitialData, ModelParams, SineG,
                       cone_monotonicity_check, decompose, dyadic_counts,
                       generate, holder_estimate, run_batch, run_path)

spec = GridSpec(1.0, 256, 256)
init = InitialData.constant(spec, 0.2)

# roughness: pooled increments over 20 drift-free paths
free = ModelParams(alpha=0.5, drift_enabled=False)
paths = run_batch(free, init, spec, seeds=range(20), hit_level=-np.inf,
                  record_history=True)
field = np.stack([r.history for r in paths])
for d in ("time", "space"):
    est = holder_estimate(field, d)
    print(f"Hölder exponent, {d:5s}: {est.beta_hat:.3f} +- {est.stderr:.3f}")

# the decomposition closes to rounding for the cell-sum scheme
params = ModelParams(alpha=0.5, g=SineG(1.0, 0.3))
noise = generate(spec, 3)
rec = run_path(params, init, spec, noise=noise, record_history=True)
parts = decompose(rec.history, noise, params, spec, init)
print(f"path {rec.stop_reason} at t={rec.stop_index * spec.dt:.3f}; "
      f"|u - (V+D+N)| = {np.abs(parts.total - rec.history).max():.1e}")

# drift integral over smaller cones is strictly smaller
m = rec.stop_index - 1 if rec.hit else rec.stop_index
apex = (m, int(np.argmin(rec.history[m])))
rep = cone_monotonicity_check(rec.history[:m + 1], apex, 100, params, spec)
print(f"cone check: {rep['violations']} violations in {rep['n_checked']} points")

dy = dyadic_counts(rec.history[:m + 1], K=4.0, epsilon=0.2, max_n=40,
                   spec=spec, alpha=0.5)
print("dyadic counts:", [c.count for c in dy.counts], f"(levels capped at n={dy.n_cap})")
print(f"weighted tail {dy.weighted_tail:.3f}")
