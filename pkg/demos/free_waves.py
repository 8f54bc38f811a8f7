"""Free waves on the circle.

The periodised kernel integrates to t over one period, and the leapfrog
scheme at CFL number 1 reproduces d'Alembert's formula to rounding.
"""
import numpy as np

from stochwave import (GridSpec, InitialData, ModelParams, NoiseGrid,
                       circle_kernel, run_path, space_quadrature)
from stochwave.circle_kernel import dalembert_row

J = 1.0
for t in (0.3, 0.7, 1.9):
    print(f"t={t}:  S_I(t, 0) = {circle_kernel(t, 0.0, J)}   "
          f"int S_I dy = {space_quadrature(t, J, x=0.37):.15f}")

# noise off, drift off: a cosine mode, 10^4 steps
spec = GridSpec(J, 256, 10_000)
init = InitialData.cosine(spec, mean=0.0, amp=1.0, mode=3)
free = ModelParams(alpha=1.0, drift_enabled=False)
rec = run_path(free, init, spec, noise=NoiseGrid.zeros(spec),
               hit_level=-np.inf, record_history=True)
err = max(np.abs(rec.history[m] - dalembert_row(init, m)).max()
          for m in range(0, spec.nt + 1, 500))
print(f"leapfrog vs d'Alembert after {spec.nt} steps: {err:.2e}")
