"""Monte Carlo simulation of the periodic 1-D stochastic wave equation with a
singular drift ``u^-alpha``."""

from .grid import GridSpec
from .circle_kernel import (CircleCoord, InitialData, LightCone, circle_kernel,
                            cone_members, cone_rows, dalembert,
                            kernel_space_integral, line_kernel,
                            space_quadrature)
from .noise import (DriftShift, NoiseGrid, generate, generate_fine, shift,
                    stochastic_convolution)
from .solver import (ConstantG, ModelParams, PathRecord, PathState, SineG,
                     first_step_init, run_batch, run_path, step)
from .girsanov import (GirsanovWeight, ReweightResult, StopSpec,
                       constant_shift_weight, drift_shift_h, log_density,
                       reweight_estimate, stopped_horizon)
from .analysis import (HolderEstimate, cone_monotonicity_check, decompose,
                       drift_integral, dyadic_counts, holder_estimate,
                       sector_diagnostic)
from .harness import (ExperimentConfig, SweepResult, emit, load_config,
                      refine_study, run_sweep, wilson_interval)

__version__ = "0.1.0"
