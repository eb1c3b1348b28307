"""Stable-driven Euler scheme engine with distributional Besov drifts.

Modules:

* stable_kernel: alpha-stable heat kernel tables, bounds, samplers
* besov_drift: Fourier drift fields, semigroup mollification, thermic norms
* euler_sim: the scheme, common-random-number ensembles
* density_weak_error: density estimation and weak-error experiments
* inequality_lab: scalar lemma verification
* cli: the `sbe` command-line harness
"""

from ._modesum import BACKEND, HAVE_COMPILED
from .besov_drift import (
    BesovParams,
    DriftField,
    constant_drift,
    deterministic_drift,
    gamma_gap,
    integrated_step_drift,
    mollified_drift,
    random_fourier_drift,
    scale_free_drift,
    single_mode_drift,
    thermic_norm,
    validate_parameters,
    zero_drift,
)
from .euler_sim import (
    PathEnsemble,
    SchemeConfig,
    reference_ensemble,
    simulate_continuous,
    simulate_grid,
)
from .stable_kernel import (
    IncrementSampler,
    StableLaw,
    bound_kernel,
    convolve_bound_kernels,
    evaluate_density,
    evaluate_gradient,
    sample_increment,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "HAVE_COMPILED",
    "BesovParams",
    "DriftField",
    "IncrementSampler",
    "PathEnsemble",
    "SchemeConfig",
    "StableLaw",
    "bound_kernel",
    "constant_drift",
    "convolve_bound_kernels",
    "deterministic_drift",
    "evaluate_density",
    "evaluate_gradient",
    "gamma_gap",
    "integrated_step_drift",
    "mollified_drift",
    "random_fourier_drift",
    "reference_ensemble",
    "sample_increment",
    "scale_free_drift",
    "simulate_continuous",
    "simulate_grid",
    "single_mode_drift",
    "thermic_norm",
    "validate_parameters",
    "zero_drift",
    "__version__",
]
