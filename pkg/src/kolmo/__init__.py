"""Pseudo-spectral Kolmogorov-flow solver on a rectangular torus.

The main entry points are re-exported here; see the submodules for the rest.
"""

from ._kernels import BACKEND
from .diagnostics import (
    counterexample_check,
    energy_identity_residual,
    enhanced_damping_sweep,
    exact_solution_error,
    fit_decay_rate,
    rage_time_average,
)
from .errors import KolmoError
from .exact import EXAMPLES, eval_exact, validate
from .integrator import StepperConfig, choose_dt, integrate, step
from .models import ModelSpec
from .spectral import SpectralField, TorusConfig, to_physical, to_spectral

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "EXAMPLES",
    "KolmoError",
    "ModelSpec",
    "SpectralField",
    "StepperConfig",
    "TorusConfig",
    "choose_dt",
    "counterexample_check",
    "energy_identity_residual",
    "enhanced_damping_sweep",
    "eval_exact",
    "exact_solution_error",
    "fit_decay_rate",
    "integrate",
    "rage_time_average",
    "step",
    "to_physical",
    "to_spectral",
    "validate",
]
