"""Monte Carlo benchmarking of model-based PolSAR decomposition.

Simulate three-mechanism coherency matrices, corrupt them with multilook
Wishart speckle, invert all eight model parameters by constrained nonlinear
least squares, and assess estimator bias/spread as a function of scene entropy.
"""

from .model import (
    CoherencyMatrix,
    DihedralSpec,
    MechanismPowers,
    ModelParams,
    Scenario,
    assemble,
    bragg_beta,
    dihedral_alpha,
    double_bounce_coherency,
    entropy,
    epsilon_from_beta,
    fold_orientation,
    mechanism_powers,
    rotate,
    scenario_to_params,
    surface_coherency,
    volume_coherency,
)
from .speckle import SpeckleConfig, batch_samples, cholesky_hermitian, multilook_sample
from .inversion import FitOptions, FitResult, canonicalize, fit, initial_guesses, residual
from .assessment import (
    Histogram,
    ParamStats,
    SweepPoint,
    TrialRecord,
    TrialRun,
    entropy_sweep,
    histogram,
    run_trials,
    summarize,
)

__version__ = "0.1.0"

__all__ = [
    "CoherencyMatrix",
    "DihedralSpec",
    "MechanismPowers",
    "ModelParams",
    "Scenario",
    "assemble",
    "bragg_beta",
    "dihedral_alpha",
    "double_bounce_coherency",
    "entropy",
    "epsilon_from_beta",
    "fold_orientation",
    "mechanism_powers",
    "rotate",
    "scenario_to_params",
    "surface_coherency",
    "volume_coherency",
    "SpeckleConfig",
    "batch_samples",
    "cholesky_hermitian",
    "multilook_sample",
    "FitOptions",
    "FitResult",
    "canonicalize",
    "fit",
    "initial_guesses",
    "residual",
    "Histogram",
    "ParamStats",
    "SweepPoint",
    "TrialRecord",
    "TrialRun",
    "entropy_sweep",
    "histogram",
    "run_trials",
    "summarize",
    "__version__",
]
