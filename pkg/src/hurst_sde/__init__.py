"""Exact fBm sampling, fBm-driven SDE simulation, and Hurst index estimation.

The package covers the full loop needed to study second-difference Hurst
estimators numerically: exact path generation (`generate_fbm`), model
simulation (`ModelSpec`, `sample_path`, `sample_nested`), the estimators
themselves (`estimate_h1` for known diffusion, `estimate_h2` for nested
observations, plus scikit-learn style wrappers), and a reproducible Monte
Carlo harness (`run_experiment`).
"""

__version__ = "0.1.0"

from .exceptions import (
    DegenerateData,
    DiffusionDegeneracy,
    HurstSDEError,
    SimulationBlowUp,
    TooManyFailures,
)
from .fbm import (
    SamplePath,
    abs_rho_sum,
    fbm_covariance,
    generate_fbm,
    generate_fbm_cholesky,
    rho,
    sigma_sq,
)
from .models import (
    ModelSpec,
    NestedObservations,
    default_k_n,
    model_from_dict,
    required_k_n,
    sample_nested,
    sample_path,
    simulate_euler,
    solve,
    verhulst_exact,
)
from .estimators import (
    EstimationResult,
    KnownDiffusionHurstEstimator,
    NestedWindowHurstEstimator,
    asymptotic_ci,
    concentration_bound,
    estimate_h1,
    estimate_h2,
    phi,
    phi_inv,
    v_stat,
    window_energy,
)
from .harness import ExperimentConfig, ExperimentReport, ReplicationRecord, run_experiment

__all__ = [
    "__version__",
    "HurstSDEError",
    "SimulationBlowUp",
    "DiffusionDegeneracy",
    "DegenerateData",
    "TooManyFailures",
    "SamplePath",
    "fbm_covariance",
    "rho",
    "sigma_sq",
    "abs_rho_sum",
    "generate_fbm",
    "generate_fbm_cholesky",
    "ModelSpec",
    "NestedObservations",
    "simulate_euler",
    "verhulst_exact",
    "solve",
    "sample_path",
    "sample_nested",
    "required_k_n",
    "default_k_n",
    "model_from_dict",
    "EstimationResult",
    "phi",
    "phi_inv",
    "estimate_h1",
    "estimate_h2",
    "v_stat",
    "window_energy",
    "asymptotic_ci",
    "concentration_bound",
    "KnownDiffusionHurstEstimator",
    "NestedWindowHurstEstimator",
    "ExperimentConfig",
    "ExperimentReport",
    "ReplicationRecord",
    "run_experiment",
]
