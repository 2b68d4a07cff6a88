"""Sequential Monte Carlo samplers: bridging-distribution engine with
adaptive tempering, exact and unadjusted move kernels, genealogy-based
variance estimation, multi-run combination, and a benchmark CLI."""

from .config import load_config, parse_config
from .diagnostics import (GenealogySummary, MultiRunSet, PIMHResult,
                          RunSummary, combine_runs, combined_ci, count_roots,
                          gaussian_bridge_schedule, gaussian_chi2,
                          perfect_kernel_variance, pimh_chain,
                          variance_estimator_Z, variance_estimator_phi)
from .engine import (FrozenPlan, ParticleSystem, PlanStep, RunRecord,
                     RunResult, initialize, run, smcs_step, weighted_estimate)
from .errors import (ConfigurationError, NumericalError, ParticleDeathError,
                     SMCSError)
from .kernels import KernelSpec, MoveOutcome, adapt_preconditioner, leapfrog
from .paths import GeometricPath, PartialPosteriorPath, PathPoint, TruncatedPath
from .resampling import (ScheduleState, WeightVector, ess,
                         multinomial_ancestors, next_lambda, should_resample)
from .targets import (GaussianTarget, LogisticRegressionTarget, TargetDensity,
                      laplace_initializer, load_logistic_dataset,
                      synthetic_logistic_dataset)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError", "FrozenPlan", "GaussianTarget", "GenealogySummary",
    "GeometricPath", "KernelSpec", "LogisticRegressionTarget", "MoveOutcome",
    "MultiRunSet", "NumericalError", "PIMHResult", "ParticleDeathError",
    "ParticleSystem", "PartialPosteriorPath", "PathPoint", "PlanStep",
    "RunRecord", "RunResult", "RunSummary", "SMCSError", "ScheduleState",
    "TargetDensity", "TruncatedPath", "WeightVector", "adapt_preconditioner",
    "combine_runs", "combined_ci", "count_roots", "ess",
    "gaussian_bridge_schedule", "gaussian_chi2", "initialize",
    "laplace_initializer", "leapfrog", "load_logistic_dataset", "load_config",
    "multinomial_ancestors", "next_lambda", "parse_config",
    "perfect_kernel_variance", "pimh_chain", "run", "should_resample",
    "smcs_step", "synthetic_logistic_dataset", "variance_estimator_Z",
    "variance_estimator_phi", "weighted_estimate",
]
