"""Accelerated stochastic gradient methods under multiplicative noise.

Gauss-Seidel discretizations of the Hessian-driven accelerated gradient flow
(the SHANG family), reference baselines, a seeded Monte-Carlo benchmark
harness, and runtime verification of the closed-form contraction guarantees.
"""

from ._kernels import HAVE_COMPILED, IMPLEMENTATION
from .analysis import (
    ContractionReport,
    DescentCheckResult,
    LyapunovRecord,
    MeanEnergyRecord,
    contraction_check,
    descent_check,
    envelope_values,
    lyapunov,
    make_lyapunov_record,
    rate_bound,
)
from .core import (
    ObjectiveProblem,
    SmoothnessProfile,
    as_point,
    bregman_divergence,
    three_point_identity_residual,
)
from .harness import (
    METHOD_NAMES,
    ExperimentSpec,
    MethodSpec,
    RunResult,
    SweepPoint,
    TrajectoryStats,
    run_monte_carlo,
    run_trajectory,
    sigma_sweep,
)
from .noise import (
    MnsOracleConfig,
    NoiseShape,
    NoiseStream,
    NoisyGradientOracle,
    empirical_mns_constant,
    sample_noisy_gradient,
)
from .optimizers import (
    BaselineMethod,
    BaselineState,
    Regime,
    ScheduleParams,
    ShangState,
    SnagHnagParams,
    SnagOriginalParams,
    SnagState,
    baseline_step,
    build_schedule,
    make_baseline_state,
    make_initial_shang_state,
    make_snag_state,
    schedule_condition_residual,
    schedule_condition_residuals,
    shang_step,
    shangpp_dl_step,
    shangpp_step,
    snag_original_from_hnag,
    snag_step_hnag,
    snag_step_original,
)
from .problems import fd_gradient, fd_value, make_fd_problem, make_quadratic
from .verify import SUITES, CheckResult, run_suite

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "HAVE_COMPILED",
    "IMPLEMENTATION",
    # core
    "SmoothnessProfile",
    "ObjectiveProblem",
    "as_point",
    "bregman_divergence",
    "three_point_identity_residual",
    # problems
    "fd_value",
    "fd_gradient",
    "make_fd_problem",
    "make_quadratic",
    # noise
    "NoiseShape",
    "MnsOracleConfig",
    "NoiseStream",
    "NoisyGradientOracle",
    "sample_noisy_gradient",
    "empirical_mns_constant",
    # optimizers
    "Regime",
    "BaselineMethod",
    "ScheduleParams",
    "build_schedule",
    "schedule_condition_residual",
    "schedule_condition_residuals",
    "ShangState",
    "make_initial_shang_state",
    "shang_step",
    "shangpp_step",
    "shangpp_dl_step",
    "SnagState",
    "SnagOriginalParams",
    "SnagHnagParams",
    "make_snag_state",
    "snag_original_from_hnag",
    "snag_step_original",
    "snag_step_hnag",
    "BaselineState",
    "make_baseline_state",
    "baseline_step",
    # analysis
    "LyapunovRecord",
    "MeanEnergyRecord",
    "ContractionReport",
    "DescentCheckResult",
    "lyapunov",
    "make_lyapunov_record",
    "rate_bound",
    "envelope_values",
    "contraction_check",
    "descent_check",
    # harness
    "METHOD_NAMES",
    "MethodSpec",
    "ExperimentSpec",
    "RunResult",
    "TrajectoryStats",
    "SweepPoint",
    "run_trajectory",
    "run_monte_carlo",
    "sigma_sweep",
    # verify
    "CheckResult",
    "SUITES",
    "run_suite",
]
