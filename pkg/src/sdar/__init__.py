"""Support detection and root finding for sparse linear regression.

The primal-dual active-set solver (:func:`sdar_fit`), its adaptive
model-size wrapper (:func:`asdar_fit`), baseline solvers, a seeded
simulation generator, regularity diagnostics and a benchmark harness.
"""
from .adaptive import AsdarConfig, asdar_fit, default_L, hbic_score, select_model
from .baselines import McpConfig, grades_fit, mcp_fit, mcp_path_fit, mcp_threshold, omp_fit
from .diagnostics import (
    RecoveryDiagnostics,
    compute_diagnostics,
    regularity_checks,
    mutual_coherence,
    oracle_estimator,
    error_bound_trace,
)
from .errors import *  # noqa: F401,F403
from .linalg import CgSettings, cg_solve, correlation, normalize_columns
from .metrics import RepRecord, RepSummary, aggregate, exact_support_recovery, relative_error
from .model import (
    FitResult,
    PathEntry,
    PrimalDualState,
    RegressionData,
    SolutionPath,
    Status,
    load_csv,
    validate,
)
from .simulate import SimData, SimSpec, derive_seed, simulate
from .solver import SdarConfig, hard_threshold, kkt_residual, sdar_fit, sdar_step

__version__ = "0.1.0"
