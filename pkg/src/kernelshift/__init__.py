"""Kernel-based learning in an RKHS under covariate shift.

Unweighted, importance-ratio-weighted, and truncated-ratio-weighted
estimators for five convex losses, with KLIEP density-ratio estimation,
importance-weighted cross validation, synthetic scenario generators, and
a reproducible experiment harness.
"""

from .estimators import FitConfig, FittedModel, classify, fit, predict
from .kernels import KernelSpec, eval_kernel, gram, median_heuristic
from .losses import LossSpec, lipschitz_bound, loss_subgradient, loss_value
from .metrics import (
    EvalReport,
    excess_risk_empirical,
    misclassification,
    mse_target,
    rate_slope,
)
from .model_selection import CVPlan, SelectionReport, iwcv_risk, make_cv_plan, select
from .ratio import (
    DensitySpec,
    RatioModel,
    ShiftDiagnostics,
    analytic_ratio,
    classify_shift,
    estimate_beta_sq,
    kliep_fit,
    ratio_eval,
    ratio_raw,
    truncation_level,
)
from .solvers import (
    BoxQP,
    QPSolution,
    SolverError,
    irls_klr,
    primal_objective,
    primal_subgradient_oracle,
    solve_box_qp,
    solve_weighted_ridge,
)
from .synthdata import Dataset, Scenario, covariate_split, generate, load_csv, make_scenario

__version__ = "0.1.0"

__all__ = [
    "BoxQP",
    "CVPlan",
    "Dataset",
    "DensitySpec",
    "EvalReport",
    "FitConfig",
    "FittedModel",
    "KernelSpec",
    "LossSpec",
    "QPSolution",
    "RatioModel",
    "Scenario",
    "SelectionReport",
    "ShiftDiagnostics",
    "SolverError",
    "analytic_ratio",
    "classify",
    "classify_shift",
    "covariate_split",
    "estimate_beta_sq",
    "eval_kernel",
    "excess_risk_empirical",
    "fit",
    "generate",
    "gram",
    "irls_klr",
    "iwcv_risk",
    "kliep_fit",
    "lipschitz_bound",
    "load_csv",
    "loss_subgradient",
    "loss_value",
    "make_cv_plan",
    "make_scenario",
    "median_heuristic",
    "misclassification",
    "mse_target",
    "predict",
    "primal_objective",
    "primal_subgradient_oracle",
    "rate_slope",
    "ratio_eval",
    "ratio_raw",
    "select",
    "solve_box_qp",
    "solve_weighted_ridge",
    "truncation_level",
]
