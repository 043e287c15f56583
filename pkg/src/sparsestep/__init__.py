"""Sparse linear regression via an annealed subset-selection penalty.

The estimator minimizes ``||y - X b||^2 + lam * sum_j b_j^2/(b_j^2 + g^2)``
by iterative majorization while annealing ``g`` toward zero, yielding
sparse, unshrunken coefficient estimates.  The package also ships the
OLS/ridge/lasso baselines, a deterministic synthetic-data generator,
and a benchmark harness with rank-based significance tests.
"""

__version__ = "0.1.0"

from .baselines import (
    ConvergenceError,
    StandardizationParams,
    apply_standardization,
    invert_standardization,
    lasso_fit,
    ols_fit,
    ridge_fit,
    standardize,
)
from .benchmark import BenchmarkReport, MetricRecord, run_benchmark, write_report
from .data import Dataset
from .datagen import (
    GeneratedDataset,
    ScenarioSpec,
    draw_design,
    generate_dataset,
    generate_scenario_grid,
    load_dataset,
    make_beta,
    make_correlation,
    make_response,
    save_dataset,
)
from .evaluation import (
    HolmResult,
    PerfectConsistencyError,
    RankMatrix,
    best_worst_counts,
    beta_mse,
    cv_grid_search,
    default_lambda_grid,
    fractional_ranks,
    friedman_test,
    holm_stepdown,
    kfold_splits,
    pairwise_z_pvalues,
    sparsity_hitrate,
    test_mse,
)
from .penalty import (
    PenaltyParams,
    l0_norm,
    lp_penalty,
    sparsestep_gradient,
    sparsestep_loss,
    sparsestep_penalty,
)
from .solver import (
    FitResult,
    MajorizerState,
    SolverSchedule,
    build_omega,
    im_update,
    majorizer_value,
    sparsestep_fit,
    spd_solve,
    threshold,
)

__all__ = [
    "BenchmarkReport",
    "ConvergenceError",
    "Dataset",
    "FitResult",
    "GeneratedDataset",
    "HolmResult",
    "MajorizerState",
    "MetricRecord",
    "PenaltyParams",
    "PerfectConsistencyError",
    "RankMatrix",
    "ScenarioSpec",
    "SolverSchedule",
    "StandardizationParams",
    "apply_standardization",
    "best_worst_counts",
    "beta_mse",
    "build_omega",
    "cv_grid_search",
    "default_lambda_grid",
    "draw_design",
    "fractional_ranks",
    "friedman_test",
    "generate_dataset",
    "generate_scenario_grid",
    "holm_stepdown",
    "im_update",
    "invert_standardization",
    "kfold_splits",
    "l0_norm",
    "lasso_fit",
    "load_dataset",
    "lp_penalty",
    "majorizer_value",
    "make_beta",
    "make_correlation",
    "make_response",
    "ols_fit",
    "pairwise_z_pvalues",
    "ridge_fit",
    "run_benchmark",
    "save_dataset",
    "sparsestep_fit",
    "sparsestep_gradient",
    "sparsestep_loss",
    "sparsestep_penalty",
    "sparsity_hitrate",
    "spd_solve",
    "standardize",
    "test_mse",
    "threshold",
    "write_report",
]
