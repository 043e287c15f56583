"""Metrics, cross-validated grid search, and rank-based comparisons.

Methods are compared per dataset by fractional ranks (smaller is
better, ties within an absolute threshold share the average rank), the
Friedman statistic with its F-form correction decides whether any
method differs, and a step-down procedure on mean-rank z-tests locates
which methods differ from a reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.stats

from .baselines import ConvergenceError, lasso_fit, ols_fit, ridge_fit, standardize
from .data import Dataset
from .solver import SolverSchedule, sparsestep_fit

EQUALITY_THRESHOLD = 1e-4
LAMBDA_GRID_POINTS = 101
LAMBDA_GRID_LOW_EXP = -15
LAMBDA_GRID_HIGH_EXP = 15


def default_lambda_grid(points: int = LAMBDA_GRID_POINTS) -> np.ndarray:
    """Logarithmically spaced grid of 2**e for e equally spaced in [-15, 15]."""
    if points < 1:
        raise ValueError(f"grid needs at least one point, got {points}")
    return 2.0 ** np.linspace(LAMBDA_GRID_LOW_EXP, LAMBDA_GRID_HIGH_EXP, points)


# ---------------------------------------------------------------------------
# Point metrics
# ---------------------------------------------------------------------------

def beta_mse(estimate: np.ndarray, truth: np.ndarray) -> float:
    """Mean squared error of the coefficient estimate against the truth."""
    estimate = np.asarray(estimate, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if estimate.shape != truth.shape:
        raise ValueError(f"length mismatch: {estimate.shape} vs {truth.shape}")
    return float(np.mean((estimate - truth) ** 2))


def sparsity_hitrate(
    estimate: np.ndarray, truth: np.ndarray, tol: float = 0.0
) -> float:
    """Fraction of coefficients whose zero/nonzero status is correct.

    An estimated coefficient counts as zero when ``|b| <= tol``; true
    zeros are exact by construction.
    """
    estimate = np.asarray(estimate, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if estimate.shape != truth.shape:
        raise ValueError(f"length mismatch: {estimate.shape} vs {truth.shape}")
    est_zero = np.abs(estimate) <= tol
    true_zero = truth == 0
    return float(np.mean(est_zero == true_zero))


def test_mse(y_pred: np.ndarray, y_true: np.ndarray) -> float:
    """Mean squared prediction error."""
    y_pred = np.asarray(y_pred, dtype=np.float64)
    y_true = np.asarray(y_true, dtype=np.float64)
    if y_pred.shape != y_true.shape:
        raise ValueError(f"length mismatch: {y_pred.shape} vs {y_true.shape}")
    return float(np.mean((y_pred - y_true) ** 2))


# ---------------------------------------------------------------------------
# Methods and cross-validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Method:
    """A fit routine exposed to the benchmark, keyed by ``method_id``.

    ``fit(dataset, lam, gram, xty)`` returns coefficients for the
    (standardized) dataset; ``gram``/``xty`` may be precomputed and
    shared across the lambda grid.
    """

    method_id: str
    uses_lambda: bool
    fit: Callable[..., np.ndarray]


def _fit_sparsestep(dataset, lam, gram=None, xty=None):
    result = sparsestep_fit(
        dataset, SolverSchedule(lam=lam), gram=gram, xty=xty, record_trace=False
    )
    return result.beta


METHODS: dict[str, Method] = {
    "ols": Method("ols", False, lambda ds, lam, gram=None, xty=None: ols_fit(ds, gram=gram, xty=xty)),
    "ridge": Method("ridge", True, lambda ds, lam, gram=None, xty=None: ridge_fit(ds, lam, gram=gram, xty=xty)),
    "lasso": Method("lasso", True, lambda ds, lam, gram=None, xty=None: lasso_fit(ds, lam, gram=gram, xty=xty)),
    "sparsestep": Method("sparsestep", True, _fit_sparsestep),
}

#: Exceptions that mark a single (lambda, fold) fit as failed rather than fatal.
FIT_ERRORS = (np.linalg.LinAlgError, ConvergenceError)


def kfold_splits(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Deterministic shuffled partition of range(n) into k folds.

    Fold sizes differ by at most one.  Identical ``(n, k, seed)`` give
    identical folds, which is what guarantees that every method sees the
    same cross-validation splits.
    """
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if k > n:
        raise ValueError(f"cannot split {n} rows into {k} folds")
    order = np.random.default_rng(seed).permutation(n)
    return [np.sort(fold) for fold in np.array_split(order, k)]


def _fit_standardized(
    method: Method,
    std_train: Dataset,
    std_params,
    lam: float,
    gram: np.ndarray | None = None,
    xty: np.ndarray | None = None,
) -> tuple[np.ndarray, float]:
    """Fit on pre-standardized data and map back to the original scale."""
    beta_std = method.fit(std_train, lam, gram, xty)
    coef = beta_std / std_params.column_scales
    intercept = std_params.response_mean - float(coef @ std_params.column_means)
    return coef, intercept


def fit_on_standardized(
    method_id: str, train: Dataset, lam: float
) -> tuple[np.ndarray, float]:
    """Standardize, fit, and return original-scale ``(coef, intercept)``.

    Predictions on raw data are ``X @ coef + intercept`` and ``coef`` is
    directly comparable to a generating coefficient vector.
    """
    std_train, std_params = standardize(train)
    return _fit_standardized(METHODS[method_id], std_train, std_params, lam)


def cv_grid_search(
    method_id: str,
    dataset: Dataset,
    lambda_grid: np.ndarray,
    k: int,
    seed: int,
) -> tuple[float, list[tuple[float, float]]]:
    """Pick the regularization weight by k-fold cross-validation.

    For each lambda the validation MSE is averaged over folds, with
    each fold standardized on its training part only.  The winner
    minimizes the average; ties go to the larger lambda.  A method that
    takes no lambda (OLS) is evaluated once at the conventional 0.  Any
    fold failure invalidates that lambda; if every lambda is invalid the
    search fails.
    """
    method = METHODS[method_id]
    grid = [0.0] if not method.uses_lambda else [float(v) for v in lambda_grid]
    if not grid:
        raise ValueError("lambda grid is empty")

    folds = kfold_splits(dataset.n, k, seed)
    all_idx = np.arange(dataset.n)
    fold_ctx = []
    for val_idx in folds:
        train_idx = np.setdiff1d(all_idx, val_idx, assume_unique=True)
        train = Dataset(X=dataset.X[train_idx], y=dataset.y[train_idx])
        std_train, std_params = standardize(train)
        gram = std_train.X.T @ std_train.X
        xty = std_train.X.T @ std_train.y
        fold_ctx.append(
            (std_train, std_params, gram, xty, dataset.X[val_idx], dataset.y[val_idx])
        )

    curve: list[tuple[float, float]] = []
    for lam in grid:
        errors = []
        for std_train, std_params, gram, xty, X_val, y_val in fold_ctx:
            try:
                coef, intercept = _fit_standardized(
                    method, std_train, std_params, lam, gram, xty
                )
            except FIT_ERRORS:
                errors = None
                break
            errors.append(test_mse(X_val @ coef + intercept, y_val))
        curve.append((lam, math.inf if errors is None else float(np.mean(errors))))

    scores = np.array([score for _, score in curve])
    if not np.any(np.isfinite(scores)):
        raise RuntimeError(
            f"cross-validation failed for every lambda (method={method_id})"
        )
    best_idx = int(np.flatnonzero(scores == scores[np.isfinite(scores)].min()).max())
    return curve[best_idx][0], curve


# ---------------------------------------------------------------------------
# Rank statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RankMatrix:
    """Fractional ranks: rows are datasets, columns are methods."""

    ranks: np.ndarray
    dataset_ids: tuple[str, ...]
    method_ids: tuple[str, ...]
    equality_threshold: float = EQUALITY_THRESHOLD

    @property
    def n_datasets(self) -> int:
        return self.ranks.shape[0]

    @property
    def n_methods(self) -> int:
        return self.ranks.shape[1]

    def mean_ranks(self) -> dict[str, float]:
        means = self.ranks.mean(axis=0)
        return {mid: float(v) for mid, v in zip(self.method_ids, means)}


@dataclass(frozen=True)
class HolmResult:
    """Step-down outcome: one (hypothesis, p, threshold, reject) per row.

    Entries are sorted by ascending p-value; the reject flags are a
    prefix of that order.
    """

    entries: list[tuple[str, float, float, bool]]
    alpha: float

    def rejected(self) -> set[str]:
        return {name for name, _, _, flag in self.entries if flag}


class PerfectConsistencyError(RuntimeError):
    """Ranks are identical (untied) on every dataset, so the F form degenerates.

    Carries the chi-squared statistic in ``chi2``.
    """

    def __init__(self, message: str, chi2: float):
        super().__init__(message)
        self.chi2 = chi2


def fractional_ranks(
    values: np.ndarray, equality_threshold: float = EQUALITY_THRESHOLD
) -> np.ndarray:
    """Ascending fractional ranks with near-ties sharing the average rank.

    Values are sorted and grouped while consecutive gaps are strictly
    below the threshold (transitive clustering); each group receives the
    average of its positional ranks.  Exactly equal values always share
    a rank, so a zero threshold gives conventional fractional ranking.
    Smaller values get smaller ranks.
    """
    values = np.asarray(values, dtype=np.float64)
    k = values.shape[0]
    if k < 1:
        raise ValueError("need at least one value to rank")
    order = np.argsort(values, kind="stable")
    ranks = np.empty(k)
    start = 0
    while start < k:
        stop = start + 1
        while stop < k:
            gap = values[order[stop]] - values[order[stop - 1]]
            if not (gap < equality_threshold or gap == 0.0):
                break
            stop += 1
        ranks[order[start:stop]] = 0.5 * (start + 1 + stop)
        start = stop
    return ranks


def friedman_chi2(rank_matrix: RankMatrix) -> float:
    """Chi-squared rank statistic ``12N/(k(k+1)) * (sum Rbar_j^2 - k(k+1)^2/4)``."""
    n, k = rank_matrix.ranks.shape
    mean_ranks = rank_matrix.ranks.mean(axis=0)
    return float(
        12.0 * n / (k * (k + 1)) * (np.sum(mean_ranks**2) - k * (k + 1) ** 2 / 4.0)
    )


def friedman_test(rank_matrix: RankMatrix) -> tuple[float, float, float]:
    """Friedman test with the F-form correction for the rank matrix.

    Returns ``(chi2, f_stat, p_value)`` where the F statistic is
    ``(N-1) chi2 / (N(k-1) - chi2)`` on ``(k-1, (k-1)(N-1))`` degrees of
    freedom.  Perfectly consistent untied rankings make the denominator
    zero; that raises :class:`PerfectConsistencyError` rather than
    returning an infinite statistic.
    """
    n, k = rank_matrix.ranks.shape
    if n < 2 or k < 2:
        raise ValueError(f"need at least 2 datasets and 2 methods, got {n}, {k}")
    chi2 = friedman_chi2(rank_matrix)
    denom = n * (k - 1) - chi2
    if denom <= 0:
        raise PerfectConsistencyError(
            "method rankings are identical on every dataset; "
            "the F statistic is undefined",
            chi2,
        )
    f_stat = (n - 1) * chi2 / denom
    p_value = float(scipy.stats.f.sf(f_stat, k - 1, (k - 1) * (n - 1)))
    return chi2, f_stat, p_value


def pairwise_z_pvalues(
    rank_matrix: RankMatrix, reference_method: str
) -> dict[str, float]:
    """Two-sided normal p-values for mean-rank gaps against a reference.

    ``z = (Rbar_j - Rbar_ref) / sqrt(k(k+1) / (6N))`` is the standard
    post-hoc statistic for rank benchmarks.
    """
    n, k = rank_matrix.ranks.shape
    if n < 2:
        raise ValueError(f"need at least 2 datasets, got {n}")
    if reference_method not in rank_matrix.method_ids:
        raise ValueError(f"unknown reference method {reference_method!r}")
    means = rank_matrix.mean_ranks()
    se = math.sqrt(k * (k + 1) / (6.0 * n))
    out = {}
    for method_id in rank_matrix.method_ids:
        if method_id == reference_method:
            continue
        z = (means[method_id] - means[reference_method]) / se
        out[method_id] = float(2.0 * scipy.stats.norm.sf(abs(z)))
    return out


def holm_stepdown(p_values: dict[str, float], alpha: float) -> HolmResult:
    """Sequentially rejective multiple comparison at family level ``alpha``.

    Hypotheses are sorted by ascending p; hypothesis i (1-based) is
    rejected while ``p_(i) <= alpha / (h - i + 1)``, stopping at the
    first failure.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    for name, p in p_values.items():
        if not 0 <= p <= 1:
            raise ValueError(f"p-value for {name!r} is {p}, outside [0, 1]")
    h = len(p_values)
    ordered = sorted(p_values.items(), key=lambda item: (item[1], item[0]))
    entries = []
    rejecting = True
    for i, (name, p) in enumerate(ordered, start=1):
        cutoff = alpha / (h - i + 1)
        reject = rejecting and p <= cutoff
        if not reject:
            rejecting = False
        entries.append((name, float(p), cutoff, reject))
    return HolmResult(entries=entries, alpha=alpha)


def best_worst_counts(
    values: np.ndarray,
    method_ids: tuple[str, ...],
    equality_threshold: float = EQUALITY_THRESHOLD,
) -> dict[str, tuple[int, int]]:
    """Count how often each method is best (min) and worst (max) per row.

    Values within the threshold of the row extreme all get credit.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != len(method_ids):
        raise ValueError(
            f"values must be (datasets x {len(method_ids)}), got {values.shape}"
        )
    best = np.zeros(len(method_ids), dtype=int)
    worst = np.zeros(len(method_ids), dtype=int)
    for row in values:
        best += row <= row.min() + equality_threshold
        worst += row >= row.max() - equality_threshold
    return {
        mid: (int(b), int(w)) for mid, b, w in zip(method_ids, best, worst)
    }
