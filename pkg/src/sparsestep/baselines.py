"""Reference estimators and data standardization.

OLS, ridge, and lasso on centered/standardized data.  All estimators
assume (and the benchmark enforces) that columns of ``X`` have mean 0
and the response is centered, so no intercept is estimated.  The lasso
objective is ``||y - X beta||^2 + lam * sum_j |beta_j|`` (no 1/(2n)
factor), solved by cyclic coordinate descent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .solver import spd_solve

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a hard dependency, but degrade gracefully
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


class ConvergenceError(RuntimeError):
    """Raised when coordinate descent exhausts its sweep budget.

    Carries the last iterate in ``beta`` for diagnosis.
    """

    def __init__(self, message: str, beta: np.ndarray):
        super().__init__(message)
        self.beta = beta


@dataclass(frozen=True)
class StandardizationParams:
    """Per-column centering/scaling of X and centering of y.

    ``column_scales`` uses population scaling, i.e. each column is
    divided by ``sqrt(mean((x - xbar)^2))``, so on standardized data
    ``X'X`` equals n times the sample correlation matrix.
    """

    column_means: np.ndarray
    column_scales: np.ndarray
    response_mean: float


def standardize(dataset: Dataset) -> tuple[Dataset, StandardizationParams]:
    """Center/scale X columns to mean 0, unit variance; center y.

    Constant columns cannot be scaled and raise a ``ValueError`` naming
    the offending column.
    """
    if dataset.n < 2:
        raise ValueError(f"standardization needs n >= 2 rows, got {dataset.n}")
    X, y = dataset.X, dataset.y
    means = X.mean(axis=0)
    centered = X - means
    scales = np.sqrt(np.mean(centered**2, axis=0))
    bad = np.flatnonzero(scales == 0)
    if bad.size:
        raise ValueError(f"column {int(bad[0])} is constant and cannot be scaled")
    y_mean = float(y.mean())
    std = Dataset(
        X=centered / scales,
        y=y - y_mean,
        beta_true=dataset.beta_true,
        dataset_id=dataset.dataset_id,
        meta=dataset.meta,
    )
    return std, StandardizationParams(means, scales, y_mean)


def apply_standardization(dataset: Dataset, params: StandardizationParams) -> Dataset:
    """Transform held-out data with parameters learned elsewhere."""
    return Dataset(
        X=(dataset.X - params.column_means) / params.column_scales,
        y=dataset.y - params.response_mean,
        beta_true=dataset.beta_true,
        dataset_id=dataset.dataset_id,
        meta=dataset.meta,
    )


def invert_standardization(dataset: Dataset, params: StandardizationParams) -> Dataset:
    """Undo :func:`standardize` / :func:`apply_standardization`."""
    return Dataset(
        X=dataset.X * params.column_scales + params.column_means,
        y=dataset.y + params.response_mean,
        beta_true=dataset.beta_true,
        dataset_id=dataset.dataset_id,
        meta=dataset.meta,
    )


def _gram_parts(
    dataset: Dataset, gram: np.ndarray | None, xty: np.ndarray | None
) -> tuple[np.ndarray, np.ndarray]:
    G = dataset.X.T @ dataset.X if gram is None else np.asarray(gram, dtype=np.float64)
    c = dataset.X.T @ dataset.y if xty is None else np.asarray(xty, dtype=np.float64)
    return G, c


def ols_fit(
    dataset: Dataset,
    *,
    gram: np.ndarray | None = None,
    xty: np.ndarray | None = None,
) -> np.ndarray:
    """Least-squares coefficients ``(X'X)^{-1} X'y``; raises if singular."""
    G, c = _gram_parts(dataset, gram, xty)
    return spd_solve(G, c, min_rcond=1e-13)


def ridge_fit(
    dataset: Dataset,
    lam: float,
    *,
    gram: np.ndarray | None = None,
    xty: np.ndarray | None = None,
) -> np.ndarray:
    """Ridge coefficients ``(X'X + lam I)^{-1} X'y``."""
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    G, c = _gram_parts(dataset, gram, xty)
    if lam == 0:
        return spd_solve(G, c, min_rcond=1e-13)
    A = np.array(G, copy=True)
    A[np.diag_indices_from(A)] += lam
    return spd_solve(A, c)


@njit(cache=True)
def _cd_sweeps(gram, xty, half_lam, beta, max_sweeps, tol):
    """Cyclic coordinate descent on the gram form; returns (sweeps, converged)."""
    m = beta.shape[0]
    for sweep in range(max_sweeps):
        max_delta = 0.0
        for j in range(m):
            gjj = gram[j, j]
            if gjj <= 0.0:
                beta[j] = 0.0
                continue
            # partial residual correlation with column j
            rho = xty[j] - gram[j] @ beta + gjj * beta[j]
            if rho > half_lam:
                new = (rho - half_lam) / gjj
            elif rho < -half_lam:
                new = (rho + half_lam) / gjj
            else:
                new = 0.0
            delta = abs(new - beta[j])
            if delta > max_delta:
                max_delta = delta
            beta[j] = new
        if max_delta < tol:
            return sweep + 1, True
    return max_sweeps, False


def lasso_fit(
    dataset: Dataset,
    lam: float,
    *,
    gram: np.ndarray | None = None,
    xty: np.ndarray | None = None,
    tol: float = 1e-8,
    max_sweeps: int = 10_000,
) -> np.ndarray:
    """Minimize ``||y - X beta||^2 + lam * sum |beta_j|`` by coordinate descent.

    Cyclic order, cold start at zero, converged when the largest
    coefficient change in a sweep is below ``tol``.  The scalar update is
    the soft threshold ``sign(rho) * max(|rho| - lam/2, 0) / ||x_j||^2``
    where ``rho`` is the partial-residual correlation with column j.
    Raises :class:`ConvergenceError` (carrying the last iterate) if the
    sweep budget is exhausted.
    """
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    G, c = _gram_parts(dataset, gram, xty)
    beta = np.zeros(dataset.m)
    sweeps, converged = _cd_sweeps(
        np.ascontiguousarray(G), np.ascontiguousarray(c),
        0.5 * lam, beta, max_sweeps, tol,
    )
    if not converged:
        raise ConvergenceError(
            f"coordinate descent did not converge in {sweeps} sweeps "
            f"(lam={lam}, tol={tol})",
            beta,
        )
    return beta
