"""Penalty functions for sparse regression.

The SparseStep penalty ``lam * b^2 / (b^2 + gamma^2)`` is a smooth,
bounded approximation of the exact counting penalty ``lam * [b != 0]``:
as ``gamma`` shrinks toward zero the approximation sharpens and the
summed penalty approaches ``lam`` times the number of nonzero entries.
The classical ridge (p = 2) and lasso (p = 1) penalties are provided by
:func:`lp_penalty`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset


@dataclass(frozen=True)
class PenaltyParams:
    """Regularization weight ``lam`` and approximation sharpness ``gamma``.

    ``gamma`` is stored unsquared (the annealing schedule divides gamma
    itself); formulas square it internally.  ``gamma = 0`` is rejected:
    the annealing loop never reaches it and the penalty would degenerate
    to 0/0 at the origin.
    """

    lam: float
    gamma: float

    def __post_init__(self) -> None:
        if self.lam < 0:
            raise ValueError(f"lam must be nonnegative, got {self.lam}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be strictly positive, got {self.gamma}")


def l0_norm(beta: np.ndarray, tol: float = 0.0) -> int:
    """Count entries with ``|beta_j| > tol``.

    With the default ``tol = 0`` this is the exact counting norm (the
    number of nonzero entries).  A positive tolerance gives the tolerant
    count used by sparsity metrics and final-step thresholding.
    """
    if tol < 0:
        raise ValueError(f"tol must be nonnegative, got {tol}")
    beta = np.asarray(beta, dtype=np.float64)
    return int(np.count_nonzero(np.abs(beta) > tol))


def lp_penalty(beta: np.ndarray, p: float, lam: float) -> float:
    """Return ``lam * sum_j |beta_j|^p`` (ridge for p=2, lasso for p=1)."""
    if p <= 0:
        raise ValueError(f"p must be positive, got {p}")
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    beta = np.asarray(beta, dtype=np.float64)
    return float(lam * np.sum(np.abs(beta) ** p))


def sparsestep_penalty(beta_j, params: PenaltyParams):
    """Evaluate ``lam * b^2 / (b^2 + gamma^2)`` elementwise.

    The value lies in ``[0, lam)`` for finite ``b``, is even in ``b``,
    and is nondecreasing in ``|b|``.  Accepts scalars or arrays.
    """
    b2 = np.square(np.asarray(beta_j, dtype=np.float64))
    g2 = params.gamma * params.gamma
    out = params.lam * b2 / (b2 + g2)
    return float(out) if np.isscalar(beta_j) else out


def sparsestep_gradient(beta_j, params: PenaltyParams):
    """Derivative of :func:`sparsestep_penalty` in ``b``.

    Equals ``lam * 2 * gamma^2 * b / (b^2 + gamma^2)^2``; odd in ``b``
    and vanishing as ``|b| -> inf``, which is what makes large
    coefficients escape shrinkage.
    """
    b = np.asarray(beta_j, dtype=np.float64)
    g2 = params.gamma * params.gamma
    out = params.lam * 2.0 * g2 * b / np.square(b * b + g2)
    return float(out) if np.isscalar(beta_j) else out


def sparsestep_loss(dataset: Dataset, beta: np.ndarray, params: PenaltyParams) -> float:
    """Residual sum of squares plus the summed SparseStep penalty.

    ``||y - X beta||^2 + lam * sum_j beta_j^2 / (beta_j^2 + gamma^2)``.
    """
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape != (dataset.m,):
        raise ValueError(
            f"beta has shape {beta.shape}, expected ({dataset.m},)"
        )
    r = dataset.y - dataset.X @ beta
    return float(r @ r + np.sum(sparsestep_penalty(beta, params)))
