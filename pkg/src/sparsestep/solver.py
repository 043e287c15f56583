"""The SparseStep estimator.

The nonconvex subset-selection objective is minimized by iterative
majorization: at the current iterate ``alpha`` each penalty term is
replaced by a quadratic surrogate that touches it at ``alpha`` and
dominates it everywhere, so every update solves a ridge-like linear
system and never increases the loss.  The full fit anneals the
sharpness parameter ``gamma`` downward from a very smooth (ridge-like)
penalty toward the exact counting penalty, taking a fixed small number
of majorization steps per level, and finally snaps near-zero
coefficients to exact zeros.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .data import Dataset
from .penalty import PenaltyParams, sparsestep_loss


@dataclass(frozen=True)
class SolverSchedule:
    """Annealing hyperparameters plus the regularization weight ``lam``.

    ``gamma`` starts at ``gamma0`` and is divided by ``gamma_step`` after
    every block of ``t_max`` majorization updates, until it drops below
    ``gamma_stop``.  Coefficients with ``|beta_j| < epsilon`` are zeroed
    at the end.  ``beta0 = None`` starts from the zero vector.

    The defaults are the reference settings used throughout the
    simulation study: gamma0=1e6, gamma_stop=1e-8, gamma_step=2,
    t_max=2, epsilon=1e-7, beta0=0.
    """

    lam: float
    gamma0: float = 1e6
    gamma_stop: float = 1e-8
    gamma_step: float = 2.0
    t_max: int = 2
    epsilon: float = 1e-7
    beta0: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.lam < 0:
            raise ValueError(f"lam must be nonnegative, got {self.lam}")
        if not self.gamma0 > self.gamma_stop > 0:
            raise ValueError(
                f"need gamma0 > gamma_stop > 0, got {self.gamma0}, {self.gamma_stop}"
            )
        if self.gamma_step <= 1:
            raise ValueError(
                f"gamma_step must exceed 1 or the annealing loop never "
                f"terminates, got {self.gamma_step}"
            )
        if self.t_max < 1:
            raise ValueError(f"t_max must be at least 1, got {self.t_max}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon}")
        if self.beta0 is not None:
            object.__setattr__(
                self, "beta0", np.asarray(self.beta0, dtype=np.float64)
            )

    @property
    def n_levels(self) -> int:
        """Number of gamma levels the annealing loop visits."""
        count = 0
        gamma = self.gamma0
        while gamma > self.gamma_stop:
            count += 1
            gamma /= self.gamma_step
        return count


@dataclass(frozen=True)
class MajorizerState:
    """Quadratic surrogate of the penalty at supporting point ``alpha``.

    ``omega_diag[j] = gamma^2 / (alpha_j^2 + gamma^2)^2`` is the
    curvature of the surrogate for coordinate j; it is positive and at
    most ``1/gamma^2``, with equality exactly when ``alpha_j = 0``.
    ``delta[j] = alpha_j^2 / gamma`` feeds the surrogate's constant term
    ``lam * delta' Omega delta``.
    """

    omega_diag: np.ndarray
    delta: np.ndarray
    support_point: np.ndarray


@dataclass(frozen=True)
class FitResult:
    """Outcome of one SparseStep fit.

    ``support`` is derived from the post-threshold ``beta``, so the
    thresholding constant ``epsilon`` is the single source of sparsity
    truth.  ``descent_trace`` holds one ``(gamma, iteration, loss)``
    triple per inner update; within a fixed-gamma block the loss is
    non-increasing.  ``final_loss`` is evaluated at the last annealing
    level, where the penalty term is numerically ``lam`` times the
    number of surviving nonzeros.
    """

    beta: np.ndarray
    support: frozenset[int]
    final_loss: float
    descent_trace: list[tuple[float, int, float]] = field(repr=False)
    wall_time: float = 0.0


def build_omega(alpha: np.ndarray, gamma: float) -> MajorizerState:
    """Construct the diagonal surrogate curvature at supporting point alpha."""
    if gamma <= 0:
        raise ValueError(f"gamma must be strictly positive, got {gamma}")
    alpha = np.asarray(alpha, dtype=np.float64)
    g2 = gamma * gamma
    a2 = alpha * alpha
    omega = g2 / np.square(a2 + g2)
    return MajorizerState(omega_diag=omega, delta=a2 / gamma, support_point=alpha)


def majorizer_value(x: float, y: float, gamma: float) -> float:
    """Quadratic surrogate ``(gamma^2 x^2 + y^4) / (y^2 + gamma^2)^2``.

    Majorizes the unit-weight penalty ``x^2 / (x^2 + gamma^2)``: equal
    at ``x = y`` (value and slope) and above it everywhere else.
    """
    if gamma <= 0:
        raise ValueError(f"gamma must be strictly positive, got {gamma}")
    g2 = gamma * gamma
    y2 = y * y
    return (g2 * x * x + y2 * y2) / (y2 + g2) ** 2


def spd_solve(
    A: np.ndarray, b: np.ndarray, *, min_rcond: float | None = None
) -> np.ndarray:
    """Solve ``A x = b`` for symmetric positive definite ``A``.

    Uses a Cholesky factorization; a non-positive pivot (singular or
    indefinite input) raises ``LinAlgError``.  The solution is verified
    to satisfy ``||A x - b|| <= 1e-8 * (1 + ||b||)``.

    Exactly rank-deficient systems can slip past the factorization with
    a rounded near-zero pivot and a consistent right-hand side; callers
    that must reject them (the unpenalized normal equations) pass
    ``min_rcond`` to bound the reciprocal condition estimate from below.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    try:
        factor = scipy.linalg.cho_factor(A, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"Cholesky factorization failed, matrix is not positive definite: {exc}"
        ) from exc
    if min_rcond is not None:
        rcond, info = scipy.linalg.lapack.dpocon(
            factor[0], np.linalg.norm(A, 1), uplo=b"L"
        )
        if info != 0 or rcond < min_rcond:
            raise np.linalg.LinAlgError(
                f"system is numerically rank-deficient "
                f"(reciprocal condition estimate {rcond:.3e})"
            )
    x = scipy.linalg.cho_solve(factor, b, check_finite=False)
    residual = float(np.linalg.norm(A @ x - b))
    bound = 1e-8 * (1.0 + float(np.linalg.norm(b)))
    if residual > bound:
        raise np.linalg.LinAlgError(
            f"linear solve residual {residual:.3e} exceeds bound {bound:.3e}; "
            f"system is too ill-conditioned"
        )
    return x


def im_update(
    gram: np.ndarray,
    xty: np.ndarray,
    lam: float,
    state: MajorizerState,
) -> np.ndarray:
    """One majorization step: solve ``(X'X + lam * Omega) beta = X'y``.

    This is the unique minimizer of the quadratic surrogate of the full
    loss at ``state.support_point``.  With ``lam = 0`` it reduces to the
    normal equations; a rank-deficient system then raises.
    """
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    if lam == 0:
        # unpenalized normal equations: forbid rank-deficient systems
        return spd_solve(np.asarray(gram, dtype=np.float64), xty, min_rcond=1e-13)
    A = np.array(gram, dtype=np.float64, copy=True)
    A[np.diag_indices_from(A)] += lam * state.omega_diag
    return spd_solve(A, xty)


def threshold(beta: np.ndarray, epsilon: float) -> np.ndarray:
    """Zero entries with ``|beta_j| < epsilon`` (strict inequality)."""
    if epsilon < 0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")
    beta = np.asarray(beta, dtype=np.float64)
    return np.where(np.abs(beta) < epsilon, 0.0, beta)


def sparsestep_fit(
    dataset: Dataset,
    schedule: SolverSchedule,
    *,
    gram: np.ndarray | None = None,
    xty: np.ndarray | None = None,
    record_trace: bool = True,
) -> FitResult:
    """Run the full annealed majorization loop on ``dataset``.

    ``X'X`` and ``X'y`` are computed once and reused across all updates
    (pass ``gram``/``xty`` to share them across fits on the same data).
    Each gamma level runs exactly ``t_max`` updates; no early stopping.
    With ``record_trace=False`` the per-iteration loss evaluations are
    skipped, which benchmark sweeps use to save time.
    """
    if dataset.n < 1 or dataset.m < 1:
        raise ValueError(f"dataset must be nonempty, got n={dataset.n}, m={dataset.m}")
    t0 = time.perf_counter()
    X, y = dataset.X, dataset.y
    G = X.T @ X if gram is None else np.asarray(gram, dtype=np.float64)
    c = X.T @ y if xty is None else np.asarray(xty, dtype=np.float64)

    if schedule.beta0 is None:
        beta = np.zeros(dataset.m)
    else:
        if schedule.beta0.shape != (dataset.m,):
            raise ValueError(
                f"beta0 has shape {schedule.beta0.shape}, expected ({dataset.m},)"
            )
        beta = schedule.beta0.copy()

    trace: list[tuple[float, int, float]] = []
    gamma = schedule.gamma0
    last_gamma = gamma
    while gamma > schedule.gamma_stop:
        for t in range(1, schedule.t_max + 1):
            state = build_omega(beta, gamma)
            beta = im_update(G, c, schedule.lam, state)
            if record_trace:
                loss = sparsestep_loss(
                    dataset, beta, PenaltyParams(schedule.lam, gamma)
                )
                trace.append((gamma, t, loss))
        last_gamma = gamma
        gamma /= schedule.gamma_step

    beta = threshold(beta, schedule.epsilon)
    support = frozenset(int(j) for j in np.flatnonzero(beta))
    final_loss = sparsestep_loss(
        dataset, beta, PenaltyParams(schedule.lam, last_gamma)
    )
    return FitResult(
        beta=beta,
        support=support,
        final_loss=final_loss,
        descent_trace=trace,
        wall_time=time.perf_counter() - t0,
    )
