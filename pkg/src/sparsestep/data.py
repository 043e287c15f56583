"""Shared container for regression data.

A :class:`Dataset` bundles a design matrix with its response vector and,
for simulated data, the ground-truth coefficient vector.  Instances are
frozen; estimators treat them as read-only, so a single dataset can be
shared across concurrent fits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Dataset:
    """Design matrix ``X`` (n x m), response ``y`` (n), optional truth.

    Parameters
    ----------
    X : np.ndarray
        Two-dimensional float design matrix.
    y : np.ndarray
        Response vector with one entry per row of ``X``.
    beta_true : np.ndarray, optional
        Ground-truth coefficients for simulated data (length m).
    dataset_id : str
        Stable identifier used in benchmark records.
    meta : dict
        Free-form generation metadata.
    """

    X: np.ndarray
    y: np.ndarray
    beta_true: np.ndarray | None = None
    dataset_id: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError(f"X must be 2-D, got shape {X.shape}")
        if y.ndim != 1:
            raise ValueError(f"y must be 1-D, got shape {y.shape}")
        if y.shape[0] != X.shape[0]:
            raise ValueError(
                f"X has {X.shape[0]} rows but y has {y.shape[0]} entries"
            )
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if self.beta_true is not None:
            bt = np.asarray(self.beta_true, dtype=np.float64)
            if bt.shape != (X.shape[1],):
                raise ValueError(
                    f"beta_true has shape {bt.shape}, expected ({X.shape[1]},)"
                )
            object.__setattr__(self, "beta_true", bt)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.X.shape[1]
