"""Non-adversarial reference imputers: per-feature means and round-robin
ridge regression. Both are deterministic and preserve observed entries exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DataMatrix, MaskMatrix, check_paired
from .errors import DataError


@dataclass(frozen=True)
class MeanImputer:
    """Per-feature means estimated from observed entries."""

    per_feature_mean: np.ndarray

    def __post_init__(self) -> None:
        mu = np.asarray(self.per_feature_mean, dtype=np.float64).copy()
        if mu.ndim != 1:
            raise DataError("per_feature_mean must be 1-D")
        if not np.isfinite(mu).all():
            raise DataError("per_feature_mean must be finite")
        mu.setflags(write=False)
        object.__setattr__(self, "per_feature_mean", mu)


def fit_mean_imputer(x: DataMatrix, m: MaskMatrix) -> MeanImputer:
    check_paired(x, m)
    observed = m.values > 0.5
    counts = observed.sum(axis=0)
    if (counts == 0).any():
        bad = int(np.flatnonzero(counts == 0)[0])
        raise DataError(f"feature {bad} has no observed entries; cannot fit means")
    sums = np.where(observed, x.values, 0.0).sum(axis=0)
    return MeanImputer(sums / counts)


def mean_impute(x: DataMatrix, m: MaskMatrix, imputer: MeanImputer | None = None) -> DataMatrix:
    """Fill missing entries with per-feature means (fit on (x, m) unless given)."""
    check_paired(x, m)
    if imputer is None:
        imputer = fit_mean_imputer(x, m)
    if imputer.per_feature_mean.shape[0] != x.n_features:
        raise DataError(
            f"imputer covers {imputer.per_feature_mean.shape[0]} features, "
            f"data has {x.n_features}"
        )
    observed = m.values > 0.5
    return x.with_values(np.where(observed, x.values, imputer.per_feature_mean))


def _ridge_fit(a: np.ndarray, y: np.ndarray, ridge: float) -> tuple[np.ndarray, float]:
    """Ridge regression with an unpenalized intercept, via centered normal equations."""
    a_mean = a.mean(axis=0)
    y_mean = y.mean()
    a_c = a - a_mean
    y_c = y - y_mean
    gram = a_c.T @ a_c + ridge * np.eye(a.shape[1])
    w = np.linalg.solve(gram, a_c.T @ y_c)
    b = y_mean - float(a_mean @ w)
    return w, b


def iterative_impute(x: DataMatrix, m: MaskMatrix, n_rounds: int = 10, ridge: float = 1e-3) -> DataMatrix:
    """Round-robin regression imputation.

    Missing entries start at per-feature means; then for ``n_rounds`` passes,
    each feature in index order is re-predicted from all the others by ridge
    regression fit on the rows where that feature is observed. ``n_rounds = 0``
    returns the mean initialization unchanged.
    """
    check_paired(x, m)
    if n_rounds < 0:
        raise DataError("n_rounds must be >= 0")
    if n_rounds > 0 and ridge <= 0.0:
        raise DataError("ridge must be positive")
    filled = mean_impute(x, m).values.copy()
    observed = m.values > 0.5
    d = x.n_features
    if d == 1:
        return x.with_values(filled)
    for _ in range(n_rounds):
        for j in range(d):
            miss_rows = np.flatnonzero(~observed[:, j])
            if miss_rows.size == 0:
                continue
            obs_rows = np.flatnonzero(observed[:, j])
            others = [k for k in range(d) if k != j]
            w, b = _ridge_fit(filled[np.ix_(obs_rows, others)], x.values[obs_rows, j], ridge)
            filled[miss_rows, j] = filled[np.ix_(miss_rows, others)] @ w + b
    return x.with_values(filled)
