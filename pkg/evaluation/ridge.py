import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from representations.exceptions import ConfigError, DimensionError

logger = logging.getLogger(__name__)

RESIDUAL_TOLERANCE = 1e-8


@dataclass
class RidgeModel:
    weights: np.ndarray
    intercept: np.ndarray
    alpha: float
    residual: float = 0.0

    def predict(self, X):
        return np.asarray(X, dtype=np.float64) @ self.weights + self.intercept


def solve_ridge(X, y, alpha, fit_intercept=True):
    """Closed-form solve of (X'X + alpha I) w = X'y.

    With ``fit_intercept`` the system is solved on centered data and the
    intercept is recovered from the means, so it is never penalized.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DimensionError(f"ridge: X {X.shape} and y {y.shape} disagree on rows")
    if alpha <= 0:
        raise ConfigError(f"ridge alpha must be positive, got {alpha}")
    if fit_intercept:
        x_mean, y_mean = X.mean(axis=0), y.mean(axis=0)
        X, y = X - x_mean, y - y_mean
    gram = X.T @ X + alpha * np.eye(X.shape[1])
    rhs = X.T @ y
    weights = linalg.solve(gram, rhs, assume_a="pos")
    residual = float(np.max(np.abs(gram @ weights - rhs))) if rhs.size else 0.0
    if residual > RESIDUAL_TOLERANCE * max(1.0, float(np.max(np.abs(rhs), initial=0.0))):
        logger.warning("ridge solve residual %.3e exceeds tolerance (alpha=%s)", residual, alpha)
    intercept = y_mean - x_mean @ weights if fit_intercept else np.zeros(weights.shape[1:])
    return RidgeModel(weights=weights, intercept=intercept, alpha=float(alpha), residual=residual)


def mse(y_true, y_pred):
    return float(np.mean((np.asarray(y_true) - np.asarray(y_pred)) ** 2))


def mae(y_true, y_pred):
    return float(np.mean(np.abs(np.asarray(y_true) - np.asarray(y_pred))))


def ridge_fit(X, y, alphas, X_valid=None, y_valid=None, valid_fraction=0.2, fit_intercept=True):
    """Pick alpha by validation MSE, then refit on train + validation.

    Without an explicit validation set the last ``valid_fraction`` of the rows
    is held out (rows are assumed chronological).
    """
    alphas = list(alphas)
    if not alphas:
        raise ConfigError("ridge alpha grid is empty")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] != y.shape[0]:
        raise DimensionError(f"ridge: X has {X.shape[0]} rows, y has {y.shape[0]}")
    if X_valid is None:
        n_valid = max(1, int(round(valid_fraction * X.shape[0])))
        X, X_valid = X[:-n_valid], X[-n_valid:]
        y, y_valid = y[:-n_valid], y[-n_valid:]

    scores = [mse(y_valid, solve_ridge(X, y, alpha, fit_intercept).predict(X_valid)) for alpha in alphas]
    best = alphas[int(np.argmin(scores))]
    logger.debug("ridge validation MSE by alpha: %s", dict(zip(alphas, scores)))
    return solve_ridge(
        np.concatenate([X, X_valid]),
        np.concatenate([y, y_valid]),
        best,
        fit_intercept,
    )
