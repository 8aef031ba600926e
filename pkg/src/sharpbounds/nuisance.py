"""Nuisance estimation: logistic propensities and the conditional quantile grid.

The propensity model is a plain logistic regression fit by iteratively
reweighted least squares.  The quantile model fits a linear check-loss
regression at 101 levels (0.00, 0.01, ..., 1.00); the two end levels are
replaced by the sample minimum and maximum of the response, and predictions
are monotone-rearranged across levels so lookups always see a valid quantile
function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SeparationError, SingularDesignError

GRID_LEVELS = np.round(np.linspace(0.0, 1.0, 101), 2)

_COEF_BLOWUP = 1e3


def _sigmoid(t):
    return 0.5 * (1.0 + np.tanh(0.5 * t))


def _with_intercept(features):
    features = np.atleast_2d(np.asarray(features, dtype=float))
    return np.column_stack([np.ones(features.shape[0]), features])


@dataclass(frozen=True)
class PropensityModel:
    """Fitted logistic regression; coefficients include the intercept first."""

    coef: np.ndarray
    converged: bool
    iterations: int

    def predict(self, features):
        return _sigmoid(_with_intercept(features) @ self.coef)


def _logistic_newton_step(design, labels, coef):
    p = _sigmoid(design @ coef)
    grad = design.T @ (labels - p)
    weights = p * (1.0 - p)
    hess = design.T @ (design * weights[:, None])
    try:
        step = np.linalg.solve(hess, grad)
    except np.linalg.LinAlgError as err:
        raise SingularDesignError("singular Hessian in logistic fit") from err
    return step


def fit_logistic(features, labels, max_iter=100, tol=1e-8):
    """Maximum-likelihood logistic regression of binary labels on features.

    Newton (IRLS) iterations from zero; converged when the max coefficient
    step falls below ``tol``.  Raises SeparationError when the labels are
    single-class or the likelihood is unbounded, SingularDesignError on a
    collinear design.
    """
    design = _with_intercept(features)
    labels = np.asarray(labels, dtype=float)
    if labels.min() == labels.max():
        raise SeparationError("labels are single-class")
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise SingularDesignError("design matrix is rank deficient")
    coef = np.zeros(design.shape[1])
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        step = _logistic_newton_step(design, labels, coef)
        coef = coef + step
        if np.max(np.abs(coef)) > _COEF_BLOWUP:
            raise SeparationError("diverging coefficients (perfect separation?)")
        if np.max(np.abs(step)) < tol:
            converged = True
            break
    return PropensityModel(coef=coef, converged=converged, iterations=iterations)


def one_step_update(model, features, labels):
    """Single Newton step of the logistic likelihood from the fitted coefficients.

    Used inside the bootstrap: cheap, and first-order equivalent to a full
    refit on the resampled data.
    """
    design = _with_intercept(features)
    labels = np.asarray(labels, dtype=float)
    if labels.min() == labels.max():
        raise SeparationError("bootstrap labels are single-class")
    step = _logistic_newton_step(design, labels, model.coef)
    return PropensityModel(coef=model.coef + step, converged=False, iterations=1)


def check_loss(residuals, tau):
    """Mean quantile check loss rho_tau of the residuals."""
    r = np.asarray(residuals, dtype=float)
    return float(np.mean(r * (tau - (r < 0))))


def _fit_check_loss(design, response, tau, init, max_iter=60, tol=1e-8):
    """Linear quantile regression at one level by iteratively reweighted LS.

    Minimizes the check loss through the standard |r|-reweighting surrogate
    with a small smoothing floor; deterministic given the inputs.
    """
    coef = init.copy()
    eps = max(1e-6, 1e-6 * float(np.std(response)))
    for _ in range(max_iter):
        r = response - design @ coef
        w = np.abs(tau - (r < 0)) / np.maximum(np.abs(r), eps)
        wx = design * w[:, None]
        try:
            new = np.linalg.solve(wx.T @ design, wx.T @ response)
        except np.linalg.LinAlgError as err:
            raise SingularDesignError("singular design in quantile fit") from err
        if np.max(np.abs(new - coef)) < tol:
            coef = new
            break
        coef = new
    return coef


@dataclass(frozen=True)
class QuantileGridModel:
    """Check-loss fits on the 101-level grid with monotone rearrangement.

    ``coef`` is (101, p); the rows for levels 0.00 and 1.00 are never fit
    (the check loss degenerates there).  Under the default ``edge='fitted'``
    convention those levels predict the trimmed row extremes of the interior
    fits: the single most extreme fitted level per row is discarded as a
    plane-crossing artifact and the next one stands in for the support
    boundary.  A response value can therefore land outside the predicted
    quantile range; downstream infinite-cap formulas turn such exceedances
    into infinite bound contributions.  ``edge='sample'`` substitutes the
    sample minimum / maximum of the response, appropriate when the observed
    range is believed to exhaust the support.
    """

    coef: np.ndarray
    response_min: float
    response_max: float
    feature_recipe: str = ""
    edge: str = "fitted"

    def predict_grid(self, features):
        """(n, 101) matrix of rearranged quantile predictions."""
        design = _with_intercept(features)
        inner = design @ self.coef[1:-1].T
        inner.sort(axis=1)
        grid = np.empty((inner.shape[0], GRID_LEVELS.size))
        if self.edge == "sample":
            grid[:, 1:-1] = inner
            grid[:, 0] = np.minimum(inner[:, 0], self.response_min)
            grid[:, -1] = np.maximum(inner[:, -1], self.response_max)
        else:
            lo = inner[:, 1]
            hi = inner[:, -2]
            grid[:, 1:-1] = np.clip(inner, lo[:, None], hi[:, None])
            grid[:, 0] = lo
            grid[:, -1] = hi
        return grid


def fit_quantile_grid(features, response, feature_recipe="", edge="fitted"):
    """Fit the 101-level linear quantile grid of the response on the features."""
    design = _with_intercept(features)
    response = np.asarray(response, dtype=float)
    if design.shape[0] < design.shape[1]:
        raise SingularDesignError("fewer observations than features")
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise SingularDesignError("design matrix is rank deficient")
    p = design.shape[1]
    coef = np.zeros((GRID_LEVELS.size, p))
    ls_init, *_ = np.linalg.lstsq(design, response, rcond=None)
    zero = np.zeros(p)
    for k, tau in enumerate(GRID_LEVELS):
        if tau in (0.0, 1.0):
            continue
        fit = _fit_check_loss(design, response, tau, ls_init)
        # IRLS is a surrogate; never accept a fit worse than the zero vector
        if check_loss(response - design @ fit, tau) <= check_loss(response, tau):
            coef[k] = fit
        else:
            coef[k] = zero
    return QuantileGridModel(
        coef=coef,
        response_min=float(response.min()),
        response_max=float(response.max()),
        feature_recipe=feature_recipe,
        edge=edge,
    )


def grid_index(tau_hat):
    """Nearest grid level to tau_hat, ties rounding down (0.675 -> 0.67)."""
    t = np.asarray(tau_hat, dtype=float)
    idx = np.ceil(t * 100.0 - 0.5).astype(int)
    idx = np.clip(idx, 0, 100)
    return idx if idx.ndim else int(idx)


def predict_quantile(model, features, tau_hat):
    """Rearranged quantile prediction at the grid level nearest tau_hat."""
    features = np.atleast_2d(np.asarray(features, dtype=float))
    grid = model.predict_grid(features)
    idx = np.atleast_1d(grid_index(np.broadcast_to(tau_hat, (features.shape[0],))))
    out = grid[np.arange(features.shape[0]), idx]
    return out if np.asarray(tau_hat).ndim or features.shape[0] > 1 else float(out[0])
