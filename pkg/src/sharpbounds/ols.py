"""Bounds on linear contrasts of OLS coefficients under distribution shift.

The target is delta' * beta_True where beta_True is the population regression
coefficient under the true distribution; a likelihood-ratio band on
dP_True/dP_Obs turns this into the generic reweighting problem with
lambda_i = delta' (X'X/n)^{-1} X_i.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bounds import BoundProblem, SensitivityBand, sharp_bound
from .errors import ConfigError, SingularDesignError


@dataclass(frozen=True)
class OLSConfig:
    """Contrast vector and band for an OLS sensitivity analysis.

    ``delta`` is aligned with the design's columns; the first column is
    assumed to be the intercept and must receive zero weight (shifting the
    intercept is not distinguishable from reweighting).  Scalars or
    per-observation arrays are accepted for the band.
    """

    delta: np.ndarray
    w_lower: float = 1.0
    w_upper: float = 1.0

    def __post_init__(self):
        d = np.asarray(self.delta, dtype=float)
        if d.ndim != 1:
            raise ConfigError("delta must be a vector")
        if d[0] != 0.0:
            raise ConfigError("delta must put zero weight on the intercept column")
        object.__setattr__(self, "delta", d)


def ols_lambda(design, delta):
    """Per-observation lambda values delta' (X'X/n)^{-1} X_i."""
    design = np.asarray(design, dtype=float)
    n = design.shape[0]
    gram = design.T @ design / n
    try:
        core = np.linalg.solve(gram, np.asarray(delta, dtype=float))
    except np.linalg.LinAlgError as err:
        raise SingularDesignError("X'X is singular") from err
    return design @ core


def ols_bounds(y, design, config, group_key=None):
    """Bound pair on delta' * beta under the config's likelihood-ratio band.

    By default the whole sample forms one conditioning cell (marginal
    quantiles of lambda*Y); pass ``group_key`` for finer cells on which
    E[W | cell] = 1 is enforced separately.
    """
    y = np.asarray(y, dtype=float)
    design = np.asarray(design, dtype=float)
    if design.ndim != 2 or design.shape[0] != y.size:
        raise ConfigError("design must be (n, p) aligned with y")
    if np.asarray(config.delta).size != design.shape[1]:
        raise ConfigError("delta length does not match design columns")
    lam_y = ols_lambda(design, config.delta) * y
    n = y.size
    band = SensitivityBand(
        np.broadcast_to(np.asarray(config.w_lower, dtype=float), (n,)),
        np.broadcast_to(np.asarray(config.w_upper, dtype=float), (n,)),
    )
    out = []
    for direction in ("lower", "upper"):
        problem = BoundProblem(
            lambda_y=lam_y, band=band, direction=direction, group_key=group_key
        )
        out.append(sharp_bound(problem))
    return tuple(out)
