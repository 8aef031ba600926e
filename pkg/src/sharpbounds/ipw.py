"""Inverse propensity weighting adapters: APO and ATE bounds under odds-ratio
bands on confounding, including the c-dependence parameterization.

The sensitivity model bounds the odds ratio between the latent propensity
e_z(X, Y(z)) and the observed e(X) by [l_z(X), u_z(X)].  This maps to a
likelihood-ratio band on W:

    treated:  w_lower = (1-e)/u1 + e,      w_upper = (1-e)/l1 + e
    control:  w_lower = 1 - e + e*l0,      w_upper = 1 - e + e*u0

c-dependence replaces the odds-ratio bounds by e_z in [e-c, e+c] n [0,1],
which produces l = 0 (an infinite cap) whenever e <= c and u = inf whenever
e >= 1-c.  With an unbounded outcome an infinite cap makes the corresponding
bound infinite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import nuisance
from .bounds import BoundResult, upper_moment_terms
from .errors import ConfigError, PropensityRangeError

_INF = math.inf


@dataclass(frozen=True)
class IPWConfig:
    """Either a c-dependence level or explicit odds-ratio bands per arm.

    ``unbounded_outcome`` controls the infinite-cap branch: when True (the
    default, appropriate for outcomes with unbounded support) any observation
    with an infinite band cap makes the affected bound infinite; when False
    the sample extremum stands in for the support extremum.
    """

    c: float = None
    l1: float = None
    u1: float = None
    l0: float = None
    u0: float = None
    unbounded_outcome: bool = True

    def __post_init__(self):
        has_c = self.c is not None
        has_lu = any(v is not None for v in (self.l1, self.u1, self.l0, self.u0))
        if has_c and has_lu:
            raise ConfigError("specify either c or odds-ratio bands, not both")
        if not has_c and not has_lu:
            raise ConfigError("specify c or odds-ratio bands")
        if has_c and self.c < 0:
            raise ConfigError("c must be nonnegative")
        if has_lu:
            for name in ("l1", "u1", "l0", "u0"):
                if getattr(self, name) is None:
                    object.__setattr__(self, name, 1.0)
            for l, u in ((self.l1, self.u1), (self.l0, self.u0)):
                lo = np.min(np.asarray(l, dtype=float))
                hi = np.max(np.asarray(u, dtype=float))
                if not (0 < lo and np.max(l) <= 1.0 + 1e-12 and np.min(u) >= 1.0 - 1e-12):
                    raise ConfigError("odds-ratio bands must satisfy 0 < l <= 1 <= u")


def c_dependence_band(e_hat, c):
    """Odds-ratio bounds (l, u) implied by e_z in [e-c, e+c] n [0, 1].

    Vectorized over e_hat.  Returns l = 0 where e_hat <= c and u = +inf where
    e_hat >= 1-c; these propagate to infinite likelihood-ratio caps.
    """
    e = np.asarray(e_hat, dtype=float)
    odds = e / (1.0 - e)
    hi = e + c
    lo = e - c
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(hi < 1.0, (hi / (1.0 - hi)) / odds, _INF)
        l = np.where(lo > 0.0, (lo / (1.0 - lo)) / odds, 0.0)
    if np.ndim(e_hat) == 0:
        return float(l), float(u)
    return l, u


def _arm_band(e, l, u, arm):
    """Likelihood-ratio band for one treatment arm's reweighting problem."""
    e = np.asarray(e, dtype=float)
    l = np.broadcast_to(np.asarray(l, dtype=float), e.shape)
    u = np.broadcast_to(np.asarray(u, dtype=float), e.shape)
    with np.errstate(divide="ignore"):
        if arm == 1:
            w_lo = np.where(np.isinf(u), e, (1.0 - e) / u + e)
            w_hi = np.where(l > 0.0, (1.0 - e) / l + e, _INF)
        else:
            w_lo = 1.0 - e + e * l
            w_hi = np.where(np.isinf(u), _INF, 1.0 - e + e * u)
    return w_lo, w_hi


def resolve_bands(e, z, config):
    """Per-observation (w_lower, w_upper) under the config's sensitivity model."""
    e = np.asarray(e, dtype=float)
    z = np.asarray(z)
    if config.c is not None:
        l1, u1 = c_dependence_band(e, config.c)
        l0, u0 = l1, u1
    else:
        l1, u1, l0, u0 = config.l1, config.u1, config.l0, config.u0
    lo1, hi1 = _arm_band(e, l1, u1, arm=1)
    lo0, hi0 = _arm_band(e, l0, u0, arm=0)
    treated = z == 1
    w_lo = np.where(treated, lo1, lo0)
    w_hi = np.where(treated, hi1, hi0)
    return w_lo, w_hi


def quantile_features(x, z, lam, arm=None):
    """Design for the conditional quantile grid: Z interacted with X and lambda.

    For a single-arm analysis lam is already supported on that arm, so the
    z * lam interaction would duplicate (arm 1) or zero out (arm 0) the lam
    column; it is dropped to keep the design full rank.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float).T).T
    z = np.asarray(z, dtype=float)
    lam = np.asarray(lam, dtype=float)
    cols = [z, x, lam, x * z[:, None]]
    if arm is None:
        cols.append(z * lam)
    return np.column_stack(cols)


def _check_propensities(e):
    if np.any(e <= 0.0) or np.any(e >= 1.0):
        raise PropensityRangeError("estimated propensities must lie in (0, 1)")


def _tau_upper(w_lo, w_hi):
    with np.errstate(invalid="ignore"):
        tau = np.where(
            np.isinf(w_hi), 1.0, (w_hi - 1.0) / np.where(w_hi > w_lo, w_hi - w_lo, 1.0)
        )
    return np.where((w_hi == w_lo), 1.0, tau)


def _bound_from_terms(terms, weights, tau, n_inf, direction):
    value = float(terms @ weights)
    finite_tau = tau[np.isfinite(tau)]
    return BoundResult(
        value=value,
        tau_range=(float(finite_tau.min()), float(finite_tau.max()))
        if finite_tau.size
        else (math.nan, math.nan),
        finite=math.isfinite(value),
        direction=direction,
        n_infinite_cap=int(n_inf),
    )


def plugin_bounds(lam_y, w_lo, w_hi, grid, mask=None):
    """Plug-in lower/upper bounds from per-observation bands and a quantile grid.

    ``grid`` is the (n, 101) rearranged conditional-quantile matrix of lam_y
    (levels 0.00 .. 1.00); its end columns stand in for the conditional
    infimum / supremum, so an infinite-cap observation whose lam_y value falls
    outside its predicted quantile range produces an infinite bound.  ``mask``
    marks observations that enter the moment; the rest contribute exactly zero
    (their conditional lam_y is identically zero, e.g. the other treatment arm
    in an APO problem).  The mean is always taken over all n observations.
    Lower bounds come from negation duality on the same grid.
    """
    lam_y = np.asarray(lam_y, dtype=float)
    n = lam_y.size
    if mask is None:
        mask = np.ones(n, dtype=bool)
    ly = lam_y[mask]
    lo = np.broadcast_to(np.asarray(w_lo, dtype=float), lam_y.shape)[mask]
    hi = np.broadcast_to(np.asarray(w_hi, dtype=float), lam_y.shape)[mask]
    g = grid[mask]
    tau_up = _tau_upper(lo, hi)
    idx_up = nuisance.grid_index(tau_up)
    q_up = g[np.arange(g.shape[0]), idx_up]
    inf_cap = np.isinf(hi)
    terms_up = upper_moment_terms(ly, lo, hi, q_up, q_sup=g[:, -1])
    upper = _bound_from_terms(terms_up, np.full(ly.size, 1.0 / n), tau_up, inf_cap.sum(), "upper")

    # lower bound: upper problem on -lam_y; its balancing quantile at level t
    # is read off the same grid as -grid[:, 100 - index(t)]
    q_low = -g[np.arange(g.shape[0]), 100 - idx_up]
    terms_low = upper_moment_terms(-ly, lo, hi, q_low, q_sup=-g[:, 0])
    neg = _bound_from_terms(terms_low, np.full(ly.size, 1.0 / n), 1.0 - tau_up, inf_cap.sum(), "lower")
    lower = BoundResult(
        value=-neg.value,
        tau_range=neg.tau_range,
        finite=neg.finite,
        direction="lower",
        n_infinite_cap=neg.n_infinite_cap,
    )
    return lower, upper


@dataclass(frozen=True)
class FittedIPW:
    """Frozen state of one IPW analysis: data, propensity fit, quantile grid."""

    x: np.ndarray
    z: np.ndarray
    y: np.ndarray
    config: IPWConfig
    prop_model: nuisance.PropensityModel
    quantile_model: nuisance.QuantileGridModel
    arm: int = None  # None -> ATE

    def _lambda(self, e, z):
        if self.arm == 1:
            return z / e
        if self.arm == 0:
            return (1.0 - z) / (1.0 - e)
        return z / e - (1.0 - z) / (1.0 - e)

    def _mask(self, z):
        if self.arm is None:
            return np.ones(z.size, dtype=bool)
        return (z == self.arm)

    def bounds_at(self, x, z, y, prop_model):
        """Bound pair for (possibly resampled) data under a propensity model."""
        e = prop_model.predict(x if x.ndim > 1 else x[:, None])
        _check_propensities(e)
        lam = self._lambda(e, z)
        lam_y = lam * y
        w_lo, w_hi = resolve_bands(e, z, self.config)
        mask = self._mask(z)
        if self.arm is not None:
            lam_y = np.where(mask, lam_y, 0.0)
        grid = self.quantile_model.predict_grid(
            quantile_features(x, z, lam, arm=self.arm)
        )
        return plugin_bounds(lam_y, w_lo, w_hi, grid, mask=mask)

    def point_bounds(self):
        return self.bounds_at(self.x, self.z, self.y, self.prop_model)

    def bootstrap_bounds(self, idx):
        """Bound pair on a resample: one-step propensity update, frozen grid."""
        xb, zb, yb = self.x[idx], self.z[idx], self.y[idx]
        updated = nuisance.one_step_update(
            self.prop_model, xb if xb.ndim > 1 else xb[:, None], zb
        )
        return self.bounds_at(xb, zb, yb, updated)


def fit_ipw(x, z, y, config, arm=None, prop_model=None, quantile_model=None):
    """Fit the nuisances for an IPW bound analysis and freeze the state."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    if set(np.unique(z)) - {0.0, 1.0}:
        raise ConfigError("treatment z must be binary 0/1")
    x2 = x if x.ndim > 1 else x[:, None]
    if prop_model is None:
        prop_model = nuisance.fit_logistic(x2, z)
    e = prop_model.predict(x2)
    _check_propensities(e)
    if arm == 1:
        lam = z / e
    elif arm == 0:
        lam = (1.0 - z) / (1.0 - e)
    else:
        lam = z / e - (1.0 - z) / (1.0 - e)
    lam_y = lam * y if arm is None else np.where(z == arm, lam * y, 0.0)
    if quantile_model is None:
        quantile_model = nuisance.fit_quantile_grid(
            quantile_features(x, z, lam, arm=arm),
            lam_y,
            feature_recipe="1,z,x,lam,z*x,z*lam",
            edge="fitted" if config.unbounded_outcome else "sample",
        )
    return FittedIPW(
        x=x, z=z, y=y, config=config, prop_model=prop_model,
        quantile_model=quantile_model, arm=arm,
    )


def ipw_apo_bounds(x, z, y, config, arm, prop_model=None):
    """Bound pair for the average potential outcome E[Y(arm)]."""
    fitted = fit_ipw(x, z, y, config, arm=arm, prop_model=prop_model)
    return fitted.point_bounds()


def ipw_ate_bounds(x, z, y, config, prop_model=None):
    """Bound pair for the average treatment effect E[Y(1) - Y(0)]."""
    fitted = fit_ipw(x, z, y, config, arm=None, prop_model=prop_model)
    return fitted.point_bounds()
