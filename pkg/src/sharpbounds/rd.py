"""Regression discontinuity bounds under one-sided manipulation at the cutoff.

A share tau of observations just above the cutoff are manipulators (always
treated), which biases the usual difference in means.  Outcome-ratio bands
Lambda restrict how different manipulators' outcomes can be from
non-manipulators'; each estimand below maps to a band-constrained reweighting
problem on the within-window sample.

All "at the cutoff" objects are realized through a uniform window of
half-width h on each side; there is no kernel weighting and no bandwidth
selection here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bounds import BoundProblem, BoundResult, SensitivityBand, sharp_bound
from .errors import ConfigError, EmptySideError, UndefinedEstimandError


@dataclass(frozen=True)
class RDConfig:
    """Cutoff, window half-width, outcome-ratio bands, optional tau override.

    Lambda1 bands constrain Y(1) of manipulators vs non-manipulators above
    the cutoff; Lambda0 bands constrain Y(0) of manipulators vs the
    observable control side.  Lambda = 1 on both sides is exogeneity.
    ``tau_input`` overrides the count-based manipulation-share estimate.
    """

    cutoff: float = 0.0
    bandwidth: float = 1.0
    lambda1_minus: float = 1.0
    lambda1_plus: float = 1.0
    lambda0_minus: float = 1.0
    lambda0_plus: float = 1.0
    tau_input: float = None

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise ConfigError("bandwidth must be positive")
        for lo, hi in (
            (self.lambda1_minus, self.lambda1_plus),
            (self.lambda0_minus, self.lambda0_plus),
        ):
            if not (0 <= lo <= 1 <= hi):
                raise ConfigError("bands must satisfy 0 <= Lambda- <= 1 <= Lambda+")
        if self.tau_input is not None and not (0 <= self.tau_input < 1):
            raise ConfigError("tau_input must lie in [0, 1)")


@dataclass(frozen=True)
class RDEstimates:
    """Window-level point estimates feeding every RD bound."""

    tau: float
    tau0: float
    mean_above: float
    mean_below: float
    p_above: float
    p_below: float
    n_above: int
    n_below: int


def _window_sides(x, config):
    x = np.asarray(x, dtype=float)
    c, h = config.cutoff, config.bandwidth
    above = (x > c) & (x <= c + h)
    below = (x >= c - h) & (x < c)
    return above, below


def rd_estimate_tau(x, config):
    """Manipulation share just above the cutoff from the side-count imbalance.

    tau = max(0, 1 - N_below / N_above): manipulators inflate the right-side
    density, so the count ratio identifies the excess mass.  Clamped at zero
    under the one-sided (rightward) manipulation assumption.
    """
    above, below = _window_sides(x, config)
    n_above = int(above.sum())
    n_below = int(below.sum())
    if n_above == 0:
        raise EmptySideError("no observations above the cutoff within the bandwidth")
    return max(0.0, 1.0 - n_below / n_above), n_above, n_below


def rd_estimates(x, y, config):
    above, below = _window_sides(x, config)
    if config.tau_input is not None:
        tau = float(config.tau_input)
        n_above = int(above.sum())
        n_below = int(below.sum())
        if n_above == 0:
            raise EmptySideError("no observations above the cutoff within the bandwidth")
    else:
        tau, n_above, n_below = rd_estimate_tau(x, config)
    if n_below == 0:
        raise EmptySideError("no observations below the cutoff within the bandwidth")
    y = np.asarray(y, dtype=float)
    n = n_above + n_below
    return RDEstimates(
        tau=tau,
        tau0=tau / (2.0 - tau),
        mean_above=float(y[above].mean()),
        mean_below=float(y[below].mean()),
        p_above=n_above / n,
        p_below=n_below / n,
        n_above=n_above,
        n_below=n_below,
    )


def _band_above(tau, config):
    """Likelihood-ratio band on the treated side implied by the Lambda1 band."""
    w_lo = 1.0 / (1.0 - tau + tau * config.lambda1_plus)
    w_hi = 1.0 / (1.0 - tau + tau * config.lambda1_minus)
    return w_lo, w_hi


def _side_problem(y, est, above, below, lam_above, lam_below, band_above, band_below,
                  direction):
    """Joint two-sided BoundProblem with per-side lambda values and bands."""
    n = est.n_above + est.n_below
    lam_y = np.empty(n)
    group = np.empty(n, dtype=int)
    w_lo = np.empty(n)
    w_hi = np.empty(n)
    ya = np.asarray(y, dtype=float)[above]
    yb = np.asarray(y, dtype=float)[below]
    lam_y[: est.n_above] = lam_above * ya
    lam_y[est.n_above:] = lam_below * yb
    group[: est.n_above] = 1
    group[est.n_above:] = 0
    w_lo[: est.n_above], w_hi[: est.n_above] = band_above
    w_lo[est.n_above:], w_hi[est.n_above:] = band_below
    return BoundProblem(
        lambda_y=lam_y,
        band=SensitivityBand(w_lo, w_hi),
        direction=direction,
        group_key=group,
    )


def _bound_pair(make_problem, assemble):
    out = []
    for direction in ("lower", "upper"):
        res = sharp_bound(make_problem(direction))
        out.append(assemble(res))
    lower, upper = out
    if lower.value > upper.value:
        lower, upper = upper, lower
    return lower, upper


def rd_clate_bounds(x, y, config):
    """Bounds on the local ATE for non-manipulators (compliers at the cutoff).

    The treated-side mean is a tau-contaminated mixture; the Lambda1 band
    translates into a likelihood-ratio band 1/(1 - tau + tau*Lambda1) on the
    treated-side observations, and the control-side mean is point identified
    and subtracted off.
    """
    est = rd_estimates(x, y, config)
    above, below = _window_sides(x, config)
    band_above = _band_above(est.tau, config)

    def make(direction):
        return _side_problem(
            y, est, above, below,
            lam_above=1.0 / est.p_above, lam_below=0.0,
            band_above=band_above, band_below=(1.0, 1.0),
            direction=direction,
        )

    return _bound_pair(make, lambda r: r.shifted(-est.mean_below))


def rd_catt_bounds(x, y, config):
    """Bounds on the treatment effect for the manipulators.

    Their counterfactual E[Y(0) | manipulator] is bounded by reweighting the
    control side within [Lambda0-, Lambda0+]; the observed-outcome part is
    point identified.
    """
    est = rd_estimates(x, y, config)
    above, below = _window_sides(x, config)
    band_below = (config.lambda0_minus, config.lambda0_plus)

    def counterfactual(direction):
        return sharp_bound(
            _side_problem(
                y, est, above, below,
                lam_above=0.0, lam_below=1.0 / est.p_below,
                band_above=(1.0, 1.0), band_below=band_below,
                direction=direction,
            )
        )

    # psi = (A - tau0 * E[Y(0)|M=1]) / ((1 + tau0) / 2), A = E[(2D-1)Y | window];
    # the counterfactual mean enters with a negative sign, so its upper bound
    # yields the lower psi bound and vice versa
    big_a = est.p_above * est.mean_above - est.p_below * est.mean_below
    denom = (1.0 + est.tau0) / 2.0

    def assemble(res, direction):
        return BoundResult(
            value=(big_a - est.tau0 * res.value) / denom,
            tau_range=res.tau_range,
            cap_fractions=res.cap_fractions,
            finite=res.finite,
            direction=direction,
            n_infinite_cap=res.n_infinite_cap,
        )

    lower = assemble(counterfactual("upper"), "lower")
    upper = assemble(counterfactual("lower"), "upper")
    if lower.value > upper.value:
        lower, upper = upper, lower
    return lower, upper


def rd_cate_bounds(x, y, config):
    """Bounds on the local ATE pooling manipulators and non-manipulators.

    Combines the non-manipulator treated mean (Lambda1 band above) and the
    manipulator counterfactual (Lambda0 band below) in one joint reweighting
    problem, then adds the point-identified pieces.  Requires the
    manipulation share below one half.
    """
    est = rd_estimates(x, y, config)
    if est.tau >= 0.5:
        raise UndefinedEstimandError(
            "manipulation share >= 1/2: pooled local ATE not defined"
        )
    above, below = _window_sides(x, config)
    band_above = _band_above(est.tau, config)
    band_below = (config.lambda0_minus, config.lambda0_plus)
    coef_above = (1.0 - est.tau) / (2.0 - est.tau)

    def make(direction):
        return _side_problem(
            y, est, above, below,
            lam_above=coef_above / est.p_above,
            lam_below=-est.tau0 / est.p_below,
            band_above=band_above, band_below=band_below,
            direction=direction,
        )

    shift = (1.0 / (2.0 - est.tau)) * est.mean_above - (1.0 - est.tau0) * est.mean_below
    return _bound_pair(make, lambda r: r.shifted(shift))
