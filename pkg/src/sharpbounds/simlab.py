"""Simulation study for the c-dependence ATE bounds on a benchmark DGP.

The DGP is X ~ U[-eta, eta], Z|X ~ Bern(sigmoid(X)), Y|X,Z ~ N((2+X)(Z-1), 1)
with eta = log 9, so the propensity support is exactly [0.1, 0.9] and the true
ATE is 2.  Conditional on X both potential outcomes are normal, so the sharp
bounds have an inverse-Mills closed form and the "truth" is computable to
Monte Carlo accuracy by averaging over X draws.  The rest of the module runs
the estimation + bootstrap pipeline across simulated datasets and aggregates
bound tracking and interval coverage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import inference, ipw, nuisance
from .errors import ConfigError, SharpBoundsError

DEFAULT_ETA = math.log(9.0)


@dataclass(frozen=True)
class DGPConfig:
    n: int = 2000
    eta: float = DEFAULT_ETA

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("n must be positive")
        if self.eta <= 0:
            raise ConfigError("eta must be positive")

    @property
    def propensity_margin(self):
        """Distance from the propensity support to {0, 1} (0.1 at eta=log 9)."""
        return 1.0 / (1.0 + math.exp(self.eta))


def dgp_sample(config, rng):
    """One draw of (x, z, y) from the benchmark DGP."""
    x = rng.uniform(-config.eta, config.eta, config.n)
    e = 1.0 / (1.0 + np.exp(-x))
    z = (rng.random(config.n) < e).astype(float)
    y = rng.normal((2.0 + x) * (z - 1.0), 1.0)
    return x, z, y


@dataclass(frozen=True)
class TruthResult:
    psi_lower: float
    psi_upper: float
    mc_draws: int

    @property
    def finite(self):
        return math.isfinite(self.psi_lower) and math.isfinite(self.psi_upper)


def _mills_width(e, c):
    """Conditional half-width of the ATE identified set given propensity e.

    Sum of the two arms' inverse-Mills terms (1 - w_lower) * phi(z_tau)/(1 - tau)
    for a unit-variance normal outcome; e must lie strictly inside (c, 1-c).
    """
    w_lo1 = e / (e + c)
    tau1 = (e + c) / (2.0 * e)
    w_lo0 = (1.0 - e) / (1.0 - e + c)
    tau0 = (1.0 - e + c) / (2.0 * (1.0 - e))
    out = np.zeros_like(e)
    for w_lo, tau in ((w_lo1, tau1), (w_lo0, tau0)):
        t = np.clip(tau, 0.5, 1.0 - 1e-16)
        out += (1.0 - w_lo) * stats.norm.pdf(stats.norm.ppf(t)) / (1.0 - t)
    return out


def true_bounds_c_dependence(c, draws=10**6, seed=0, config=None):
    """Monte Carlo average of the closed-form conditional identified set.

    Returns (-inf, inf) whenever c exceeds the DGP's propensity margin, where
    the population identified set is unbounded.
    """
    config = config or DGPConfig()
    if c < 0:
        raise ConfigError("c must be nonnegative")
    # knife edge: the set stays bounded at c equal to the margin itself
    if c > config.propensity_margin * (1.0 + 1e-9):
        return TruthResult(-math.inf, math.inf, mc_draws=draws)
    if c == 0.0:
        return TruthResult(2.0, 2.0, mc_draws=draws)
    rng = np.random.default_rng(seed)
    x = rng.uniform(-config.eta, config.eta, draws)
    e = 1.0 / (1.0 + np.exp(-x))
    width = float(np.mean(_mills_width(e, c)))
    return TruthResult(2.0 - width, 2.0 + width, mc_draws=draws)


def bound_envelope_normal(c, epsilon, draws=10**5, seed=0, config=None):
    """Monte Carlo value of the analytic envelope half-width at level c.

    The envelope sums, over both arms, E[(1-w_lower) * (sqrt(2 log w_upper)
    + sqrt(2/pi) + (1-w_lower)^epsilon * sqrt(1/(e*epsilon)))] with unit
    outcome scale; it dominates the true half-width wherever the caps are
    finite.
    """
    if not (0 < epsilon < 1):
        raise ConfigError("epsilon must lie in (0, 1)")
    config = config or DGPConfig()
    rng = np.random.default_rng(seed)
    x = rng.uniform(-config.eta, config.eta, draws)
    e = 1.0 / (1.0 + np.exp(-x))
    total = 0.0
    for w_lo, w_hi in (
        (e / (e + c), e / np.maximum(e - c, 0.0)),
        ((1.0 - e) / (1.0 - e + c), (1.0 - e) / np.maximum(1.0 - e - c, 0.0)),
    ):
        with np.errstate(divide="ignore"):
            w_hi = np.where(w_hi <= 0, math.inf, w_hi)
            slack = 1.0 - w_lo
            term = slack * (
                np.sqrt(2.0 * np.log(w_hi))
                + math.sqrt(2.0 / math.pi)
                + slack**epsilon * math.sqrt(1.0 / (math.e * epsilon))
            )
        total += float(np.mean(term))
    return total


def _simulation_seeds(seed, count):
    return np.random.SeedSequence(seed).spawn(count)


def run_one_simulation(c, n, n_draws, seed_seq, eta=DEFAULT_ETA):
    """Estimate bounds and (optionally) bootstrap them on one simulated dataset.

    Returns a dict with the point bound pair, the BootstrapResult (None when
    n_draws = 0), and flags for infinite estimates.
    """
    rng = np.random.default_rng(seed_seq)
    x, z, y = dgp_sample(DGPConfig(n=n, eta=eta), rng)
    fitted = ipw.fit_ipw(x, z, y, ipw.IPWConfig(c=c))
    lo, hi = fitted.point_bounds()
    boot = None
    if n_draws > 0:
        boot = inference.percentile_bootstrap(
            n, fitted.bootstrap_bounds, n_draws, seed=rng
        )
    return {
        "lower": lo.value,
        "upper": hi.value,
        "estimate_unbounded": not (lo.finite and hi.finite),
        "bootstrap": boot,
    }


COVERAGE_COLUMNS = (
    "c", "set_coverage", "lb_coverage", "ub_coverage",
    "lb_coverage_one_sided", "ub_coverage_one_sided",
    "pct_unbounded_estimates", "pct_unbounded_cis", "n_sims", "n_failed",
)


def coverage_experiment(c_grid, sims, n, n_draws, seed, truth_draws=10**6):
    """Interval coverage of the truth across simulated datasets, per c.

    Returns a list of row dicts in COVERAGE_COLUMNS order.  Coverage of the
    identified set means the set CI contains [psi_lower, psi_upper]; bound
    coverage means the per-bound CI contains the matching true bound.
    """
    rows = []
    for ci, c in enumerate(c_grid):
        truth = true_bounds_c_dependence(c, draws=truth_draws, seed=seed + 7)
        seeds = _simulation_seeds(seed * 1000 + ci, sims)
        covered_set = covered_lb = covered_ub = 0
        covered_lb_one = covered_ub_one = 0
        unbounded_est = unbounded_ci = failed = 0
        for s in range(sims):
            try:
                out = run_one_simulation(c, n, n_draws, seeds[s])
            except SharpBoundsError:
                failed += 1
                continue
            boot = out["bootstrap"]
            unbounded_est += out["estimate_unbounded"]
            unbounded_ci += boot.set_unbounded
            covered_set += (
                boot.set_ci[0] <= truth.psi_lower and truth.psi_upper <= boot.set_ci[1]
            )
            covered_lb += boot.lb_ci[0] <= truth.psi_lower <= boot.lb_ci[1]
            covered_ub += boot.ub_ci[0] <= truth.psi_upper <= boot.ub_ci[1]
            covered_lb_one += boot.lb_ci_one_sided[0] <= truth.psi_lower
            covered_ub_one += truth.psi_upper <= boot.ub_ci_one_sided[1]
        ok = sims - failed
        rows.append({
            "c": c,
            "set_coverage": covered_set / ok,
            "lb_coverage": covered_lb / ok,
            "ub_coverage": covered_ub / ok,
            "lb_coverage_one_sided": covered_lb_one / ok,
            "ub_coverage_one_sided": covered_ub_one / ok,
            "pct_unbounded_estimates": unbounded_est / ok,
            "pct_unbounded_cis": unbounded_ci / ok,
            "n_sims": ok,
            "n_failed": failed,
        })
    return rows


FIGURE1_COLUMNS = (
    "c", "mean_lb", "mean_ub", "median_lb", "median_ub",
    "true_lb", "true_ub", "pct_infinite",
)


def figure1_run(c_grid, sims, n, seed, truth_draws=10**6):
    """Mean/median bound estimates vs truth per c (no bootstrap needed).

    Infinite estimates are excluded from the means, kept in the medians when
    fewer than half the simulations are infinite, and always counted in
    pct_infinite.
    """
    rows = []
    for ci, c in enumerate(c_grid):
        truth = true_bounds_c_dependence(c, draws=truth_draws, seed=seed + 7)
        seeds = _simulation_seeds(seed * 2000 + ci, sims)
        lows = np.empty(sims)
        highs = np.empty(sims)
        for s in range(sims):
            out = run_one_simulation(c, n, 0, seeds[s])
            lows[s] = out["lower"]
            highs[s] = out["upper"]
        finite = np.isfinite(lows) & np.isfinite(highs)
        pct_inf = float(1.0 - finite.mean())
        rows.append({
            "c": c,
            "mean_lb": float(lows[finite].mean()) if finite.any() else math.nan,
            "mean_ub": float(highs[finite].mean()) if finite.any() else math.nan,
            "median_lb": float(np.median(lows)) if pct_inf < 0.5 else math.nan,
            "median_ub": float(np.median(highs)) if pct_inf < 0.5 else math.nan,
            "true_lb": truth.psi_lower,
            "true_ub": truth.psi_upper,
            "pct_infinite": pct_inf,
        })
    return rows
