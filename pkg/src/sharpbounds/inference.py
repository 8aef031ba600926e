"""Percentile-bootstrap confidence intervals for bound pairs.

The resampling scheme follows the estimation pipeline it wraps: observation
rows are redrawn with replacement; the estimator closure receives the index
vector and is responsible for any cheap nuisance updating (the IPW path does
a one-step propensity update and keeps its quantile grid frozen).  Infinite
bound estimates are legitimate draws here, they are kept and sorted to the
extremes so an unbounded side propagates into the interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BootstrapUnstableError, SharpBoundsError

_MAX_FAILED_SHARE = 0.05


@dataclass(frozen=True)
class BootstrapResult:
    """Interval summaries plus the raw draws for diagnostics."""

    set_ci: tuple
    lb_ci: tuple
    ub_ci: tuple
    lb_ci_one_sided: tuple
    ub_ci_one_sided: tuple
    draws: np.ndarray  # (B_ok, 2) columns (lower, upper)
    n_infinite: int
    n_failed: int

    @property
    def set_unbounded(self):
        return math.isinf(self.set_ci[0]) or math.isinf(self.set_ci[1])


def empirical_quantile(values, level):
    """Order statistic at index ceiling(level * B), clamped to [1, B].

    ±infinity values participate and sort to the extremes, so the quantile of
    a family with enough unbounded draws is itself unbounded.
    """
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise ValueError("empirical_quantile of empty values")
    idx = min(max(int(math.ceil(level * v.size)), 1), v.size)
    return float(v[idx - 1])


def percentile_bootstrap(n, estimator, n_draws, seed, alpha=0.05):
    """Percentile bootstrap over row resamples of an n-observation sample.

    ``estimator`` maps an index array of length n to a (lower, upper) value
    pair (floats, BoundResult-like objects with a ``value`` attribute also
    accepted).  Draw-level estimator errors are recorded; more than 5% failed
    draws aborts with BootstrapUnstableError.  Deterministic in ``seed``.
    """
    if n_draws < 2:
        raise ValueError("need at least two bootstrap draws")
    rng = np.random.default_rng(seed)
    pairs = []
    n_failed = 0
    for _ in range(n_draws):
        idx = rng.integers(0, n, size=n)
        try:
            lo, hi = estimator(idx)
        except SharpBoundsError:
            n_failed += 1
            continue
        lo = getattr(lo, "value", lo)
        hi = getattr(hi, "value", hi)
        pairs.append((float(lo), float(hi)))
    if n_failed > _MAX_FAILED_SHARE * n_draws:
        raise BootstrapUnstableError(
            f"{n_failed} of {n_draws} bootstrap draws failed"
        )
    draws = np.asarray(pairs, dtype=float)
    lows = draws[:, 0]
    highs = draws[:, 1]
    half = alpha / 2.0
    set_ci = (empirical_quantile(lows, half), empirical_quantile(highs, 1.0 - half))
    lb_ci = (empirical_quantile(lows, half), empirical_quantile(lows, 1.0 - half))
    ub_ci = (empirical_quantile(highs, half), empirical_quantile(highs, 1.0 - half))
    lb_one = (empirical_quantile(lows, alpha), math.inf)
    ub_one = (-math.inf, empirical_quantile(highs, 1.0 - alpha))
    n_infinite = int(np.isinf(draws).any(axis=1).sum())
    return BootstrapResult(
        set_ci=set_ci,
        lb_ci=lb_ci,
        ub_ci=ub_ci,
        lb_ci_one_sided=lb_one,
        ub_ci_one_sided=ub_one,
        draws=draws,
        n_infinite=n_infinite,
        n_failed=n_failed,
    )
