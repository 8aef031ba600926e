"""Closed-form sharp bounds for E[W * lam_y] over likelihood ratios W in a band.

The optimization problem is

    sup_W  E[W * lam_y]   s.t.  W in [w_lower, w_upper],  E[W | cell] = 1,

where ``lam_y`` are evaluations of lambda(R) * Y and cells are discrete
conditioning groups.  The optimum caps W at ``w_upper`` above a balancing
quantile of lam_y within each cell and floors it at ``w_lower`` below, with the
quantile level chosen so the cell mean of W is one.  The bound value is the
moment

    E[ lam_y + (lam_y - q) * a(w_lower, w_upper, lam_y, q) ],

which stays valid at mass points of lam_y (the correction factor multiplies by
zero there) and extends to infinite ``w_upper`` where it becomes
E[ w_lower * lam_y + (1 - w_lower) * q1 ] with q1 the cell supremum.

Lower bounds are computed by negation duality: inf of lam_y equals minus the
sup of -lam_y under the same band.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InconsistentQuantileError, InfiniteCapError, InvalidBandError

_ATOL = 1e-12

UPPER = "upper"
LOWER = "lower"


def _as_1d(x, n=None, name="array"):
    a = np.atleast_1d(np.asarray(x, dtype=float))
    if n is not None and a.size == 1 and n != 1:
        a = np.full(n, float(a[0]))
    if n is not None and a.size != n:
        raise ValueError(f"{name} has length {a.size}, expected {n}")
    return a


@dataclass(frozen=True)
class SensitivityBand:
    """Per-observation likelihood-ratio band [w_lower, w_upper].

    ``w_upper`` may contain +inf; ``w_lower`` must be finite.  The band must
    satisfy 0 <= w_lower <= 1 <= w_upper everywhere.
    """

    w_lower: np.ndarray
    w_upper: np.ndarray

    def __post_init__(self):
        lo = _as_1d(self.w_lower, name="w_lower")
        hi = _as_1d(self.w_upper, n=lo.size, name="w_upper")
        lo = _as_1d(self.w_lower, n=hi.size, name="w_lower")
        object.__setattr__(self, "w_lower", lo)
        object.__setattr__(self, "w_upper", hi)
        if not np.all(np.isfinite(lo)):
            raise InvalidBandError("w_lower must be finite")
        if np.any(lo < -_ATOL) or np.any(lo > 1 + _ATOL) or np.any(hi < 1 - _ATOL):
            raise InvalidBandError("band must satisfy 0 <= w_lower <= 1 <= w_upper")

    @property
    def n(self):
        return self.w_lower.size


@dataclass(frozen=True)
class BoundProblem:
    """One instance of the band-constrained reweighting problem.

    ``lambda_y`` holds the per-observation evaluations lambda(R) * Y (only the
    product enters the objective).  ``group_key`` assigns each observation to
    its conditioning cell; the band must be constant within a cell.
    ``weights`` are observation probabilities (uniform by default).
    """

    lambda_y: np.ndarray
    band: SensitivityBand
    direction: str = UPPER
    group_key: np.ndarray = None
    weights: np.ndarray = None

    def __post_init__(self):
        ly = _as_1d(self.lambda_y, name="lambda_y")
        if not np.all(np.isfinite(ly)):
            raise ValueError("lambda_y must be finite")
        object.__setattr__(self, "lambda_y", ly)
        n = ly.size
        if self.band.n != n:
            raise ValueError("band length does not match lambda_y")
        if self.direction not in (UPPER, LOWER):
            raise ValueError(f"direction must be '{UPPER}' or '{LOWER}'")
        gk = self.group_key
        gk = np.zeros(n, dtype=int) if gk is None else np.asarray(gk)
        if gk.size != n:
            raise ValueError("group_key length does not match lambda_y")
        object.__setattr__(self, "group_key", gk)
        w = self.weights
        if w is None:
            w = np.full(n, 1.0 / n)
        else:
            w = _as_1d(w, n=n, name="weights")
            if np.any(w < 0):
                raise ValueError("weights must be nonnegative")
            total = w.sum()
            if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-8):
                raise ValueError("weights must sum to one")
            w = w / total
        object.__setattr__(self, "weights", w)

    def negated(self):
        """The mirrored problem: flips lambda_y and the direction."""
        return BoundProblem(
            lambda_y=-self.lambda_y,
            band=self.band,
            direction=LOWER if self.direction == UPPER else UPPER,
            group_key=self.group_key,
            weights=self.weights,
        )

    def groups(self):
        """Yields (key, index array) for each conditioning cell."""
        keys, inverse = np.unique(self.group_key, return_inverse=True)
        for i, key in enumerate(keys):
            yield key, np.nonzero(inverse == i)[0]


@dataclass(frozen=True)
class OptimalWeights:
    """Adversarial weights attaining the bound, with per-cell diagnostics."""

    w_star: np.ndarray
    tau: dict
    alpha: dict
    quantile_value: dict


@dataclass(frozen=True)
class BoundResult:
    value: float
    tau_range: tuple = (math.nan, math.nan)
    cap_fractions: tuple = (0.0, 0.0)
    finite: bool = True
    direction: str = UPPER
    n_infinite_cap: int = 0

    def shifted(self, delta, scale=1.0):
        """Result for scale * bound + delta (scale must be positive)."""
        if scale <= 0:
            raise ValueError("scale must be positive")
        return BoundResult(
            value=scale * self.value + delta,
            tau_range=self.tau_range,
            cap_fractions=self.cap_fractions,
            finite=self.finite,
            direction=self.direction,
            n_infinite_cap=self.n_infinite_cap,
        )


def tau_balance(w_lower, w_upper, direction=UPPER):
    """Quantile level that balances the cell mean of the capped weights at one.

    Upper direction: (w_upper - 1) / (w_upper - w_lower); the lower direction
    mirrors to (1 - w_lower) / (w_upper - w_lower).  Returns 1.0 (upper) or 0.0
    (lower) at an infinite cap, and None for the degenerate band
    w_lower = w_upper = 1 where the only feasible weight is 1.
    """
    if not (0 - _ATOL <= w_lower <= 1 + _ATOL and w_upper >= 1 - _ATOL):
        raise InvalidBandError("band must satisfy 0 <= w_lower <= 1 <= w_upper")
    if w_lower == w_upper:
        return None
    if math.isinf(w_upper):
        return 1.0 if direction == UPPER else 0.0
    if direction == UPPER:
        return (w_upper - 1.0) / (w_upper - w_lower)
    return (1.0 - w_lower) / (w_upper - w_lower)


def adversarial_effect(w_lower, w_upper, lambda_y, q, direction=UPPER):
    """Deviation of the optimal weight from one given the outcome's position.

    Upper: (w_upper - w_lower) * 1{lambda_y > q} - (1 - w_lower).
    Lower: the sign-mirrored analog (w_lower - 1 above q, w_upper - 1 at/below).
    Requires a finite cap; the infinite branch is handled by
    ``bound_infinite_cap``.
    """
    w_lower = np.asarray(w_lower, dtype=float)
    w_upper = np.asarray(w_upper, dtype=float)
    if np.any(np.isinf(w_upper)):
        raise InfiniteCapError("adversarial_effect requires a finite w_upper")
    above = np.asarray(lambda_y, dtype=float) > np.asarray(q, dtype=float)
    if direction == UPPER:
        out = (w_upper - w_lower) * above - (1.0 - w_lower)
    else:
        out = (w_lower - w_upper) * above + (w_upper - 1.0)
    return out if out.ndim else float(out)


def discrete_quantile(values, probs, tau):
    """Left-continuous tau-quantile of a finite distribution.

    Smallest support point whose CDF reaches tau (up to a 1e-12 slack).
    """
    values = np.asarray(values, dtype=float)
    probs = np.asarray(probs, dtype=float)
    order = np.argsort(values, kind="stable")
    cdf = np.cumsum(probs[order])
    k = int(np.searchsorted(cdf, tau - 1e-12, side="left"))
    k = min(k, values.size - 1)
    return float(values[order][k])


def mass_point_alpha(values, probs, w_lower, w_upper, q, direction=UPPER):
    """Mixing weight at the balancing quantile restoring the cell mean of one.

    Solves  w_lower*P(<q) + w_upper*P(>=q) - 1 = (w_upper - w_lower)*P(=q)*alpha
    for the upper direction (mirrored for lower).  When the band is degenerate
    or there is no mass at q the equation is vacuous and 0.5 is returned.
    """
    values = np.asarray(values, dtype=float)
    probs = np.asarray(probs, dtype=float)
    probs = probs / probs.sum()
    tau = tau_balance(w_lower, w_upper, direction)
    if tau is None:
        return 0.5
    p_below = float(probs[values < q].sum())
    p_at = float(probs[np.isclose(values, q, rtol=0, atol=_ATOL)].sum())
    if p_at <= 0.0:
        raise InconsistentQuantileError("q carries no mass in the cell")
    # valid balancing quantile iff P(<q) <= tau <= P(<=q)
    if not (p_below - 1e-9 <= tau <= p_below + p_at + 1e-9):
        raise InconsistentQuantileError(
            f"q={q} is not a level-{tau:.6g} quantile of the cell"
        )
    if math.isinf(w_upper) or w_upper == w_lower:
        return 0.5
    den = (w_upper - w_lower) * p_at
    if direction == UPPER:
        num = w_lower * p_below + w_upper * (1.0 - p_below) - 1.0
    else:
        # mirrored: w_upper below q, w_lower at/above; alpha mixes toward
        # w_lower at the quantile, matching the negated upper problem
        num = w_lower * (1.0 - p_below - p_at) + w_upper * (p_below + p_at) - 1.0
    return float(min(1.0, max(0.0, num / den)))


def _cell_band(problem, idx):
    lo = problem.band.w_lower[idx]
    hi = problem.band.w_upper[idx]
    if np.ptp(lo) > _ATOL or (np.isfinite(hi).any() and np.ptp(hi[np.isfinite(hi)]) > _ATOL):
        raise InvalidBandError("band must be constant within a conditioning cell")
    if np.isinf(hi).any() and not np.isinf(hi).all():
        raise InvalidBandError("band must be constant within a conditioning cell")
    return float(lo[0]), float(hi[0])


def _upper_bound_terms(problem, quantiles):
    """Core evaluation for direction == upper.

    Returns (value, taus, w_star, n_infinite_cap).  ``quantiles`` maps group
    key -> balancing quantile (the cell supremum for infinite-cap groups);
    missing entries are computed from the cell's empirical distribution.
    """
    ly, w = problem.lambda_y, problem.weights
    value = 0.0
    taus = {}
    w_star = np.ones(ly.size)
    n_inf = 0
    for key, idx in problem.groups():
        lo, hi = _cell_band(problem, idx)
        p = w[idx]
        pg = p.sum()
        if pg <= 0:
            continue
        cond = p / pg
        vals = ly[idx]
        tau = tau_balance(lo, hi, UPPER)
        taus[key] = tau
        if tau is None:  # degenerate band, W must be 1
            value += float(p @ vals)
            continue
        if math.isinf(hi):
            n_inf += idx.size
            q1 = quantiles.get(key) if quantiles else None
            q1 = float(np.max(vals)) if q1 is None else float(q1)
            if math.isinf(q1) and lo < 1.0:
                value = math.inf
                w_star[idx] = lo
                continue
            value += float(p @ (lo * vals)) + (1.0 - lo) * q1 * pg
            w_star[idx] = lo
            continue
        q = quantiles.get(key) if quantiles else None
        q = discrete_quantile(vals, cond, tau) if q is None else float(q)
        a = adversarial_effect(lo, hi, vals, q, UPPER)
        value += float(p @ (vals + (vals - q) * a))
        at = np.isclose(vals, q, rtol=0, atol=_ATOL)
        alpha = 0.5
        if at.any():
            alpha = mass_point_alpha(vals, cond, lo, hi, q, UPPER)
        w_star[idx] = np.where(
            vals > q, hi, np.where(at, alpha * lo + (1 - alpha) * hi, lo)
        )
    return value, taus, w_star, n_inf


def _cap_fractions(problem, w_star):
    lo, hi = problem.band.w_lower, problem.band.w_upper
    w = problem.weights
    at_lo = float(w[np.isclose(w_star, lo, rtol=0, atol=_ATOL)].sum())
    finite_hi = np.isfinite(hi)
    at_hi = float(w[finite_hi & np.isclose(w_star, hi, rtol=0, atol=_ATOL)].sum())
    return at_lo, at_hi


def sharp_bound(problem, quantiles=None):
    """Sharp bound on E[W * lambda_y] for the problem's direction.

    ``quantiles`` optionally supplies the per-cell balancing quantiles (for the
    lower direction these must be quantiles of the negated values, keyed by
    cell).  When omitted they are computed from the cell's discrete
    distribution, which makes the bound exact on finite-support inputs.
    Infinite-cap cells are routed through the one-sided formula.
    """
    if problem.direction == LOWER:
        neg = sharp_bound(problem.negated(), quantiles)
        return BoundResult(
            value=-neg.value,
            tau_range=tuple(
                sorted(1.0 - t for t in (neg.tau_range) if not math.isnan(t))
            )[:2] or (math.nan, math.nan),
            cap_fractions=(neg.cap_fractions[1], neg.cap_fractions[0]),
            finite=neg.finite,
            direction=LOWER,
            n_infinite_cap=neg.n_infinite_cap,
        )
    value, taus, w_star, n_inf = _upper_bound_terms(problem, quantiles)
    real_taus = [t for t in taus.values() if t is not None]
    tau_range = (min(real_taus), max(real_taus)) if real_taus else (math.nan, math.nan)
    return BoundResult(
        value=value,
        tau_range=tau_range,
        cap_fractions=_cap_fractions(problem, w_star),
        finite=math.isfinite(value),
        direction=UPPER,
        n_infinite_cap=n_inf,
    )


def optimal_weights(problem, quantiles=None):
    """Adversarial weights W* attaining the bound (finite caps only)."""
    if np.isinf(problem.band.w_upper).any():
        raise InfiniteCapError("optimal_weights requires finite caps; use bound_infinite_cap")
    if problem.direction == LOWER:
        neg = optimal_weights(problem.negated(), quantiles)
        return OptimalWeights(
            w_star=neg.w_star,
            tau={k: (None if t is None else 1.0 - t) for k, t in neg.tau.items()},
            alpha=neg.alpha,
            quantile_value={k: -q for k, q in neg.quantile_value.items()},
        )
    _, taus, w_star, _ = _upper_bound_terms(problem, quantiles)
    alphas = {}
    qvals = {}
    for key, idx in problem.groups():
        lo, hi = _cell_band(problem, idx)
        tau = taus[key]
        vals = problem.lambda_y[idx]
        cond = problem.weights[idx] / problem.weights[idx].sum()
        if tau is None:
            alphas[key] = 0.5
            qvals[key] = math.nan
            continue
        q = quantiles.get(key) if quantiles else None
        q = discrete_quantile(vals, cond, tau) if q is None else float(q)
        qvals[key] = q
        at = np.isclose(vals, q, rtol=0, atol=_ATOL)
        alphas[key] = mass_point_alpha(vals, cond, lo, hi, q, UPPER) if at.any() else 0.5
    return OptimalWeights(w_star=w_star, tau=taus, alpha=alphas, quantile_value=qvals)


def bound_infinite_cap(problem, q1=None):
    """One-sided bound when every cell's upper cap is infinite.

    Upper direction: E[w_lower * lambda_y + (1 - w_lower) * q1] with q1 the
    per-cell supremum of lambda_y (the cell maximum by default; pass +inf for
    unbounded support, which makes the bound infinite whenever w_lower < 1).
    The lower direction is the negated mirror.
    """
    if not np.isinf(problem.band.w_upper).all():
        raise InfiniteCapError("bound_infinite_cap requires an infinite cap everywhere")
    if problem.direction == LOWER:
        neg_q1 = None if q1 is None else {k: -v for k, v in q1.items()}
        neg = bound_infinite_cap(problem.negated(), neg_q1)
        return BoundResult(
            value=-neg.value,
            tau_range=(0.0, 0.0),
            cap_fractions=(neg.cap_fractions[1], neg.cap_fractions[0]),
            finite=neg.finite,
            direction=LOWER,
            n_infinite_cap=neg.n_infinite_cap,
        )
    return sharp_bound(problem, q1)


def plug_in_value(problem):
    """The uncorrected moment E[lambda_y] (the identity-band value)."""
    return float(problem.weights @ problem.lambda_y)


def upper_moment_terms(lambda_y, w_lower, w_upper, q, q_sup=None):
    """Vectorized per-observation terms of the upper-bound moment.

    For finite caps each term is lam_y + (lam_y - q) * a(.); at an infinite cap
    it is w_lower*lam_y + (1 - w_lower)*q_sup, or +inf when lam_y exceeds
    q_sup (the adversarial effect a(.) is infinite above the cell supremum).
    Used by the plug-in estimators, where q comes from a fitted conditional
    quantile model rather than a discrete cell.  Also +inf where the cap is
    infinite, q_sup is infinite and w_lower < 1.
    """
    lambda_y = np.asarray(lambda_y, dtype=float)
    w_lower = np.asarray(w_lower, dtype=float)
    w_upper = np.asarray(w_upper, dtype=float)
    q = np.asarray(q, dtype=float)
    out = np.empty_like(lambda_y)
    inf_cap = np.isinf(w_upper)
    fin = ~inf_cap
    degen = fin & (w_upper == w_lower)
    fin = fin & ~degen
    if fin.any():
        a = (w_upper[fin] - w_lower[fin]) * (lambda_y[fin] > q[fin]) - (
            1.0 - w_lower[fin]
        )
        out[fin] = lambda_y[fin] + (lambda_y[fin] - q[fin]) * a
    out[degen] = lambda_y[degen]
    if inf_cap.any():
        if q_sup is None:
            raise InfiniteCapError("q_sup required for infinite-cap observations")
        qs = np.broadcast_to(np.asarray(q_sup, dtype=float), lambda_y.shape)
        lo = w_lower[inf_cap]
        ly = lambda_y[inf_cap]
        with np.errstate(invalid="ignore"):
            term = lo * ly + (1.0 - lo) * qs[inf_cap]
        term = np.where(ly > qs[inf_cap], math.inf, term)
        term = np.where(np.isinf(qs[inf_cap]) & (lo >= 1.0), ly, term)
        out[inf_cap] = term
    return out
