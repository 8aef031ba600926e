"""Exact finite-support solver used as differential-testing ground truth.

Solves, cell by cell,

    max / min  sum_i p_i w_i v_i   s.t.  w_i in [lo_i, hi_i],  sum_i p_i w_i = 1,

by enumerating the vertices of the box-plus-one-equality polytope: at a vertex
at most one weight is strictly interior, so after sorting support points by
value it suffices to try every candidate interior index with all other weights
pinned at the favorable extreme.  This is structurally independent of the
quantile-balancing closed form it is used to check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleCellError, InfiniteCapError

_FEAS_TOL = 1e-9


@dataclass(frozen=True)
class Cell:
    """One conditioning cell: support points of lam_y with conditional probs."""

    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        p = np.asarray(self.probs, dtype=float)
        if v.shape != p.shape or v.ndim != 1:
            raise ValueError("values and probs must be 1-d arrays of equal length")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("cell probabilities must be nonnegative and sum to one")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "probs", p)


@dataclass(frozen=True)
class DiscreteDist:
    """Finite-support joint distribution over (cell, lam_y)."""

    cell_probs: np.ndarray
    cells: tuple

    def __post_init__(self):
        p = np.asarray(self.cell_probs, dtype=float)
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("cell probabilities must be nonnegative and sum to one")
        if len(self.cells) != p.size:
            raise ValueError("cell_probs and cells length mismatch")
        object.__setattr__(self, "cell_probs", p)
        object.__setattr__(self, "cells", tuple(self.cells))


def _solve_cell_sup(values, probs, w_lo, w_hi):
    """Exact supremum of sum p*w*v over the box with mean-one constraint."""
    order = np.argsort(values, kind="stable")
    v = values[order]
    p = probs[order]
    lo = w_lo[order]
    hi = w_hi[order]
    total_lo = float(p @ lo)
    total_hi = float(p @ hi)
    if total_lo > 1.0 + _FEAS_TOL or total_hi < 1.0 - _FEAS_TOL:
        raise InfeasibleCellError("no weights in the box reach a mean of one")
    n = v.size
    # prefix[j] = sum_{i<j} p_i lo_i v_i ; suffix[j] = sum_{i>j} p_i hi_i v_i
    plv = p * lo * v
    phv = p * hi * v
    pl = p * lo
    ph = p * hi
    best = -math.inf
    prefix_val = np.concatenate(([0.0], np.cumsum(plv)))
    prefix_mass = np.concatenate(([0.0], np.cumsum(pl)))
    suffix_val = np.concatenate((np.cumsum(phv[::-1])[::-1], [0.0]))
    suffix_mass = np.concatenate((np.cumsum(ph[::-1])[::-1], [0.0]))
    for j in range(n):
        residual = 1.0 - prefix_mass[j] - suffix_mass[j + 1]
        if p[j] <= 0.0:
            if abs(residual) > _FEAS_TOL:
                continue
            wj = lo[j]
        else:
            wj = residual / p[j]
            if wj < lo[j] - _FEAS_TOL or wj > hi[j] + _FEAS_TOL:
                continue
            wj = min(max(wj, lo[j]), hi[j])
        cand = prefix_val[j] + suffix_val[j + 1] + p[j] * wj * v[j]
        if cand > best:
            best = cand
    if not math.isfinite(best):
        raise InfeasibleCellError("vertex enumeration found no feasible candidate")
    return best


def lp_sharp_bound(dist, band, direction="upper"):
    """Exact sharp bound for a finite-support distribution.

    ``band`` is a sequence of (w_lower, w_upper) array pairs, one per cell,
    aligned with the cell's support points.  Caps must be finite.
    """
    value = 0.0
    for cell_p, cell, (w_lo, w_hi) in zip(dist.cell_probs, dist.cells, band):
        w_lo = np.asarray(w_lo, dtype=float)
        w_hi = np.asarray(w_hi, dtype=float)
        if np.any(np.isinf(w_hi)):
            raise InfiniteCapError("lp_sharp_bound requires finite caps")
        v = cell.values if direction == "upper" else -cell.values
        sup = _solve_cell_sup(v, cell.probs, w_lo, w_hi)
        value += cell_p * (sup if direction == "upper" else -sup)
    return value


def random_instance(seed, max_groups=20, max_support=10):
    """Deterministic random finite-support instance with a valid band.

    Roughly half the cells draw values from a small integer grid so ties in
    lam_y occur often enough to exercise the mass-point logic.
    """
    rng = np.random.default_rng(seed)
    n_groups = int(rng.integers(1, max_groups + 1))
    cell_probs = rng.dirichlet(np.ones(n_groups))
    cells = []
    band = []
    for _ in range(n_groups):
        n_sup = int(rng.integers(1, max_support + 1))
        if rng.random() < 0.5:
            values = rng.integers(-3, 4, size=n_sup).astype(float)
        else:
            values = rng.normal(0.0, 2.0, size=n_sup)
        probs = rng.dirichlet(np.ones(n_sup))
        cells.append(Cell(values=values, probs=probs))
        roll = rng.random()
        if roll < 0.1:
            lo, hi = 1.0, 1.0
        elif roll < 0.2:
            lo, hi = float(rng.uniform(0.0, 1.0)), 1.0
        elif roll < 0.3:
            lo, hi = 1.0, float(1.0 + rng.exponential(1.0))
        else:
            lo = float(rng.uniform(0.0, 1.0))
            hi = float(1.0 + rng.exponential(1.0))
        band.append((np.full(n_sup, lo), np.full(n_sup, hi)))
    return DiscreteDist(cell_probs=cell_probs, cells=tuple(cells)), band


def to_bound_problem(dist, band, direction="upper"):
    """Flatten a DiscreteDist + band into a BoundProblem for the closed form."""
    from .bounds import BoundProblem, SensitivityBand

    lam_y = []
    weights = []
    group = []
    lo = []
    hi = []
    for g, (cell_p, cell, (w_lo, w_hi)) in enumerate(
        zip(dist.cell_probs, dist.cells, band)
    ):
        lam_y.append(cell.values)
        weights.append(cell_p * cell.probs)
        group.append(np.full(cell.values.size, g))
        lo.append(w_lo)
        hi.append(w_hi)
    return BoundProblem(
        lambda_y=np.concatenate(lam_y),
        band=SensitivityBand(np.concatenate(lo), np.concatenate(hi)),
        direction=direction,
        group_key=np.concatenate(group),
        weights=np.concatenate(weights),
    )


def max_discrepancy(n_instances, seed=0, max_groups=20, max_support=10):
    """Max |closed form - exact LP| over seeded random instances (both sides)."""
    from .bounds import sharp_bound

    worst = 0.0
    for i in range(n_instances):
        dist, band = random_instance(seed + i, max_groups, max_support)
        for direction in ("upper", "lower"):
            exact = lp_sharp_bound(dist, band, direction)
            closed = sharp_bound(to_bound_problem(dist, band, direction)).value
            worst = max(worst, abs(exact - closed))
    return worst
