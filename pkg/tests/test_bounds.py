"""Unit and property tests for the closed-form sharp bound core."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sharpbounds import bounds, oracle
from sharpbounds.errors import (
    InconsistentQuantileError,
    InfiniteCapError,
    InvalidBandError,
)

seeds = st.integers(min_value=0, max_value=10**6)


def single_cell(values, lo, hi, direction="upper", probs=None):
    values = np.asarray(values, dtype=float)
    return bounds.BoundProblem(
        lambda_y=values,
        band=bounds.SensitivityBand(
            np.full(values.size, lo), np.full(values.size, hi)
        ),
        direction=direction,
        weights=probs,
    )


class TestHandExamples:
    def test_three_point_upper(self):
        # band [0.5, 2]: tau = 2/3, balancing quantile is the middle value,
        # optimum floors the low value at 0.5 and caps the high one at 2
        res = bounds.sharp_bound(single_cell([1.0, 2.0, 3.0], 0.5, 2.0))
        assert res.value == pytest.approx(2.5, abs=1e-12)
        assert res.tau_range == pytest.approx((2.0 / 3.0, 2.0 / 3.0))

    def test_three_point_lower(self):
        res = bounds.sharp_bound(single_cell([1.0, 2.0, 3.0], 0.5, 2.0, "lower"))
        assert res.value == pytest.approx(1.5, abs=1e-12)

    def test_degenerate_band_is_plug_in(self):
        vals = [3.0, -1.0, 0.5]
        for direction in ("lower", "upper"):
            res = bounds.sharp_bound(single_cell(vals, 1.0, 1.0, direction))
            assert res.value == pytest.approx(np.mean(vals), abs=1e-14)

    def test_tau_balance_values(self):
        assert bounds.tau_balance(0.5, 2.0) == pytest.approx(2.0 / 3.0)
        assert bounds.tau_balance(0.5, 2.0, "lower") == pytest.approx(1.0 / 3.0)
        assert bounds.tau_balance(0.5, math.inf) == 1.0
        assert bounds.tau_balance(1.0, 1.0) is None
        with pytest.raises(InvalidBandError):
            bounds.tau_balance(1.5, 2.0)

    def test_discrete_quantile_left_continuous(self):
        vals = [1.0, 2.0, 3.0]
        probs = [1 / 3] * 3
        assert bounds.discrete_quantile(vals, probs, 1 / 3) == 1.0
        assert bounds.discrete_quantile(vals, probs, 1 / 3 + 1e-6) == 2.0
        assert bounds.discrete_quantile(vals, probs, 1.0) == 3.0

    def test_mass_point_alpha_restores_mean(self):
        vals = np.array([0.0, 1.0, 1.0, 2.0])
        probs = np.full(4, 0.25)
        lo, hi = 0.5, 2.0
        tau = bounds.tau_balance(lo, hi)
        q = bounds.discrete_quantile(vals, probs, tau)
        alpha = bounds.mass_point_alpha(vals, probs, lo, hi, q)
        w_at = alpha * lo + (1 - alpha) * hi
        mean = 0.25 * lo + 0.5 * w_at + 0.25 * hi
        assert mean == pytest.approx(1.0, abs=1e-12)

    def test_mass_point_alpha_rejects_wrong_quantile(self):
        vals = np.array([0.0, 1.0, 2.0])
        probs = np.full(3, 1 / 3)
        with pytest.raises(InconsistentQuantileError):
            bounds.mass_point_alpha(vals, probs, 0.5, 2.0, 0.0)

    def test_shifted(self):
        res = bounds.BoundResult(value=2.0)
        assert res.shifted(1.0, scale=3.0).value == 7.0
        with pytest.raises(ValueError):
            res.shifted(0.0, scale=-1.0)


class TestInfiniteCap:
    def test_closed_form(self):
        # E[lo*v] + (1-lo)*max(v) with the sample max as support proxy
        prob = single_cell([0.0, 1.0, 4.0], 0.5, math.inf)
        res = bounds.bound_infinite_cap(prob)
        assert res.value == pytest.approx(0.5 * 5.0 / 3.0 + 0.5 * 4.0, abs=1e-12)
        assert res.n_infinite_cap == 3

    def test_unbounded_support_gives_infinity(self):
        prob = single_cell([0.0, 1.0], 0.5, math.inf)
        res = bounds.bound_infinite_cap(prob, q1={0: math.inf})
        assert res.value == math.inf and not res.finite

    def test_lower_direction_stays_finite(self):
        prob = single_cell([0.0, 1.0], 0.5, math.inf, "lower")
        res = bounds.bound_infinite_cap(prob)
        assert math.isfinite(res.value)
        assert res.value <= np.mean([0.0, 1.0])

    def test_requires_infinite_cap(self):
        with pytest.raises(InfiniteCapError):
            bounds.bound_infinite_cap(single_cell([0.0, 1.0], 0.5, 2.0))
        with pytest.raises(InfiniteCapError):
            bounds.optimal_weights(single_cell([0.0, 1.0], 0.5, math.inf))

    def test_moment_terms_flag_exceedance(self):
        terms = bounds.upper_moment_terms(
            np.array([0.0, 5.0]),
            np.array([0.5, 0.5]),
            np.array([math.inf, math.inf]),
            q=np.zeros(2),
            q_sup=np.array([3.0, 3.0]),
        )
        assert terms[0] == pytest.approx(1.5)
        assert terms[1] == math.inf


class TestValidation:
    def test_band_ordering(self):
        with pytest.raises(InvalidBandError):
            bounds.SensitivityBand(np.array([1.2]), np.array([2.0]))
        with pytest.raises(InvalidBandError):
            bounds.SensitivityBand(np.array([0.5]), np.array([0.9]))
        with pytest.raises(InvalidBandError):
            bounds.SensitivityBand(np.array([math.inf]), np.array([math.inf]))

    def test_band_must_be_cellwise_constant(self):
        prob = bounds.BoundProblem(
            lambda_y=np.array([0.0, 1.0]),
            band=bounds.SensitivityBand(np.array([0.2, 0.8]), np.array([2.0, 2.0])),
        )
        with pytest.raises(InvalidBandError):
            bounds.sharp_bound(prob)

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            bounds.BoundProblem(
                lambda_y=np.array([0.0, 1.0]),
                band=bounds.SensitivityBand(np.array([0.5]), np.array([2.0])),
                weights=np.array([0.9, 0.9]),
            )


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_negation_duality(seed):
    dist, band = oracle.random_instance(seed, max_groups=6, max_support=6)
    lower = bounds.sharp_bound(oracle.to_bound_problem(dist, band, "lower"))
    neg_upper = bounds.sharp_bound(
        oracle.to_bound_problem(dist, band, "upper").negated().negated()
    )
    # lower bound equals minus the upper bound of the negated problem
    mirrored = oracle.to_bound_problem(dist, band, "lower").negated()
    assert lower.value == pytest.approx(-bounds.sharp_bound(mirrored).value, abs=1e-12)
    assert neg_upper.direction == "upper"


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_band_monotonicity(seed):
    dist, band = oracle.random_instance(seed, max_groups=6, max_support=6)
    wider = [(lo * 0.9, 1.0 + (hi - 1.0) * 1.5) for lo, hi in band]
    for direction, sense in (("upper", 1.0), ("lower", -1.0)):
        base = bounds.sharp_bound(oracle.to_bound_problem(dist, band, direction))
        wide = bounds.sharp_bound(oracle.to_bound_problem(dist, wider, direction))
        assert sense * wide.value >= sense * base.value - 1e-10


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_optimal_weights_feasible_and_attaining(seed):
    dist, band = oracle.random_instance(seed, max_groups=6, max_support=6)
    problem = oracle.to_bound_problem(dist, band, "upper")
    res = bounds.sharp_bound(problem)
    ow = bounds.optimal_weights(problem)
    lo, hi = problem.band.w_lower, problem.band.w_upper
    assert np.all(ow.w_star >= lo - 1e-9) and np.all(ow.w_star <= hi + 1e-9)
    for _, idx in problem.groups():
        p = problem.weights[idx]
        if p.sum() > 0:
            assert float(p @ ow.w_star[idx]) / p.sum() == pytest.approx(1.0, abs=1e-9)
    assert float(problem.weights @ (ow.w_star * problem.lambda_y)) == pytest.approx(
        res.value, abs=1e-9
    )


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_identity_band_is_plug_in(seed):
    dist, band = oracle.random_instance(seed, max_groups=5, max_support=6)
    identity = [(np.ones_like(lo), np.ones_like(hi)) for lo, hi in band]
    problem = oracle.to_bound_problem(dist, identity, "upper")
    res = bounds.sharp_bound(problem)
    assert res.value == pytest.approx(bounds.plug_in_value(problem), abs=1e-12)
