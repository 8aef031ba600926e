"""Tests for the exact finite-support vertex-enumeration solver."""

import numpy as np
import pytest

from sharpbounds import bounds, oracle
from sharpbounds.errors import InfeasibleCellError, InfiniteCapError


def test_two_point_hand_lp():
    # max 0.5*w1*1 s.t. 0.5*w0 + 0.5*w1 = 1, w in [0, 2]: w1 = 2, value 1
    dist = oracle.DiscreteDist(
        cell_probs=np.array([1.0]),
        cells=(oracle.Cell(values=np.array([0.0, 1.0]), probs=np.array([0.5, 0.5])),),
    )
    band = [(np.zeros(2), np.full(2, 2.0))]
    assert oracle.lp_sharp_bound(dist, band, "upper") == pytest.approx(1.0, abs=1e-12)
    assert oracle.lp_sharp_bound(dist, band, "lower") == pytest.approx(0.0, abs=1e-12)


def test_infeasible_cell_raises():
    dist = oracle.DiscreteDist(
        cell_probs=np.array([1.0]),
        cells=(oracle.Cell(values=np.array([0.0, 1.0]), probs=np.array([0.5, 0.5])),),
    )
    with pytest.raises(InfeasibleCellError):
        oracle.lp_sharp_bound(dist, [(np.full(2, 0.2), np.full(2, 0.4))])


def test_infinite_cap_rejected():
    dist = oracle.DiscreteDist(
        cell_probs=np.array([1.0]),
        cells=(oracle.Cell(values=np.array([0.0]), probs=np.array([1.0])),),
    )
    with pytest.raises(InfiniteCapError):
        oracle.lp_sharp_bound(dist, [(np.zeros(1), np.full(1, np.inf))])


def test_random_instance_deterministic():
    a_dist, a_band = oracle.random_instance(42)
    b_dist, b_band = oracle.random_instance(42)
    assert np.array_equal(a_dist.cell_probs, b_dist.cell_probs)
    for ca, cb in zip(a_dist.cells, b_dist.cells):
        assert np.array_equal(ca.values, cb.values)
        assert np.array_equal(ca.probs, cb.probs)
    for (la, ha), (lb, hb) in zip(a_band, b_band):
        assert np.array_equal(la, lb) and np.array_equal(ha, hb)


def test_cell_validation():
    with pytest.raises(ValueError):
        oracle.Cell(values=np.array([0.0, 1.0]), probs=np.array([0.7, 0.7]))
    with pytest.raises(ValueError):
        oracle.DiscreteDist(cell_probs=np.array([0.5, 0.6]), cells=(None, None))


def test_closed_form_matches_lp_quick():
    assert oracle.max_discrepancy(100, seed=123) <= 1e-9


def test_tied_values_agree():
    # heavy ties exercise the mass-point mixing in the closed form
    dist = oracle.DiscreteDist(
        cell_probs=np.array([1.0]),
        cells=(
            oracle.Cell(
                values=np.array([1.0, 1.0, 1.0, 2.0]),
                probs=np.array([0.25, 0.25, 0.25, 0.25]),
            ),
        ),
    )
    band = [(np.full(4, 0.4), np.full(4, 1.7))]
    for direction in ("lower", "upper"):
        exact = oracle.lp_sharp_bound(dist, band, direction)
        closed = bounds.sharp_bound(oracle.to_bound_problem(dist, band, direction))
        assert closed.value == pytest.approx(exact, abs=1e-10)
