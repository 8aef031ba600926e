"""Tests for the OLS-contrast adapter."""

import numpy as np
import pytest

from sharpbounds import ols
from sharpbounds.errors import ConfigError


def ols_sample(n=500, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, 2))
    design = np.column_stack([np.ones(n), x])
    beta = np.array([1.0, 2.0, -0.5])
    y = design @ beta + rng.normal(size=n)
    return y, design


class TestIdentityCollapse:
    def test_recovers_contrast_of_beta_hat(self):
        y, design = ols_sample()
        beta_hat, *_ = np.linalg.lstsq(design, y, rcond=None)
        delta = np.array([0.0, 1.0, -2.0])
        lo, hi = ols.ols_bounds(y, design, ols.OLSConfig(delta=delta))
        assert lo.value == pytest.approx(delta @ beta_hat, abs=1e-10)
        assert hi.value == pytest.approx(delta @ beta_hat, abs=1e-10)


class TestBandedBounds:
    def test_band_brackets_point_estimate(self):
        y, design = ols_sample(seed=1)
        beta_hat, *_ = np.linalg.lstsq(design, y, rcond=None)
        delta = np.array([0.0, 1.0, 0.0])
        lo, hi = ols.ols_bounds(
            y, design, ols.OLSConfig(delta=delta, w_lower=0.5, w_upper=2.0)
        )
        assert lo.value <= delta @ beta_hat <= hi.value

    def test_bounds_widen_with_band(self):
        y, design = ols_sample(seed=2)
        delta = np.array([0.0, 1.0, 0.0])
        lo1, hi1 = ols.ols_bounds(
            y, design, ols.OLSConfig(delta=delta, w_lower=0.8, w_upper=1.25)
        )
        lo2, hi2 = ols.ols_bounds(
            y, design, ols.OLSConfig(delta=delta, w_lower=0.5, w_upper=2.0)
        )
        assert lo2.value <= lo1.value and hi2.value >= hi1.value

    def test_group_key_tightens_or_equals(self):
        # conditioning on finer cells enforces more constraints on W
        y, design = ols_sample(seed=3)
        delta = np.array([0.0, 1.0, 0.0])
        config = ols.OLSConfig(delta=delta, w_lower=0.5, w_upper=2.0)
        groups = (design[:, 1] > 0).astype(int)
        lo_m, hi_m = ols.ols_bounds(y, design, config)
        lo_g, hi_g = ols.ols_bounds(y, design, config, group_key=groups)
        assert lo_g.value >= lo_m.value - 1e-10
        assert hi_g.value <= hi_m.value + 1e-10


class TestValidation:
    def test_intercept_weight_must_be_zero(self):
        with pytest.raises(ConfigError):
            ols.OLSConfig(delta=np.array([1.0, 0.0]))

    def test_delta_length_checked(self):
        y, design = ols_sample(seed=4)
        with pytest.raises(ConfigError):
            ols.ols_bounds(y, design, ols.OLSConfig(delta=np.array([0.0, 1.0])))

    def test_lambda_values(self):
        y, design = ols_sample(seed=5)
        lam = ols.ols_lambda(design, np.array([0.0, 1.0, 0.0]))
        # the lambda moments reproduce the OLS coefficient: E[lam * y] = beta_1
        beta_hat, *_ = np.linalg.lstsq(design, y, rcond=None)
        assert float(lam @ y) / y.size == pytest.approx(beta_hat[1], abs=1e-10)
