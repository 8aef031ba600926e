"""Tests for the c-dependence IPW adapter."""

import math

import numpy as np
import pytest

from sharpbounds import ipw, simlab
from sharpbounds.errors import ConfigError, PropensityRangeError


def sample(n=1500, seed=0):
    rng = np.random.default_rng(seed)
    return simlab.dgp_sample(simlab.DGPConfig(n=n), rng)


class TestConfig:
    def test_requires_exactly_one_model(self):
        with pytest.raises(ConfigError):
            ipw.IPWConfig()
        with pytest.raises(ConfigError):
            ipw.IPWConfig(c=0.1, l1=0.5)
        with pytest.raises(ConfigError):
            ipw.IPWConfig(c=-0.1)

    def test_band_ordering(self):
        with pytest.raises(ConfigError):
            ipw.IPWConfig(l1=1.5, u1=2.0)
        cfg = ipw.IPWConfig(l1=0.5)
        assert cfg.u1 == 1.0 and cfg.l0 == 1.0 and cfg.u0 == 1.0


class TestBands:
    def test_c_dependence_hand_values(self):
        l, u = ipw.c_dependence_band(0.5, 0.1)
        assert l == pytest.approx((0.4 / 0.6), abs=1e-12)
        assert u == pytest.approx(0.6 / 0.4, abs=1e-12)

    def test_c_dependence_edges(self):
        l, u = ipw.c_dependence_band(0.05, 0.1)
        assert l == 0.0 and math.isfinite(u)
        l, u = ipw.c_dependence_band(0.95, 0.1)
        assert u == math.inf and l > 0.0

    def test_arm_band_formulas(self):
        e = np.array([0.4])
        l, u = 0.5, 2.0
        lo, hi = ipw._arm_band(e, l, u, arm=1)
        assert lo[0] == pytest.approx((1 - 0.4) / 2.0 + 0.4)
        assert hi[0] == pytest.approx((1 - 0.4) / 0.5 + 0.4)
        lo, hi = ipw._arm_band(e, l, u, arm=0)
        assert lo[0] == pytest.approx(1 - 0.4 + 0.4 * 0.5)
        assert hi[0] == pytest.approx(1 - 0.4 + 0.4 * 2.0)

    def test_infinite_cap_mapping(self):
        e = np.array([0.4])
        lo, hi = ipw._arm_band(e, 0.0, math.inf, arm=1)
        assert lo[0] == pytest.approx(0.4) and hi[0] == math.inf
        lo, hi = ipw._arm_band(e, 0.0, math.inf, arm=0)
        assert lo[0] == pytest.approx(0.6) and hi[0] == math.inf

    def test_band_contains_one(self):
        e = np.linspace(0.05, 0.95, 50)
        z = (e > 0.5).astype(float)
        lo, hi = ipw.resolve_bands(e, z, ipw.IPWConfig(c=0.03))
        assert np.all(lo <= 1.0 + 1e-12) and np.all(hi >= 1.0 - 1e-12)


class TestCollapseAndMonotonicity:
    def test_c_zero_recovers_plug_in_ate(self):
        x, z, y = sample()
        lo, hi = ipw.ipw_ate_bounds(x, z, y, ipw.IPWConfig(c=0.0))
        fitted = ipw.fit_ipw(x, z, y, ipw.IPWConfig(c=0.0))
        e = fitted.prop_model.predict(x[:, None])
        plug_in = float(np.mean(z * y / e - (1 - z) * y / (1 - e)))
        assert lo.value == pytest.approx(plug_in, abs=1e-10)
        assert hi.value == pytest.approx(plug_in, abs=1e-10)

    def test_apo_c_zero(self):
        x, z, y = sample(seed=2)
        lo, hi = ipw.ipw_apo_bounds(x, z, y, ipw.IPWConfig(c=0.0), arm=1)
        fitted = ipw.fit_ipw(x, z, y, ipw.IPWConfig(c=0.0), arm=1)
        e = fitted.prop_model.predict(x[:, None])
        plug_in = float(np.mean(z * y / e))
        assert lo.value == pytest.approx(plug_in, abs=1e-10)
        assert hi.value == pytest.approx(plug_in, abs=1e-10)

    def test_bounds_widen_with_c(self):
        x, z, y = sample(seed=3)
        widths = []
        for c in (0.0, 0.02, 0.05):
            lo, hi = ipw.ipw_ate_bounds(x, z, y, ipw.IPWConfig(c=c))
            assert lo.value <= hi.value + 1e-12
            widths.append(hi.value - lo.value)
        assert widths[0] <= widths[1] <= widths[2]

    def test_binary_treatment_enforced(self):
        x, z, y = sample(seed=4)
        with pytest.raises(ConfigError):
            ipw.fit_ipw(x, z + 0.5, y, ipw.IPWConfig(c=0.0))


class TestBootstrap:
    def test_bootstrap_deterministic(self):
        from sharpbounds import inference

        x, z, y = sample(n=600, seed=5)
        fitted = ipw.fit_ipw(x, z, y, ipw.IPWConfig(c=0.03))
        a = inference.percentile_bootstrap(600, fitted.bootstrap_bounds, 40, seed=9)
        b = inference.percentile_bootstrap(600, fitted.bootstrap_bounds, 40, seed=9)
        assert np.array_equal(a.draws, b.draws)
        assert a.set_ci == b.set_ci

    def test_bootstrap_interval_brackets_point(self):
        from sharpbounds import inference

        x, z, y = sample(n=800, seed=6)
        fitted = ipw.fit_ipw(x, z, y, ipw.IPWConfig(c=0.02))
        lo, hi = fitted.point_bounds()
        boot = inference.percentile_bootstrap(800, fitted.bootstrap_bounds, 200, seed=1)
        assert boot.set_ci[0] <= lo.value + 0.1
        assert boot.set_ci[1] >= hi.value - 0.1


def test_propensity_range_guard():
    with pytest.raises(PropensityRangeError):
        ipw._check_propensities(np.array([0.0, 0.5]))
