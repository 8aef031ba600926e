"""Tests for the benchmark DGP, its closed-form truth, and the experiment loops."""

import math

import numpy as np
import pytest

from sharpbounds import simlab
from sharpbounds.errors import ConfigError


class TestDGP:
    def test_sample_shapes_and_support(self):
        rng = np.random.default_rng(0)
        x, z, y = simlab.dgp_sample(simlab.DGPConfig(n=5000), rng)
        assert x.shape == z.shape == y.shape == (5000,)
        assert set(np.unique(z)) <= {0.0, 1.0}
        assert np.all(np.abs(x) <= math.log(9.0))

    def test_propensity_margin(self):
        assert simlab.DGPConfig().propensity_margin == pytest.approx(0.1, abs=1e-12)

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            simlab.DGPConfig(n=0)
        with pytest.raises(ConfigError):
            simlab.DGPConfig(eta=-1.0)

    def test_treated_outcome_mean_zero(self):
        rng = np.random.default_rng(1)
        x, z, y = simlab.dgp_sample(simlab.DGPConfig(n=40000), rng)
        assert float(y[z == 1].mean()) == pytest.approx(0.0, abs=0.03)


class TestTruth:
    def test_point_identified_at_c_zero(self):
        truth = simlab.true_bounds_c_dependence(0.0)
        assert (truth.psi_lower, truth.psi_upper) == (2.0, 2.0)

    def test_symmetric_around_two(self):
        truth = simlab.true_bounds_c_dependence(0.05, draws=10**5, seed=1)
        assert truth.psi_lower + truth.psi_upper == pytest.approx(4.0, abs=1e-9)
        assert truth.psi_lower < 2.0 < truth.psi_upper

    def test_monotone_widening_in_c(self):
        widths = []
        for c in (0.02, 0.05, 0.08):
            t = simlab.true_bounds_c_dependence(c, draws=10**5, seed=2)
            widths.append(t.psi_upper - t.psi_lower)
        assert widths[0] < widths[1] < widths[2]

    def test_unbounded_past_the_margin(self):
        t = simlab.true_bounds_c_dependence(0.11, draws=10**4)
        assert not t.finite
        assert t.psi_lower == -math.inf and t.psi_upper == math.inf

    def test_bounded_at_the_margin_itself(self):
        t = simlab.true_bounds_c_dependence(0.10, draws=10**5, seed=3)
        assert t.finite

    def test_negative_c_rejected(self):
        with pytest.raises(ConfigError):
            simlab.true_bounds_c_dependence(-0.01)


class TestEnvelope:
    def test_dominates_half_width(self):
        truth = simlab.true_bounds_c_dependence(0.05, draws=10**5, seed=4)
        half = (truth.psi_upper - truth.psi_lower) / 2.0
        env = simlab.bound_envelope_normal(0.05, 0.5, draws=10**5, seed=4)
        assert env >= half

    def test_epsilon_validated(self):
        with pytest.raises(ConfigError):
            simlab.bound_envelope_normal(0.05, 1.5)


class TestExperimentLoops:
    def test_run_one_simulation_smoke(self):
        seq = np.random.SeedSequence(7)
        out = simlab.run_one_simulation(0.02, n=400, n_draws=20, seed_seq=seq)
        assert out["lower"] <= out["upper"]
        assert out["bootstrap"].draws.shape[1] == 2

    def test_coverage_experiment_deterministic(self):
        a = simlab.coverage_experiment([0.0], sims=4, n=300, n_draws=10, seed=5,
                                       truth_draws=10**4)
        b = simlab.coverage_experiment([0.0], sims=4, n=300, n_draws=10, seed=5,
                                       truth_draws=10**4)
        assert a == b
        assert set(a[0]) == set(simlab.COVERAGE_COLUMNS)

    def test_figure1_run_columns_and_truth(self):
        rows = simlab.figure1_run([0.0], sims=3, n=300, seed=6, truth_draws=10**4)
        assert set(rows[0]) == set(simlab.FIGURE1_COLUMNS)
        assert rows[0]["true_lb"] == 2.0 and rows[0]["true_ub"] == 2.0
        assert rows[0]["pct_infinite"] == 0.0
