"""
Tests for the Monte-Carlo studies.

Small runs check shapes, seeding and the obvious directions of each study; the
slow classes run the studies at full scale against their statistical targets.
"""

import math

import numpy as np
import pytest

from app.services.experiment_service import (
    bias_study,
    bivariate_example_spec,
    coverage_study,
    diagnostics_study,
    inar_identity_study,
    support_study,
    truncation_discrimination_study,
    variance_scaling_study,
)
from app.services.hawkes_model_service import branching_matrix


@pytest.mark.integration
class TestSmallStudies:
    """Test suite for reduced-size study runs."""

    def test_coverage_targets(self):
        """Test the two coverage targets and their truths."""
        result = coverage_study(replications=3, horizon=600.0, seed=1, workers=1)

        assert [target.name for target in result.targets] == ["eta_1", "h_21(1)"]
        assert [target.truth for target in result.targets] == pytest.approx([0.5, 0.125])
        assert len(result.mean_events) == 2
        for target in result.targets:
            assert 0.0 <= target.coverage <= 1.0
            assert target.mean_estimated_variance > 0

    def test_coverage_independent_of_workers(self):
        """Test that replications are seeded per child, not per worker."""
        serial = coverage_study(replications=2, horizon=400.0, seed=5, workers=1)
        parallel = coverage_study(replications=2, horizon=400.0, seed=5, workers=2)

        assert serial.model_dump() == parallel.model_dump()

    def test_variance_scaling_directions(self):
        """Test that excitement variances fall with delta and with the window."""
        result = variance_scaling_study(
            seed=2,
            horizon=2_000.0,
            deltas=(0.25, 0.5, 1.0),
            horizons=(500.0, 1_000.0, 2_000.0),
            supports=(3.0, 4.0),
        )

        sweeps = {sweep.parameter: sweep for sweep in result.sweeps}
        assert set(sweeps) == {"delta", "horizon", "support"}
        assert sweeps["delta"].excitement_slope < 0
        assert sweeps["horizon"].excitement_slope < 0
        assert sweeps["horizon"].baseline_slope < 0
        assert sweeps["support"].excitement_slope is not None
        assert result.events > 0

    def test_bias_points(self):
        """Test one bias point per bin size with truth h(delta)."""
        result = bias_study(replications=3, deltas=(1.0, 0.5), horizon=500.0, seed=3, workers=1)

        assert [point.delta for point in result.points] == [1.0, 0.5]
        assert result.points[0].truth == pytest.approx(math.exp(-1.1))
        assert result.points[1].truth == pytest.approx(math.exp(-0.55))
        for point in result.points:
            assert point.bias == pytest.approx(point.mean_estimate - point.truth)
            assert point.mean_error == pytest.approx(point.standard_error / math.sqrt(3))

    def test_support_points(self):
        """Test the truncated point and one tail point with its median over replications."""
        result = support_study(
            delta0s=(0.5,),
            s_max=4.0,
            horizon=800.0,
            seed=4,
            decays=(2.0,),
            tail_horizon=800.0,
            replications=3,
            workers=1,
        )

        truncated, tail = result.points
        assert truncated.true_support == 3.0
        assert 0.0 < truncated.s_hat <= 4.0
        assert len(tail.replicated_s_hat) == 3
        assert tail.s_hat == sorted(tail.replicated_s_hat)[1]
        assert tail.ignored_mass == pytest.approx(math.exp(-2.0 * tail.s_hat) / 2.0)
        assert result.tail_horizon == 800.0

    def test_truncation_curves(self):
        """Test both AIC curves over p = 1..s_max / delta0 and the per-replication supports."""
        result = truncation_discrimination_study(
            seed=5, horizon=1_000.0, s_max=4.0, replications=2, workers=1
        )

        assert result.aic_full.shape == (8,)
        assert result.aic_truncated.shape == (8,)
        assert len(result.s_hat_full) == len(result.s_hat_truncated) == 2
        assert all(0.0 < s_hat <= 4.0 for s_hat in result.s_hat_truncated)
        assert result.mean_s_hat_full == pytest.approx(sum(result.s_hat_full) / 2)

    def test_diagnostics_rates(self):
        """Test rejection rates per component."""
        result = diagnostics_study(replications=2, horizon=300.0, seed=6, workers=1)

        assert len(result.true_model_rejection) == 2
        assert all(0.0 <= rate <= 1.0 for rate in result.wrong_model_rejection)
        assert all(count > 0 for count in result.mean_residuals)

    def test_inar_identities(self):
        """Test the INAR(2) moment identities on a shorter sequence."""
        result = inar_identity_study(n=20_000, seed=7)

        assert abs(result.sample_mean - result.expected_mean) < 4 * result.mean_standard_error
        assert (
            abs(result.residual_variance - result.expected_residual_variance)
            < 4 * result.variance_standard_error
        )
        assert np.all(np.abs(result.residual_autocorrelation) < result.autocorrelation_bound)

    def test_same_seed_same_study(self):
        """Test that a study is reproducible from its seed."""
        first = inar_identity_study(n=2_000, seed=8)
        second = inar_identity_study(n=2_000, seed=8)

        assert first.model_dump_json() == second.model_dump_json()

    def test_example_spec_is_stable(self):
        """Test that the bivariate example is subcritical with supports 3, 50 and pi."""
        spec = bivariate_example_spec()

        assert spec.d == 2
        assert spec.max_support == 50.0
        assert branching_matrix(spec).spectral_radius < 1.0


@pytest.mark.slow
class TestCoverageAcceptance:
    """Full-scale coverage, unbiasedness and variance calibration on the bivariate model."""

    @pytest.fixture(scope="class")
    def result(self):
        return coverage_study(seed=2024, workers=-1)

    def test_coverage(self, result):
        """
        Test empirical 95% coverage for eta_1 and h_21(1).

        Args:
            result: Coverage study
        """
        for target in result.targets:
            assert 0.92 <= target.coverage <= 0.97, target.name

    def test_unbiased(self, result):
        """
        Test mean estimates against the truths.

        Args:
            result: Coverage study
        """
        eta, h21 = result.targets
        assert abs(eta.mean_estimate - 0.5) <= 0.02
        assert abs(h21.mean_estimate - 0.125) <= 0.01

    def test_variance_calibration(self, result):
        """
        Test mean estimated over empirical variance.

        Args:
            result: Coverage study
        """
        for target in result.targets:
            assert 0.8 <= target.variance_ratio <= 1.25, target.name


@pytest.mark.slow
class TestStudyAcceptance:
    """Full-scale runs of the remaining studies."""

    def test_variance_scaling(self):
        """Test the 1 / delta and 1 / T laws and the flat baseline variance."""
        sweeps = {sweep.parameter: sweep for sweep in variance_scaling_study(seed=11).sweeps}

        assert sweeps["delta"].excitement_slope == pytest.approx(-1.0, abs=0.25)
        assert sweeps["horizon"].excitement_slope == pytest.approx(-1.0, abs=0.25)
        assert abs(sweeps["delta"].baseline_slope) <= 0.3

    def test_tail_behavior(self):
        """Test that faster decay selects shorter supports with small ignored mass."""
        result = support_study(seed=12, workers=-1)

        truncated = [point for point in result.points if point.true_support is not None]
        tails = [point for point in result.points if point.ignored_mass is not None]
        for point in truncated:
            assert 3.0 - 3 * point.delta0 <= point.s_hat <= 3.0 + 3 * point.delta0
        supports = [point.s_hat for point in tails]
        assert all(a > b for a, b in zip(supports, supports[1:]))
        assert all(point.ignored_mass < 1e-2 for point in tails)

    def test_bias_tradeoff(self):
        """Test bias beyond two standard errors at delta = 1 and within one at delta = 0.1."""
        points = {point.delta: point for point in bias_study(seed=13, workers=-1).points}

        assert points[1.0].bias_in_standard_errors > 2
        assert points[0.1].bias_in_standard_errors <= 1

    def test_truncation_discrimination(self):
        """Test that cutting h_21 at 4 does not lengthen the mean selected support."""
        result = truncation_discrimination_study(seed=14, workers=-1)

        assert result.mean_s_hat_truncated <= result.mean_s_hat_full

    def test_diagnostics_calibration(self):
        """Test KS size under the true model and power against eta halved."""
        result = diagnostics_study(seed=15, workers=-1)

        assert all(rate <= 0.10 for rate in result.true_model_rejection)
        assert all(rate >= 0.90 for rate in result.wrong_model_rejection)

    def test_inar_identities(self):
        """Test the INAR(2) moment identities at n = 10^5."""
        result = inar_identity_study(seed=16)

        assert abs(result.sample_mean - 2.0) < 3 * result.mean_standard_error
        assert abs(result.residual_variance - 2.0) < 3 * result.variance_standard_error
        assert np.all(np.abs(result.residual_autocorrelation) < result.autocorrelation_bound)

