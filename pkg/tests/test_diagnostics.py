"""
Unit tests for the time-change diagnostics service.

Tests the residual transformation on its three integration paths, the Exp(1)
goodness-of-fit and independence tests, and the full per-component report.
"""

import math

import numpy as np
import pytest

from app.core.exceptions import InsufficientEventsException, InvalidParameterException
from app.core.random_source import RandomSource
from app.schemas.events import EventStream
from app.schemas.fit import HawkesFit
from app.schemas.hawkes import GridExcitement, HawkesSpec
from app.schemas.smoothing import CallableExcitement, SmoothedExcitement
from app.services.cls_service import hawkes_estimator
from app.services.diagnostics_service import (
    _compensator,
    _piecewise_compensator,
    _quadrature_residuals,
    chunked_ks,
    diagnose,
    integration_method,
    intensity,
    ks_exp1,
    qq_pairs,
    serial_independence,
    time_change_residuals,
)
from app.services.event_service import bin_counts
from app.services.smoothing_service import box_smooth


def _single(component, support: float = 1.0) -> SmoothedExcitement:
    return SmoothedExcitement(
        method="test", delta=support, support=support, components=[[component]]
    )


@pytest.mark.unit
class TestTimeChangeResiduals:
    """Test suite for the residual transformation."""

    def test_poisson_interarrival(self, poisson_spec: HawkesSpec):
        """
        Test that rate 2 over 0.5 seconds gives residual 1.

        Args:
            poisson_spec: Poisson model with rate 2
        """
        stream = EventStream(times=([1.0, 1.5],), t_end=3.0)

        residuals = time_change_residuals(stream, [2.0], poisson_spec)

        assert residuals[0].tolist() == pytest.approx([1.0])

    def test_interval_excitement(self, interval_spec: HawkesSpec):
        """
        Test intensity 2 after the event at 0 integrates to 1 over (0, 0.5].

        Args:
            interval_spec: eta = 1, h = 1 on (0, 1]
        """
        stream = EventStream(times=([0.0, 0.5],), t_start=-1.0, t_end=2.0)

        residuals = time_change_residuals(stream, [1.0], interval_spec, burn_in=0.0)

        assert integration_method(np.array([1.0]), interval_spec) == "compensator"
        assert residuals[0].tolist() == pytest.approx([1.0])

    def test_piecewise_path_clamps_negative_intensity(self):
        """Test that a negative grid value cannot make the integral negative."""
        model = _single(GridExcitement(points=[(1.0, -2.0)]))
        stream = EventStream(times=([0.0, 1.5],), t_start=-1.0, t_end=2.0)

        residuals = time_change_residuals(stream, [1.0], model, burn_in=0.0)

        assert integration_method(np.array([1.0]), model) == "piecewise"
        assert residuals[0].tolist() == pytest.approx([0.5])

    def test_quadrature_path_clamps_negative_intensity(self):
        """Test the same clamped integral on the quadrature path."""
        model = _single(
            CallableExcitement(function=lambda t: np.full_like(t, -2.0), end=1.0)
        )
        stream = EventStream(times=([0.0, 1.5],), t_start=-1.0, t_end=2.0)

        residuals = time_change_residuals(stream, [1.0], model, burn_in=0.0)

        assert integration_method(np.array([1.0]), model) == "quadrature"
        assert residuals[0].tolist() == pytest.approx([0.5], abs=1e-6)

    def test_intensity_counts_only_the_past(self, interval_spec: HawkesSpec):
        """
        Test that an event does not excite itself at its own timestamp.

        Args:
            interval_spec: eta = 1, h = 1 on (0, 1]
        """
        stream = EventStream(times=([0.5],), t_end=3.0)

        values = intensity(stream, np.array([1.0]), interval_spec, 0, [0.5, 1.0, 1.5, 2.0])

        assert values.tolist() == [1.0, 2.0, 2.0, 1.0]

    def test_compensator_matches_quadrature(self, exp_spec: HawkesSpec, exp_stream: EventStream):
        """
        Test the closed-form compensator against adaptive quadrature.

        Args:
            exp_spec: Exponential-kernel model
            exp_stream: Simulated sample
        """
        stream = exp_stream.prefix(30.0)
        kept = stream.times[0]

        exact = np.diff(_compensator(stream, exp_spec.eta, exp_spec, 0, kept))
        numeric = _quadrature_residuals(stream, exp_spec.eta, exp_spec, 0, kept, 1e-10)

        np.testing.assert_allclose(exact, numeric, rtol=1e-6, atol=1e-8)

    def test_compensator_matches_piecewise(self, exp_stream: EventStream):
        """
        Test both exact paths on a non-negative box-smoothed fit.

        Args:
            exp_stream: Simulated sample
        """
        fit = hawkes_estimator(bin_counts(exp_stream, 0.5), 3.0)
        values = np.abs(fit.hhat)
        model = box_smooth(fit.model_copy(update={"hhat": values}), 0.75)
        stream = exp_stream.prefix(200.0)
        kept = stream.times[0][stream.times[0] > 3.0]

        exact = np.diff(_compensator(stream, fit.eta_hat, model, 0, kept))
        piecewise = np.diff(_piecewise_compensator(stream, fit.eta_hat, model, 0, kept))

        np.testing.assert_allclose(exact, piecewise, rtol=1e-8, atol=1e-8)

    def test_burn_in_leaves_too_few_events(self, poisson_spec: HawkesSpec):
        """
        Test that fewer than two events after burn-in is an error.

        Args:
            poisson_spec: Poisson model
        """
        stream = EventStream(times=([0.5, 1.0, 2.5],), t_end=3.0)

        with pytest.raises(InsufficientEventsException):
            time_change_residuals(stream, [2.0], poisson_spec, burn_in=2.0)

    def test_dimension_mismatch(self, bivariate_spec: HawkesSpec):
        """
        Test that stream, baseline and model must agree in dimension.

        Args:
            bivariate_spec: Bivariate model
        """
        stream = EventStream(times=([0.5, 1.0],), t_end=3.0)

        with pytest.raises(InvalidParameterException):
            time_change_residuals(stream, [0.5, 0.25], bivariate_spec)


@pytest.mark.unit
class TestGoodnessOfFit:
    """Test suite for the KS and Ljung-Box tests."""

    def test_single_residual(self):
        """Test D = 0.5 for a single residual at the Exp(1) median."""
        statistic, _ = ks_exp1([math.log(2.0)])

        assert statistic == pytest.approx(0.5)

    def test_quantile_residuals(self):
        """Test that Exp(1) quantiles at (i - 0.5) / m fit almost perfectly."""
        m = 1_000
        residuals = -np.log(1.0 - (np.arange(1, m + 1) - 0.5) / m)

        statistic, p_value = ks_exp1(residuals)

        assert statistic <= 1.0 / (2 * m) + 1e-12
        assert p_value > 0.99

    def test_zero_residuals(self):
        """Test D = 1 for a degenerate sample at 0."""
        statistic, p_value = ks_exp1(np.zeros(10))

        assert statistic == pytest.approx(1.0)
        assert p_value < 1e-6

    def test_empty_residuals(self):
        """Test that an empty sample cannot be tested."""
        with pytest.raises(InsufficientEventsException):
            ks_exp1([])

    def test_alternating_sequence(self):
        """Test that a, b, a, b, ... is strongly serially dependent."""
        residuals = np.tile([0.5, 1.5], 100)

        statistic, p_value = serial_independence(residuals, lags=20)

        assert statistic > 100
        assert p_value < 0.01

    def test_constant_sequence(self):
        """Test the zero-variance guard."""
        with pytest.raises(InsufficientEventsException):
            serial_independence(np.ones(50), lags=5)

    def test_too_few_residuals(self):
        """Test that there must be more residuals than lags."""
        with pytest.raises(InsufficientEventsException):
            serial_independence(np.arange(10.0), lags=10)

    def test_qq_pairs(self):
        """Test sorted empirical quantiles against Exp(1) plotting positions."""
        pairs = qq_pairs([2.0, 0.5, 1.0])

        assert pairs[:, 1].tolist() == [0.5, 1.0, 2.0]
        np.testing.assert_allclose(pairs[:, 0], -np.log(1.0 - np.array([0.5, 1.5, 2.5]) / 3))

    def test_chunked_ks(self):
        """Test one p-value per full chunk, the short tail left out."""
        residuals = RandomSource(seed=3).generator().exponential(size=250)

        result = chunked_ks(residuals, chunk=100)

        assert result.p_values.shape == (2,)
        assert result.median_p_value == pytest.approx(float(np.median(result.p_values)))
        assert 0.0 <= result.rejected_fraction <= 1.0

    def test_chunk_larger_than_sample(self):
        """Test that at least one full chunk is required."""
        with pytest.raises(InsufficientEventsException):
            chunked_ks(np.ones(5), chunk=10)


@pytest.mark.unit
class TestDiagnose:
    """Test suite for the full report."""

    def test_true_model(self, bivariate_spec: HawkesSpec, bivariate_stream: EventStream):
        """
        Test that the true model passes KS on its own simulation.

        Args:
            bivariate_spec: Bivariate model
            bivariate_stream: Simulated sample
        """
        report = diagnose(bivariate_stream, bivariate_spec.eta, bivariate_spec, lags=10, chunk=200)

        assert report.method == "compensator"
        assert report.burn_in == bivariate_spec.max_support
        assert [c.component for c in report.components] == [1, 2]
        for component in report.components:
            assert component.ks_p_value > 0.001
            assert component.ljung_box_p_value is not None
            assert component.qq.shape == (component.residuals.size, 2)
            assert component.chunked is not None
            assert component.events_used == component.residuals.size + 1

    def test_wrong_baseline_is_rejected(
        self, bivariate_spec: HawkesSpec, bivariate_stream: EventStream
    ):
        """
        Test that halving eta is detected.

        Args:
            bivariate_spec: Bivariate model
            bivariate_stream: Simulated sample
        """
        wrong = bivariate_spec.model_copy(update={"eta": bivariate_spec.eta / 2})

        report = diagnose(bivariate_stream, wrong.eta, wrong, lags=10)

        assert report.components[0].ks_p_value < 0.05

    def test_smoothed_fit(self, exp_stream: EventStream):
        """
        Test a report for a box-smoothed fit.

        Args:
            exp_stream: Simulated sample
        """
        fit = hawkes_estimator(bin_counts(exp_stream, 0.5), 3.0)
        model = box_smooth(fit, 0.5)

        report = diagnose(exp_stream, fit.eta_hat, model, lags=10)

        assert report.method in ("compensator", "piecewise")
        assert report.burn_in == 3.0
        assert report.components[0].residuals.min() >= 0.0

    def test_short_residuals_skip_ljung_box(self, poisson_spec: HawkesSpec):
        """
        Test that Ljung-Box is left empty when there are too few residuals.

        Args:
            poisson_spec: Poisson model
        """
        stream = EventStream(times=([0.5, 1.0, 2.5],), t_end=3.0)

        report = diagnose(stream, [2.0], poisson_spec, lags=20)

        assert report.components[0].ljung_box_p_value is None
        assert report.components[0].residuals.tolist() == pytest.approx([1.0, 3.0])

    def test_fit_document_drives_diagnostics(self, exp_stream: EventStream):
        """
        Test that a fit restored from JSON gives the same residuals.

        Args:
            exp_stream: Simulated sample
        """
        fit = hawkes_estimator(bin_counts(exp_stream, 0.5), 3.0)
        restored = HawkesFit.model_validate_json(fit.model_dump_json())

        original = time_change_residuals(exp_stream, fit.eta_hat, box_smooth(fit, 0.5))
        again = time_change_residuals(exp_stream, restored.eta_hat, box_smooth(restored, 0.5))

        np.testing.assert_array_equal(original[0], again[0])


@pytest.mark.slow
class TestSerialIndependenceSize:
    """Acceptance-scale size check of the Ljung-Box test."""

    def test_rejection_rate_under_null(self):
        """Test the 5% rejection rate on i.i.d. Exp(1) draws."""
        generators = RandomSource(seed=17).spawn(200)

        rejections = [
            serial_independence(source.generator().exponential(size=10_000), lags=10)[1] < 0.05
            for source in generators
        ]

        assert 0.02 <= np.mean(rejections) <= 0.09
