"""
Unit tests for the simulation service.

Tests the thinning operator, INAR(p) sequences, cluster simulation of Hawkes
processes and the determinism of seeded random sources.
"""

import math

import numpy as np
import pytest

from app.core.exceptions import InvalidParameterException, RejectedSpecException
from app.core.random_source import RandomSource, spawn_generators
from app.schemas.hawkes import ExpDecayExcitement, HawkesSpec, InarSpec
from app.services.hawkes_model_service import stationary_intensity
from app.services.simulation_service import (
    inar_residuals,
    simulate_hawkes,
    simulate_hawkes_with_genealogy,
    simulate_inar,
    thin,
)


@pytest.mark.unit
class TestRandomSource:
    """Test suite for seeded random sources."""

    def test_same_seed_same_draws(self):
        """Test that a source replays its stream."""
        source = RandomSource(seed=3)

        assert source.generator().random(5).tolist() == source.generator().random(5).tolist()

    def test_children_differ(self):
        """Test that spawned children are distinct streams."""
        first, second = spawn_generators(RandomSource(seed=3), 2)

        assert first.random(5).tolist() != second.random(5).tolist()

    def test_spawn_is_deterministic(self):
        """Test that spawning twice yields the same children."""
        a = [g.random() for g in spawn_generators(RandomSource(seed=3), 3)]
        b = [g.random() for g in spawn_generators(RandomSource(seed=3), 3)]

        assert a == b


@pytest.mark.unit
class TestThinning:
    """Test suite for the thinning operator."""

    def test_empty_sum(self):
        """Test that thinning zero counts gives 0."""
        generator = RandomSource(seed=1).generator()

        assert all(thin(0.7, 0, generator) == 0 for _ in range(100))

    def test_zero_alpha(self):
        """Test that alpha = 0 gives 0."""
        generator = RandomSource(seed=1).generator()

        assert all(thin(0.0, 25, generator) == 0 for _ in range(100))

    def test_mean(self):
        """Test that alpha o y has mean alpha * y."""
        generator = RandomSource(seed=1).generator()

        draws = [thin(0.5, 10, generator) for _ in range(100_000)]

        assert abs(np.mean(draws) - 5.0) < 0.07

    def test_negative_input(self):
        """Test that negative arguments are rejected."""
        with pytest.raises(InvalidParameterException):
            thin(-0.1, 3, 1)


@pytest.mark.unit
class TestInarSimulation:
    """Test suite for INAR(p) sequences."""

    def test_degenerate_autoregression(self):
        """Test that A = 0 gives i.i.d. Poisson(a0) draws."""
        spec = InarSpec(a0=[1.0], coefficients=[[[0.0]]])

        x = simulate_inar(spec, 100_000, RandomSource(seed=2))

        assert x.shape == (100_000, 1)
        assert abs(x.mean() - 1.0) < 0.01

    def test_stationary_mean_and_residual_variance(self):
        """Test E X = (1 - sum A)^{-1} a0 and Var u = diag of the same."""
        spec = InarSpec(a0=[1.0], coefficients=[[[0.25]], [[0.25]]])

        x = simulate_inar(spec, 200_000, RandomSource(seed=4))
        residuals = inar_residuals(spec, x)

        assert spec.stationary_mean()[0] == pytest.approx(2.0)
        # AR(2) with sum 0.5 inflates the standard error of the mean by 1 / (1 - 0.5)
        mean_error = 2.0 * math.sqrt(2.0 / x.shape[0])
        assert abs(x.mean() - 2.0) < 3 * mean_error
        assert abs(residuals.var() - 2.0) < 0.05

    def test_unstable_spec(self):
        """Test that sum A with spectral radius >= 1 is rejected."""
        spec = InarSpec(a0=[1.0], coefficients=[[[0.6]], [[0.5]]])

        with pytest.raises(RejectedSpecException):
            simulate_inar(spec, 10, RandomSource(seed=1))

    def test_shape_check(self):
        """Test that coefficient matrices must be d x d."""
        with pytest.raises(ValueError):
            InarSpec(a0=[1.0, 1.0], coefficients=[[[0.1]]])


@pytest.mark.unit
class TestHawkesSimulation:
    """Test suite for cluster simulation."""

    def test_poisson_rate(self, poisson_spec: HawkesSpec):
        """
        Test the event rate of a pure Poisson model.

        Args:
            poisson_spec: Poisson model with rate 2
        """
        stream = simulate_hawkes(poisson_spec, 10_000.0, RandomSource(seed=5))

        rate = stream.counts[0] / stream.length
        assert abs(rate - 2.0) < 3 * math.sqrt(2.0 / 10_000.0)

    def test_exponential_rate(self):
        """Test the stationary rate eta / (1 - integral of h)."""
        spec = HawkesSpec(
            eta=[1.0], excitement=[[ExpDecayExcitement(scale=1.0, rate=1.1, cutoff=20.0)]]
        )

        stream = simulate_hawkes(spec, 10_000.0, RandomSource(seed=6), burn_in=100.0)

        expected = 1.0 / (1.0 - (1.0 - math.exp(-22.0)) / 1.1)
        assert stream.counts[0] / stream.length == pytest.approx(expected, rel=0.1)

    def test_bivariate_rates(self, bivariate_spec: HawkesSpec):
        """
        Test both stationary rates of the bivariate example.

        Args:
            bivariate_spec: Bivariate model
        """
        stream = simulate_hawkes(bivariate_spec, 20_000.0, RandomSource(seed=8))

        rates = np.array(stream.counts) / stream.length
        np.testing.assert_allclose(rates, stationary_intensity(bivariate_spec), rtol=0.1)

    def test_determinism(self, bivariate_spec: HawkesSpec):
        """
        Test that the same seed reproduces the stream bit for bit.

        Args:
            bivariate_spec: Bivariate model
        """
        first = simulate_hawkes(bivariate_spec, 500.0, RandomSource(seed=9))
        second = simulate_hawkes(bivariate_spec, 500.0, RandomSource(seed=9))

        for a, b in zip(first.times, second.times):
            np.testing.assert_array_equal(a, b)

    def test_window(self, bivariate_spec: HawkesSpec):
        """
        Test that events lie in (0, T].

        Args:
            bivariate_spec: Bivariate model
        """
        stream = simulate_hawkes(bivariate_spec, 300.0, RandomSource(seed=10))

        assert stream.t_start == 0.0 and stream.t_end == 300.0
        for times in stream.times:
            assert times.size == 0 or (times[0] > 0 and times[-1] <= 300.0)

    def test_genealogy_offspring_means(self, exp_spec: HawkesSpec):
        """
        Test that offspring per parent matches the integral of h.

        Args:
            exp_spec: Exponential-kernel model
        """
        _, genealogy = simulate_hawkes_with_genealogy(exp_spec, 5_000.0, RandomSource(seed=12))

        assert genealogy.immigrant_totals[0] > 0
        assert genealogy.offspring_means[0, 0] == pytest.approx(1.0 / 1.1, rel=0.05)

    def test_untruncated_rejected(self):
        """Test that infinite support cannot be simulated."""
        spec = HawkesSpec(eta=[1.0], excitement=[[ExpDecayExcitement(scale=0.5, rate=1.0)]])

        with pytest.raises(RejectedSpecException):
            simulate_hawkes(spec, 10.0, RandomSource(seed=1))

    def test_invalid_horizon(self, poisson_spec: HawkesSpec):
        """
        Test that the window length must be positive.

        Args:
            poisson_spec: Poisson model
        """
        with pytest.raises(InvalidParameterException):
            simulate_hawkes(poisson_spec, 0.0, RandomSource(seed=1))
