"""
Test configuration and fixtures.

Provides the model specs, event streams and output directories shared by the test
modules.
"""

from pathlib import Path

import numpy as np
import pytest

from app.core.random_source import RandomSource
from app.schemas.events import BinCountSequence, EventStream
from app.schemas.hawkes import (
    ConstantIntervalExcitement,
    ExpDecayExcitement,
    HawkesSpec,
    ZeroExcitement,
)
from app.services.experiment_service import bivariate_example_spec
from app.services.simulation_service import simulate_hawkes


@pytest.fixture
def rng() -> RandomSource:
    """
    Seeded root random source.

    Returns:
        Random source with seed 12345
    """
    return RandomSource(seed=12345)


@pytest.fixture
def bivariate_spec() -> HawkesSpec:
    """
    Bivariate model with one zero, one interval, one power-law and one sine component.

    Returns:
        Stable bivariate Hawkes spec
    """
    return bivariate_example_spec()


@pytest.fixture
def poisson_spec() -> HawkesSpec:
    """
    Univariate homogeneous Poisson model with rate 2.

    Returns:
        Hawkes spec with zero excitement
    """
    return HawkesSpec(eta=[2.0], excitement=[[ZeroExcitement()]])


@pytest.fixture
def exp_spec() -> HawkesSpec:
    """
    Univariate model with h(t) = exp(-1.1 t) truncated at 20.

    Returns:
        Stable univariate Hawkes spec
    """
    return HawkesSpec(
        eta=[0.5], excitement=[[ExpDecayExcitement(scale=1.0, rate=1.1, cutoff=20.0)]]
    )


@pytest.fixture
def interval_spec() -> HawkesSpec:
    """
    Univariate model with eta = 1 and h(t) = 1 on (0, 1].

    Returns:
        Hawkes spec used by hand-checked residual examples
    """
    return HawkesSpec(
        eta=[1.0], excitement=[[ConstantIntervalExcitement(value=1.0, start=0.0, end=1.0)]]
    )


@pytest.fixture
def bivariate_stream(bivariate_spec: HawkesSpec) -> EventStream:
    """
    Simulated bivariate sample on (0, 2000].

    Args:
        bivariate_spec: Model to simulate

    Returns:
        Event stream
    """
    return simulate_hawkes(bivariate_spec, 2_000.0, RandomSource(seed=7))


@pytest.fixture
def exp_stream(exp_spec: HawkesSpec) -> EventStream:
    """
    Simulated univariate exponential-kernel sample on (0, 2000].

    Args:
        exp_spec: Model to simulate

    Returns:
        Event stream
    """
    return simulate_hawkes(exp_spec, 2_000.0, RandomSource(seed=11))


@pytest.fixture
def linear_counts() -> BinCountSequence:
    """
    Univariate counts 1, 2, 3, 4, 5.

    Returns:
        Bin-count sequence with delta 1
    """
    return BinCountSequence(delta=1.0, counts=np.arange(1, 6)[:, None])


@pytest.fixture
def output_dir(tmp_path: Path) -> Path:
    """
    Fresh output directory for a command run.

    Args:
        tmp_path: pytest temporary directory

    Returns:
        Path of a not yet existing output directory
    """
    return tmp_path / "out"
