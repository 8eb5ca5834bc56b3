"""Pytest configuration and fixtures for expo-distance tests."""

from __future__ import annotations

import logging
import os
from pathlib import Path

import pytest

from expo_distance.asymptotics import BridgeConfig
from expo_distance.common import PitSample
from expo_distance.distributions import make_exponential, sample
from expo_distance.ingest import SourceFeatures, read_features, simulate_poisson_events, write_events
from expo_distance.reporting import strip_metadata
from tests.test_helpers import synthetic_features

LOGGER = logging.getLogger(__name__)

COUP_FEATURES_ENV = "EXPO_DISTANCE_COUP_FEATURES"
POISSON_SOURCES = 6
POISSON_RATE = 0.05
POISSON_DURATION = 20_000.0


@pytest.fixture(scope="session")
def singleton() -> PitSample:
    """The one-point sample {1}."""
    return PitSample.from_values([1.0])


@pytest.fixture(scope="session")
def pair() -> PitSample:
    """The two-point sample {1, 2}."""
    return PitSample.from_values([1.0, 2.0])


@pytest.fixture(scope="session")
def exp_sample() -> PitSample:
    """A seeded exponential(1) sample of size 500."""
    return sample(make_exponential(1.0), 500, seed=11)


@pytest.fixture(scope="session")
def small_bridge() -> BridgeConfig:
    """A coarse limit-law configuration that keeps unit tests fast."""
    return BridgeConfig(grid_subintervals=2000, reps=400, seed=3)


@pytest.fixture
def poisson_source_dir(tmp_path: Path) -> Path:
    """A directory of simulated Poisson event lists, every second one with gaps."""
    directory = tmp_path / "events"
    directory.mkdir()
    for index in range(POISSON_SOURCES):
        gaps = [(5000.0, 5600.0), (12_000.0, 12_250.0)] if index % 2 else []
        series = simulate_poisson_events(f"src{index}", POISSON_RATE, POISSON_DURATION, gaps, seed=100 + index)
        gaps_path = directory / f"src{index}.gaps.csv" if gaps else None
        write_events(series, directory / f"src{index}.csv", gaps_path)
    LOGGER.info("✓ Simulated %s sources in %s", POISSON_SOURCES, directory)
    return directory


@pytest.fixture(scope="session")
def cluster_features() -> list[SourceFeatures]:
    """Labeled synthetic features in three separated clusters, 40 sources per class."""
    return synthetic_features(40, seed=5)


@pytest.fixture(scope="session")
def coup_features() -> list[SourceFeatures]:
    """The real COUP feature table, when its path is given in the environment."""
    location = os.environ.get(COUP_FEATURES_ENV)
    if not location or not Path(location).is_file():
        pytest.skip(f"COUP data unavailable: set {COUP_FEATURES_ENV} to a features CSV")
    return read_features(strip_metadata(location))
