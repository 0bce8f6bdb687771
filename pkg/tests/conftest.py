"""Shared pytest fixtures for stadion tests."""

from __future__ import annotations

import os
from collections.abc import Iterator

import numpy as np
import pytest

from stadion.config import _reset_config
from stadion.dataset import gen_synthetic, standardize
from stadion.models import ClustererConfig, Dataset, GeneratorSpec, LabeledDataset, StabilityParams


@pytest.fixture(autouse=True)
def _isolate_env(monkeypatch: pytest.MonkeyPatch) -> Iterator[None]:
    """Ensure tests do not leak ``STADION_*`` variables or cached settings."""
    for key in list(os.environ):
        if key.startswith("STADION_"):
            monkeypatch.delenv(key, raising=False)
    _reset_config()
    yield
    _reset_config()


def pytest_configure(config: pytest.Config) -> None:
    """Register custom markers."""
    config.addinivalue_line("markers", "integration: end-to-end selection scenario on generated fixtures")
    config.addinivalue_line("markers", "slow: long-running test")


@pytest.fixture()
def three_blobs() -> LabeledDataset:
    """Three well-separated 2D Gaussian blobs, 60 points."""
    return gen_synthetic(GeneratorSpec(kind="gaussian_blobs", n_samples=60, n_clusters=3, separation=12.0), seed=3)


@pytest.fixture()
def three_blobs_std(three_blobs: LabeledDataset) -> Dataset:
    return standardize(three_blobs.data)


@pytest.fixture()
def small_random() -> Dataset:
    """Unstructured 2D data, 40 points."""
    rng = np.random.default_rng(11)
    return Dataset(values=rng.normal(size=(40, 2)), name="random")


@pytest.fixture()
def kmeans_cfg() -> ClustererConfig:
    return ClustererConfig(algorithm="kmeans", n_runs=3, seed=0)


@pytest.fixture()
def fast_params() -> StabilityParams:
    """Cheap stability parameters for unit tests."""
    return StabilityParams(d_perturbations=3, omega=(2, 3), seed=0)
