"""Tests for noise perturbations, noise grids, seed derivation and calibration."""

from __future__ import annotations

import math

import numpy as np
import pytest
from pydantic import ValidationError

from stadion.dataset import standardize
from stadion.exceptions import ConfigurationError
from stadion.models import (
    ClustererConfig,
    Dataset,
    EpsilonGrid,
    NoiseSpec,
    SelectionDiagnostics,
    StabilityParams,
    StadionPath,
)
from stadion.perturbation import (
    SEED_RULE,
    bootstrap_indices,
    calibrate_eps_max,
    calibrate_from_paths,
    default_grid,
    derive_seed,
    perturb,
    perturb_with_indices,
    search_grid,
)


class TestDeriveSeed:
    def test_deterministic(self) -> None:
        assert derive_seed(7, 1, 2, 3) == derive_seed(7, 1, 2, 3)

    def test_paths_are_distinct(self) -> None:
        seeds = {derive_seed(0, tag, k, d) for tag in range(4) for k in range(5) for d in range(5)}
        assert len(seeds) == 100

    def test_master_matters(self) -> None:
        assert derive_seed(0, 1, 0, 0) != derive_seed(1, 1, 0, 0)

    def test_range(self) -> None:
        seed = derive_seed(123, 2, 4, 1, 0, 9)
        assert 0 <= seed < 2**64

    def test_rule_documented(self) -> None:
        assert set(SEED_RULE) == {"generator", "reference_fit", "between_noise", "within_noise", "within_fit"}


class TestPerturb:
    def _data(self) -> Dataset:
        return Dataset(values=np.random.default_rng(0).normal(size=(50, 3)))

    def test_uniform_bounded(self) -> None:
        data = self._data()
        out = perturb(data, NoiseSpec(kind="uniform", epsilon=0.25), seed=1)
        delta = out.values - data.values
        assert np.all(np.abs(delta) <= 0.25)
        assert np.any(delta != 0.0)

    def test_deterministic_in_seed(self) -> None:
        data = self._data()
        spec = NoiseSpec(kind="gaussian", epsilon=0.5)
        np.testing.assert_array_equal(perturb(data, spec, 3).values, perturb(data, spec, 3).values)
        assert not np.array_equal(perturb(data, spec, 3).values, perturb(data, spec, 4).values)

    def test_gaussian_scale_is_standard_deviation(self) -> None:
        data = Dataset(values=np.zeros((400, 50)))
        out = perturb(data, NoiseSpec(kind="gaussian", epsilon=2.0), seed=0)
        assert out.values.std() == pytest.approx(2.0, rel=0.02)

    def test_zero_noise_is_identity(self) -> None:
        data = self._data()
        out, rows = perturb_with_indices(data, NoiseSpec(kind="uniform", epsilon=0.0), seed=9)
        np.testing.assert_array_equal(out.values, data.values)
        assert rows is None

    def test_input_untouched(self) -> None:
        data = self._data()
        before = data.values.copy()
        perturb(data, NoiseSpec(kind="uniform", epsilon=1.0), seed=0)
        np.testing.assert_array_equal(data.values, before)

    def test_keeps_scaling_metadata(self) -> None:
        data = standardize(self._data())
        out = perturb(data, NoiseSpec(kind="uniform", epsilon=0.1), seed=0)
        assert out.scaling == data.scaling

    def test_bootstrap_rows(self) -> None:
        data = self._data()
        out, rows = perturb_with_indices(data, NoiseSpec(kind="bootstrap", epsilon=5.0), seed=2)
        assert rows is not None
        assert rows.shape == (50,)
        np.testing.assert_array_equal(out.values, data.values[rows])

    def test_bootstrap_indices_in_range(self) -> None:
        rows = bootstrap_indices(30, seed=0)
        assert rows.min() >= 0
        assert rows.max() < 30

    def test_negative_epsilon_rejected(self) -> None:
        with pytest.raises(ValidationError):
            NoiseSpec(kind="uniform", epsilon=-0.1)


class TestGrids:
    def test_default_grid(self) -> None:
        grid = default_grid(4, m=5)
        assert grid.values == pytest.approx((0.0, 0.5, 1.0, 1.5, 2.0))
        assert grid.values[0] == 0.0

    def test_default_grid_explicit_top(self) -> None:
        grid = default_grid(9, m=3, eps_max=1.0)
        assert grid.values == pytest.approx((0.0, 0.5, 1.0))

    def test_default_m(self) -> None:
        assert default_grid(2).m == 21

    def test_too_few_points(self) -> None:
        with pytest.raises(ConfigurationError):
            default_grid(2, m=1)

    def test_non_positive_top(self) -> None:
        with pytest.raises(ConfigurationError):
            default_grid(2, m=3, eps_max=0.0)

    def test_search_grid_aligned(self) -> None:
        search = search_grid(3, m=6)
        base = default_grid(3, m=6)
        assert search.m == 11
        assert search.eps_max == pytest.approx(2.0 * math.sqrt(3))
        assert search.values[:6] == pytest.approx(base.values)


def _paths(single: list[float], other: list[float]) -> list[StadionPath]:
    grid = EpsilonGrid(values=tuple(float(i) for i in range(len(single))))
    ones = [1.0] * len(single)
    return [
        StadionPath.from_components(1, grid, ones, [1.0 - s for s in single]),
        StadionPath.from_components(2, grid, ones, [1.0 - s for s in other]),
    ]


class TestCalibrateFromPaths:
    def test_first_dominated_point(self) -> None:
        eps, fallback = calibrate_from_paths(_paths([0.0, 0.0, 0.0, 0.0], [0.0, 0.5, -0.1, -0.2]), p=4)
        assert eps == 2.0
        assert fallback is False

    def test_zero_noise_skipped(self) -> None:
        eps, _ = calibrate_from_paths(_paths([0.0, 0.0, 0.0], [-1.0, 0.3, -0.5]), p=4)
        assert eps == 2.0

    def test_tie_counts_for_single_cluster(self) -> None:
        eps, _ = calibrate_from_paths(_paths([0.0, 0.25, 0.0], [0.0, 0.25, 0.5]), p=4)
        assert eps == 1.0

    def test_fallback(self, caplog: pytest.LogCaptureFixture) -> None:
        with caplog.at_level("WARNING", logger="stadion.perturbation"):
            eps, fallback = calibrate_from_paths(_paths([0.0, 0.0, 0.0], [0.0, 0.3, 0.4]), p=9)
        assert eps == 3.0
        assert fallback is True
        assert "falling back" in caplog.text

    def test_needs_two_candidates(self) -> None:
        with pytest.raises(ConfigurationError):
            calibrate_from_paths(_paths([0.0, 0.0], [0.0, 0.0])[:1], p=2)


class TestCalibrateEpsMax:
    def test_records_diagnostics(self, three_blobs_std: Dataset) -> None:
        diagnostics = SelectionDiagnostics()
        params = StabilityParams(d_perturbations=2, omega=(2,), seed=0)
        eps = calibrate_eps_max(ClustererConfig(n_runs=2), three_blobs_std, 3, params, m=4, diagnostics=diagnostics)
        assert eps > 0.0
        assert diagnostics.eps_max_calibrated == eps
        if not diagnostics.calibration_fallback:
            assert eps in search_grid(2, 4).values

    def test_rejects_single_candidate(self, three_blobs_std: Dataset) -> None:
        with pytest.raises(ConfigurationError):
            calibrate_eps_max(ClustererConfig(), three_blobs_std, 1, StabilityParams())
