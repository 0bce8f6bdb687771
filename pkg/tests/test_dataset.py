"""Tests for stadion.dataset: CSV ingestion, scaling and synthetic fixtures."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from stadion.dataset import gen_synthetic, load_csv, standardize, unstandardize, write_csv
from stadion.exceptions import DataError, ParseError
from stadion.models import Dataset, GeneratorSpec, LabeledDataset, Partition, Scaling


def _write(tmp_path: Path, text: str, name: str = "data.csv") -> Path:
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# load_csv
# ---------------------------------------------------------------------------


class TestLoadCsv:
    def test_plain_matrix(self, tmp_path: Path) -> None:
        data = load_csv(_write(tmp_path, "1,2\n3,4\n5,6\n"))
        assert isinstance(data, Dataset)
        assert data.values.tolist() == [[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]
        assert data.scaling == Scaling.RAW
        assert data.name == "data"

    def test_header_and_delimiter(self, tmp_path: Path) -> None:
        data = load_csv(_write(tmp_path, "x;y\n1.5;-2\n3e1;4\n"), delimiter=";", header=True)
        assert data.values.tolist() == [[1.5, -2.0], [30.0, 4.0]]

    def test_label_column(self, tmp_path: Path) -> None:
        loaded = load_csv(_write(tmp_path, "1,a,2\n3,b,4\n5,a,6\n"), label_col=1)
        assert isinstance(loaded, LabeledDataset)
        assert loaded.data.values.tolist() == [[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]
        assert loaded.labels.labels.tolist() == [0, 1, 0]
        assert loaded.labels.k == 2

    def test_negative_label_column_counts_from_end(self, tmp_path: Path) -> None:
        loaded = load_csv(_write(tmp_path, "1,2,7\n3,4,9\n"), label_col=-1)
        assert isinstance(loaded, LabeledDataset)
        assert loaded.data.n_features == 2
        assert loaded.labels.k == 2

    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(DataError) as exc_info:
            load_csv(tmp_path / "missing.csv")
        assert exc_info.value.error_code == "FILE_NOT_FOUND"
        assert exc_info.value.exit_code == 3

    def test_empty_file(self, tmp_path: Path) -> None:
        with pytest.raises(DataError) as exc_info:
            load_csv(_write(tmp_path, ""))
        assert exc_info.value.error_code == "EMPTY_FILE"

    def test_header_only(self, tmp_path: Path) -> None:
        with pytest.raises(DataError) as exc_info:
            load_csv(_write(tmp_path, "x,y\n"), header=True)
        assert exc_info.value.error_code == "EMPTY_FILE"

    def test_non_numeric_cell_located(self, tmp_path: Path) -> None:
        with pytest.raises(ParseError) as exc_info:
            load_csv(_write(tmp_path, "1,2\n3,abc\n"))
        assert exc_info.value.row == 2
        assert exc_info.value.column == 1

    def test_non_finite_cell_rejected(self, tmp_path: Path) -> None:
        with pytest.raises(ParseError) as exc_info:
            load_csv(_write(tmp_path, "1,2\nnan,4\n"))
        assert exc_info.value.row == 2
        assert exc_info.value.column == 0

    def test_short_row_is_ragged(self, tmp_path: Path) -> None:
        with pytest.raises(ParseError) as exc_info:
            load_csv(_write(tmp_path, "1,2\n3,4\n5\n"))
        assert exc_info.value.row == 3

    def test_long_row_is_ragged(self, tmp_path: Path) -> None:
        with pytest.raises(ParseError):
            load_csv(_write(tmp_path, "1,2\n3,4,5\n"))

    def test_label_column_out_of_range(self, tmp_path: Path) -> None:
        with pytest.raises(DataError) as exc_info:
            load_csv(_write(tmp_path, "1,2\n"), label_col=5)
        assert exc_info.value.error_code == "LABEL_COLUMN_OUT_OF_RANGE"


class TestWriteCsv:
    def test_round_trip(self, tmp_path: Path) -> None:
        rng = np.random.default_rng(0)
        data = Dataset(values=rng.normal(size=(20, 3)))
        labels = Partition(labels=rng.integers(0, 4, size=20), k=4)
        path = write_csv(data, tmp_path / "out.csv", labels=labels)
        loaded = load_csv(path, label_col=3)
        assert isinstance(loaded, LabeledDataset)
        np.testing.assert_allclose(loaded.data.values, data.values, rtol=1e-12, atol=0.0)
        assert Partition.from_labels(labels.labels).labels.tolist() == loaded.labels.labels.tolist()

    def test_label_length_checked(self, tmp_path: Path) -> None:
        with pytest.raises(DataError):
            write_csv(Dataset(values=np.zeros((3, 1))), tmp_path / "x.csv", labels=Partition(labels=[0], k=1))


# ---------------------------------------------------------------------------
# standardize
# ---------------------------------------------------------------------------


class TestStandardize:
    def test_zero_mean_unit_std(self) -> None:
        rng = np.random.default_rng(1)
        data = Dataset(values=rng.normal(3.0, 5.0, size=(50, 3)))
        scaled = standardize(data)
        np.testing.assert_allclose(scaled.values.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(scaled.values.std(axis=0, ddof=1), 1.0, rtol=1e-12)
        assert scaled.scaling == Scaling.STANDARDIZED
        assert scaled.zero_variance == ()

    def test_zero_variance_column(self, caplog: pytest.LogCaptureFixture) -> None:
        data = Dataset(values=[[1.0, 7.0], [2.0, 7.0], [3.0, 7.0]])
        with caplog.at_level("WARNING", logger="stadion.dataset"):
            scaled = standardize(data)
        assert scaled.values[:, 1].tolist() == [0.0, 0.0, 0.0]
        assert scaled.zero_variance == (1,)
        assert "Zero-variance" in caplog.text

    def test_tiny_magnitude_column_kept(self) -> None:
        data = Dataset(values=[[1.0, 1e-13], [2.0, 3e-13], [3.0, 2e-13]])
        scaled = standardize(data)
        assert scaled.zero_variance == ()
        np.testing.assert_allclose(scaled.values[:, 1], [-1.0, 1.0, 0.0], atol=1e-9)

    def test_large_constant_column(self) -> None:
        scaled = standardize(Dataset(values=[[1.0, 0.1 + 1e6], [2.0, 0.1 + 1e6], [4.0, 0.1 + 1e6]]))
        assert scaled.zero_variance == (1,)
        assert scaled.values[:, 1].tolist() == [0.0, 0.0, 0.0]

    def test_single_row(self) -> None:
        scaled = standardize(Dataset(values=[[4.0, 5.0]]))
        assert scaled.values.tolist() == [[0.0, 0.0]]
        assert scaled.zero_variance == (0, 1)

    def test_twice_rejected(self) -> None:
        scaled = standardize(Dataset(values=[[1.0], [2.0]]))
        with pytest.raises(DataError) as exc_info:
            standardize(scaled)
        assert exc_info.value.error_code == "ALREADY_STANDARDIZED"

    def test_unstandardize_inverts(self) -> None:
        rng = np.random.default_rng(2)
        data = Dataset(values=rng.uniform(-10, 10, size=(30, 2)))
        np.testing.assert_allclose(unstandardize(standardize(data)).values, data.values, rtol=1e-12, atol=1e-12)

    def test_unstandardize_raw_rejected(self) -> None:
        with pytest.raises(DataError):
            unstandardize(Dataset(values=[[1.0]]))

    def test_input_untouched(self) -> None:
        data = Dataset(values=[[1.0], [3.0]])
        standardize(data)
        assert data.values.tolist() == [[1.0], [3.0]]


# ---------------------------------------------------------------------------
# gen_synthetic
# ---------------------------------------------------------------------------


class TestGenSynthetic:
    def test_deterministic(self) -> None:
        spec = GeneratorSpec(kind="gaussian_blobs", n_samples=50)
        a = gen_synthetic(spec, seed=4)
        b = gen_synthetic(spec, seed=4)
        np.testing.assert_array_equal(a.data.values, b.data.values)
        np.testing.assert_array_equal(a.labels.labels, b.labels.labels)
        assert not np.array_equal(a.data.values, gen_synthetic(spec, seed=5).data.values)

    def test_blobs_sizes_balanced(self) -> None:
        fixture = gen_synthetic(GeneratorSpec(kind="gaussian_blobs", n_samples=31, n_clusters=3), seed=0)
        assert sorted(fixture.labels.cluster_sizes().tolist()) == [10, 10, 11]
        assert fixture.labels.k == 3

    def test_explicit_centers(self) -> None:
        spec = GeneratorSpec(kind="gaussian_blobs", n_samples=40, centers=((0.0, 0.0), (100.0, 0.0)), cluster_std=0.1)
        fixture = gen_synthetic(spec, seed=0)
        far = fixture.data.values[:, 0] > 50.0
        assert set(fixture.labels.labels[far].tolist()) == {1}

    def test_uniform_cube_bounds(self) -> None:
        fixture = gen_synthetic(GeneratorSpec(kind="uniform_cube", n_samples=200, n_features=10, scale=2.0), seed=0)
        assert fixture.data.values.shape == (200, 10)
        assert fixture.data.values.min() >= 0.0
        assert fixture.data.values.max() <= 2.0
        assert fixture.labels.k == 1

    def test_sphere_radius(self) -> None:
        spec = GeneratorSpec(kind="sphere_surface", n_samples=100, n_features=3, radius=2.0, thickness=0.2)
        radii = np.linalg.norm(gen_synthetic(spec, seed=0).data.values, axis=1)
        assert radii.min() >= 1.9 - 1e-12
        assert radii.max() <= 2.1 + 1e-12

    def test_correlated_gaussians(self) -> None:
        fixture = gen_synthetic(GeneratorSpec(kind="correlated_gaussians", n_samples=400), seed=0)
        assert fixture.labels.k == 2
        for label in (0, 1):
            members = fixture.data.values[fixture.labels.labels == label]
            assert np.corrcoef(members.T)[0, 1] > 0.7

    def test_letters_like(self) -> None:
        fixture = gen_synthetic(GeneratorSpec(kind="letters_like", n_samples=300), seed=0)
        assert fixture.labels.k == 3
        assert fixture.labels.cluster_sizes().tolist() == [100, 100, 100]

    def test_four_clusters_corner(self) -> None:
        fixture = gen_synthetic(GeneratorSpec(kind="four_clusters_corner", n_samples=200), seed=0)
        assert fixture.labels.cluster_sizes().tolist() == [140, 20, 20, 20]
