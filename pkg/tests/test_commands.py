"""Tests for the command layer (select, paths, benchmark, gen and shared helpers).

Every command returns a response dict with ``success``, ``data``,
``message``, ``stage`` and ``error`` keys; failures name the stage they
stopped in and carry the exit code of their error family.
"""

from __future__ import annotations

import json
import math
import xml.etree.ElementTree as ET
from pathlib import Path
from typing import Any

import pandas as pd
import pytest

from stadion.commands import (
    exit_code,
    handle_command_error,
    make_response,
    recompute_summary,
    run_benchmark,
    run_gen,
    run_paths,
    run_select,
    summarize,
)
from stadion.commands.benchmark import METHODS, PER_DATASET_COLUMNS, per_dataset_table
from stadion.commands.utils import atomic_write_text, resolve_grid, resolve_k_max
from stadion.config import RunConfig
from stadion.exceptions import ConfigurationError, DataError
from stadion.models import Dataset, DatasetResult, MethodResult, Partition


def _gen_blobs(path: Path, seed: int = 3, n: int = 60) -> Path:
    response = run_gen(path, seed=seed, kind="gaussian_blobs", n_samples=n, n_clusters=3, separation=12.0)
    assert response["success"] is True
    return path


def _config(data: Path | None, out: Path, **overrides: Any) -> RunConfig:
    fields: dict[str, Any] = {
        "data": data,
        "labels_col": -1,
        "n_runs": 3,
        "d": 3,
        "omega": "2..3",
        "grid_m": 4,
        "kmax": 4,
        "out": out,
        "seed": 0,
    }
    fields.update(overrides)
    return RunConfig(**fields)


@pytest.fixture()
def blobs_csv(tmp_path: Path) -> Path:
    return _gen_blobs(tmp_path / "blobs.csv")


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


class TestResponses:
    def test_make_response_keys(self) -> None:
        response = make_response(success=True, data={"k": 1}, message="ok", stage="write")
        assert response == {"success": True, "data": {"k": 1}, "message": "ok", "stage": "write", "error": None}

    def test_stadion_error(self) -> None:
        response = handle_command_error(DataError("no file", error_code="FILE_NOT_FOUND"), "load")
        assert response["success"] is False
        assert response["stage"] == "load"
        assert response["error"]["error_code"] == "FILE_NOT_FOUND"
        assert response["message"] == "load failed: no file"
        assert exit_code(response) == 3

    def test_unexpected_error(self, caplog: pytest.LogCaptureFixture) -> None:
        with caplog.at_level("ERROR", logger="stadion.commands.utils"):
            response = handle_command_error(RuntimeError("boom"), "select")
        assert response["error"] == {"error": "boom", "error_code": "UNEXPECTED_ERROR", "exit_code": 4}
        assert exit_code(response) == 4
        assert "Unexpected error in stage select" in caplog.text

    def test_exit_code_success(self) -> None:
        assert exit_code(make_response(success=True)) == 0


class TestResolvers:
    def test_k_max_from_flag(self) -> None:
        data = Dataset(values=[[float(i)] for i in range(30)])
        assert resolve_k_max(RunConfig(kmax=5), data, None) == 5

    def test_k_max_from_labels(self) -> None:
        data = Dataset(values=[[float(i)] for i in range(30)])
        labels = Partition.from_labels([i % 3 for i in range(30)])
        assert resolve_k_max(RunConfig(), data, labels) == 20

    def test_k_max_capped_at_distinct_points(self, caplog: pytest.LogCaptureFixture) -> None:
        data = Dataset(values=[[0.0], [0.0], [1.0], [2.0]])
        with caplog.at_level("WARNING", logger="stadion.commands.utils"):
            assert resolve_k_max(RunConfig(kmax=10), data, None) == 3
        assert "distinct" in caplog.text

    def test_k_max_required_without_labels(self) -> None:
        with pytest.raises(ConfigurationError):
            resolve_k_max(RunConfig(), Dataset(values=[[0.0], [1.0]]), None)

    def test_grid(self) -> None:
        data = Dataset(values=[[0.0, 0.0, 0.0, 0.0], [1.0, 1.0, 1.0, 1.0]])
        grid, calibrate = resolve_grid(RunConfig(grid_m=3), data)
        assert grid.values == pytest.approx((0.0, 1.0, 2.0))
        assert calibrate is False
        grid, calibrate = resolve_grid(RunConfig(grid_m=3, eps_max="auto"), data)
        assert calibrate is True
        grid, _ = resolve_grid(RunConfig(grid_m=3, eps_max=4.0), data)
        assert grid.eps_max == 4.0

    def test_atomic_write_leaves_no_temp_files(self, tmp_path: Path) -> None:
        target = atomic_write_text(tmp_path / "nested" / "file.txt", "hello\n")
        assert target.read_text() == "hello\n"
        assert [p.name for p in target.parent.iterdir()] == ["file.txt"]


# ---------------------------------------------------------------------------
# gen
# ---------------------------------------------------------------------------


class TestGen:
    def test_writes_labels_last(self, tmp_path: Path) -> None:
        response = run_gen(tmp_path / "cube.csv", seed=1, kind="uniform_cube", n_samples=25, n_features=3)
        assert response["success"] is True
        assert response["data"]["k_star"] == 1
        frame = pd.read_csv(tmp_path / "cube.csv", header=None)
        assert frame.shape == (25, 4)
        assert set(frame[3]) == {0}

    def test_reproducible(self, tmp_path: Path) -> None:
        a = _gen_blobs(tmp_path / "a.csv", seed=9)
        b = _gen_blobs(tmp_path / "b.csv", seed=9)
        assert a.read_bytes() == b.read_bytes()

    def test_invalid_spec(self, tmp_path: Path) -> None:
        response = run_gen(tmp_path / "x.csv", kind="letters_like", n_features=3)
        assert response["success"] is False
        assert response["stage"] == "configure"
        assert exit_code(response) == 2

    def test_unknown_kind(self, tmp_path: Path) -> None:
        response = run_gen(tmp_path / "x.csv", kind="spirals")
        assert exit_code(response) == 2
        assert not (tmp_path / "x.csv").exists()


# ---------------------------------------------------------------------------
# select
# ---------------------------------------------------------------------------


class TestSelect:
    def test_artifacts(self, blobs_csv: Path, tmp_path: Path) -> None:
        response = run_select(_config(blobs_csv, tmp_path / "out"))
        assert response["success"] is True, response
        assert response["stage"] == "write"
        assert response["data"]["k_hat"] == 3
        assert response["data"]["k_max"] == 4
        names = sorted(Path(p).name for p in response["data"]["artifacts"])
        assert names == ["paths.csv", "paths.svg", "report.json"]

        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["k_hat"] == 3
        assert report["ranking"][0] == 3
        assert [row["k"] for row in report["trade_off"]] == [1, 2, 3, 4]
        assert "n_jobs" not in report["report"]["params"]
        assert report["report"]["provenance"]["master_seed"] == 0

        table = pd.read_csv(tmp_path / "out" / "paths.csv")
        assert list(table.columns) == ["K", "epsilon", "stab_b", "stab_w", "stadion"]
        assert len(table) == 4 * 4

        svg = ET.parse(tmp_path / "out" / "paths.svg").getroot()
        ids = {g.get("id") for g in svg.iter() if g.get("class") == "panel"}
        assert "trade-off" in ids

    def test_emit_subset(self, blobs_csv: Path, tmp_path: Path) -> None:
        response = run_select(_config(blobs_csv, tmp_path / "out", emit="json"))
        assert [Path(p).name for p in response["data"]["artifacts"]] == ["report.json"]
        assert not (tmp_path / "out" / "paths.svg").exists()

    def test_output_independent_of_workers(self, blobs_csv: Path, tmp_path: Path) -> None:
        run_select(_config(blobs_csv, tmp_path / "one", n_jobs=1))
        run_select(_config(blobs_csv, tmp_path / "two", n_jobs=2))
        for name in ("report.json", "paths.csv"):
            assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()

    def test_calibrated(self, blobs_csv: Path, tmp_path: Path) -> None:
        response = run_select(_config(blobs_csv, tmp_path / "out", eps_max="auto", emit="json"))
        assert response["success"] is True, response
        assert 0.0 < response["data"]["eps_max"] <= 2.0 * math.sqrt(2.0) + 1e-12
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["report"]["diagnostics"]["eps_max_calibrated"] is not None

    def test_missing_file(self, tmp_path: Path) -> None:
        response = run_select(_config(tmp_path / "missing.csv", tmp_path / "out"))
        assert response["success"] is False
        assert response["stage"] == "load"
        assert response["error"]["error_code"] == "FILE_NOT_FOUND"
        assert exit_code(response) == 3

    def test_no_data_configured(self, tmp_path: Path) -> None:
        response = run_select(_config(None, tmp_path / "out"))
        assert response["stage"] == "load"
        assert exit_code(response) == 2

    def test_kmax_required_without_labels(self, blobs_csv: Path, tmp_path: Path) -> None:
        response = run_select(_config(blobs_csv, tmp_path / "out", labels_col=None, kmax=None))
        assert response["stage"] == "configure"
        assert exit_code(response) == 2
        assert not (tmp_path / "out").exists()


# ---------------------------------------------------------------------------
# paths
# ---------------------------------------------------------------------------


class TestPaths:
    def test_artifacts(self, blobs_csv: Path, tmp_path: Path) -> None:
        response = run_paths(_config(blobs_csv, tmp_path / "out"))
        assert response["success"] is True, response
        assert response["data"]["m"] == 4
        payload = json.loads((tmp_path / "out" / "paths.json").read_text())
        assert [p["k"] for p in payload["paths"]] == [1, 2, 3, 4]
        assert payload["provenance"]["stream_tags"]["between"] == 1
        svg = ET.parse(tmp_path / "out" / "paths.svg").getroot()
        ids = {g.get("id") for g in svg.iter() if g.get("class") == "panel"}
        assert "trade-off" not in ids

    def test_same_paths_as_select(self, blobs_csv: Path, tmp_path: Path) -> None:
        run_paths(_config(blobs_csv, tmp_path / "paths", emit="csv"))
        run_select(_config(blobs_csv, tmp_path / "select", emit="csv"))
        assert (tmp_path / "paths" / "paths.csv").read_bytes() == (tmp_path / "select" / "paths.csv").read_bytes()

    def test_calibrated_grid_truncated(self, blobs_csv: Path, tmp_path: Path) -> None:
        response = run_paths(_config(blobs_csv, tmp_path / "out", eps_max="auto", emit="json"))
        assert response["success"] is True, response
        payload = json.loads((tmp_path / "out" / "paths.json").read_text())
        assert payload["provenance"]["grid"][-1] == pytest.approx(response["data"]["eps_max"])

    def test_k_max_capped(self, tmp_path: Path) -> None:
        csv = tmp_path / "dupes.csv"
        csv.write_text("0,0\n0,0\n1,1\n1,1\n5,5\n5,5\n")
        response = run_paths(_config(csv, tmp_path / "out", labels_col=None, kmax=10, emit="csv"))
        assert response["success"] is True, response
        assert response["data"]["k_max"] == 3


# ---------------------------------------------------------------------------
# benchmark
# ---------------------------------------------------------------------------


class TestSummarize:
    def _datasets(self) -> list[DatasetResult]:
        return [
            DatasetResult(
                name="one",
                n_samples=10,
                n_features=2,
                k_star=2,
                results={
                    "a": MethodResult(k_hat=2, ari=1.0),
                    "b": MethodResult(k_hat=3, ari=0.5),
                    "c": MethodResult(error={"error_code": "COMPUTATION_ERROR"}),
                },
            ),
            DatasetResult(
                name="two",
                n_samples=10,
                n_features=2,
                k_star=2,
                results={
                    "a": MethodResult(k_hat=3, ari=0.7),
                    "b": MethodResult(k_hat=2, ari=0.7),
                    "c": MethodResult(k_hat=4, ari=0.9),
                },
            ),
        ]

    def test_wins_and_ranks(self) -> None:
        summary = summarize(self._datasets(), ["a", "b", "c"], seed=4)
        assert summary.wins == {"a": 1, "b": 1, "c": 0}
        assert summary.average_ranks == pytest.approx({"a": 1.75, "b": 2.25, "c": 2.0})
        assert summary.seed == 4

    def test_table_round_trip(self, tmp_path: Path) -> None:
        summary = summarize(self._datasets(), ["a", "b", "c"])
        table = per_dataset_table(summary)
        assert list(table.columns) == PER_DATASET_COLUMNS
        assert table.loc[(table["dataset"] == "one") & (table["method"] == "c"), "error_code"].item() == "COMPUTATION_ERROR"
        csv = tmp_path / "per_dataset.csv"
        table.to_csv(csv, index=False)
        again = recompute_summary(csv)
        assert again.wins == summary.wins
        assert again.average_ranks == pytest.approx(summary.average_ranks)

    def test_empty(self) -> None:
        with pytest.raises(DataError) as exc_info:
            summarize([], ["a"])
        assert exc_info.value.error_code == "EMPTY_BENCHMARK"


class TestBenchmark:
    def test_end_to_end(self, tmp_path: Path) -> None:
        data_dir = tmp_path / "data"
        _gen_blobs(data_dir / "blobs_a.csv", seed=3)
        _gen_blobs(data_dir / "blobs_b.csv", seed=4)
        response = run_benchmark(_config(data_dir, tmp_path / "out", labels_col=None))
        assert response["success"] is True, response
        assert response["data"]["datasets"] == 2

        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["methods"] == list(METHODS)
        assert all(0 <= wins <= 2 for wins in summary["wins"].values())

        table = pd.read_csv(tmp_path / "out" / "per_dataset.csv")
        assert len(table) == 2 * len(METHODS)
        assert set(table["k_star"]) == {3}

        again = recompute_summary(tmp_path / "out" / "per_dataset.csv")
        assert again.wins == summary["wins"]
        assert again.average_ranks == pytest.approx(summary["average_ranks"])

    def test_dataset_smaller_than_default_k_max(self, tmp_path: Path) -> None:
        data_dir = tmp_path / "data"
        _gen_blobs(data_dir / "tiny.csv", seed=3, n=12)
        _gen_blobs(data_dir / "large.csv", seed=4, n=90)
        response = run_benchmark(_config(data_dir, tmp_path / "out", labels_col=None, kmax=None))
        assert response["success"] is True, response
        assert response["data"]["datasets"] == 2

        table = pd.read_csv(tmp_path / "out" / "per_dataset.csv")
        tiny = table[table["n_samples"] == 12]
        assert len(tiny) == len(METHODS)
        assert tiny["error_code"].isna().all()
        assert (tiny["k_hat"] <= 12).all()
        indices = tiny[~tiny["method"].str.startswith("stadion")]
        assert (indices["k_hat"] <= 11).all()

    def test_missing_directory(self, tmp_path: Path) -> None:
        response = run_benchmark(_config(tmp_path / "nope", tmp_path / "out"))
        assert response["error"]["error_code"] == "FILE_NOT_FOUND"
        assert exit_code(response) == 3

    def test_empty_directory(self, tmp_path: Path) -> None:
        (tmp_path / "empty").mkdir()
        response = run_benchmark(_config(tmp_path / "empty", tmp_path / "out"))
        assert response["error"]["error_code"] == "EMPTY_BENCHMARK"

    def test_no_directory_configured(self, tmp_path: Path) -> None:
        response = run_benchmark(_config(None, tmp_path / "out"))
        assert exit_code(response) == 2
