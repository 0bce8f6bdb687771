"""The ``benchmark`` command: compare selection methods over labeled datasets.

Every ``*.csv`` file of the data directory is a dataset whose ground-truth
labels sit in ``labels_col`` (default: the last column).  For each dataset
the reference partitions of K = 1..k_max are fitted once; Stadion (max and
mean aggregation) and every internal validity index select a K among them,
and the selection is scored by ARI against the ground truth.

Aggregates per method:

* wins -- number of datasets where the selected K equals K*;
* average rank -- mean over datasets of the rank of the method's ARI
  (1 = best, ties share the midpoint rank, failed methods rank last).

Both are recomputable from ``per_dataset.csv`` alone (``recompute_summary``).
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from scipy.stats import rankdata

from ..baselines import reference_partitions, select_k_by_index
from ..config import RunConfig
from ..exceptions import ConfigurationError, DataError, StadionError
from ..models import (
    BenchmarkSummary,
    DatasetResult,
    IndexId,
    MeasureId,
    MethodResult,
    Partition,
)
from ..partitions import compare
from ..stability import select_k
from .utils import (
    FLOAT_FORMAT,
    atomic_write_text,
    handle_command_error,
    load_input,
    make_response,
    resolve_grid,
    resolve_k_max,
)

logger = logging.getLogger(__name__)

STADION_METHODS: tuple[str, ...] = ("stadion_max", "stadion_mean")
METHODS: tuple[str, ...] = STADION_METHODS + tuple(index.value for index in IndexId)

PER_DATASET_COLUMNS = ["dataset", "n_samples", "n_features", "k_star", "method", "k_hat", "ari", "error_code"]


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------


def summarize(datasets: Sequence[DatasetResult], methods: Sequence[str], seed: int = 0) -> BenchmarkSummary:
    """Wins and average ARI ranks of ``methods`` over ``datasets``."""
    if not datasets:
        raise DataError("No datasets to summarize", error_code="EMPTY_BENCHMARK")
    wins = {method: 0 for method in methods}
    rank_sums = {method: 0.0 for method in methods}
    for dataset in datasets:
        scores = []
        for method in methods:
            result = dataset.results.get(method, MethodResult())
            if result.k_hat is not None and result.k_hat == dataset.k_star:
                wins[method] += 1
            scores.append(result.ari if result.ari is not None else -math.inf)
        ranks = rankdata(-np.asarray(scores), method="average")
        for method, rank in zip(methods, ranks, strict=True):
            rank_sums[method] += float(rank)
    n = len(datasets)
    return BenchmarkSummary(
        methods=list(methods),
        datasets=list(datasets),
        wins=wins,
        average_ranks={method: rank_sums[method] / n for method in methods},
        seed=seed,
    )


def per_dataset_table(summary: BenchmarkSummary) -> pd.DataFrame:
    """Long table with one row per (dataset, method)."""
    records = []
    for dataset in summary.datasets:
        for method in summary.methods:
            result = dataset.results.get(method, MethodResult())
            records.append(
                {
                    "dataset": dataset.name,
                    "n_samples": dataset.n_samples,
                    "n_features": dataset.n_features,
                    "k_star": dataset.k_star,
                    "method": method,
                    "k_hat": result.k_hat,
                    "ari": result.ari,
                    "error_code": result.error.get("error_code", "") if result.error else "",
                }
            )
    return pd.DataFrame.from_records(records, columns=PER_DATASET_COLUMNS).astype({"k_hat": "Int64", "ari": "float64"})


def recompute_summary(per_dataset_csv: str | Path, seed: int = 0) -> BenchmarkSummary:
    """Rebuild wins and average ranks from a ``per_dataset.csv`` file."""
    frame = pd.read_csv(per_dataset_csv, keep_default_na=True, dtype={"dataset": str, "error_code": str})
    methods = list(dict.fromkeys(frame["method"]))
    datasets = []
    for name, rows in frame.groupby("dataset", sort=False):
        first = rows.iloc[0]
        results = {}
        for row in rows.itertuples(index=False):
            error_code = row.error_code if isinstance(row.error_code, str) and row.error_code else None
            results[row.method] = MethodResult(
                k_hat=None if pd.isna(row.k_hat) else int(row.k_hat),
                ari=None if pd.isna(row.ari) else float(row.ari),
                error={"error_code": error_code} if error_code else None,
            )
        datasets.append(
            DatasetResult(
                name=str(name),
                n_samples=int(first["n_samples"]),
                n_features=int(first["n_features"]),
                k_star=int(first["k_star"]),
                results=results,
            )
        )
    return summarize(datasets, methods, seed)


# ---------------------------------------------------------------------------
# Per-dataset evaluation
# ---------------------------------------------------------------------------


def _score(truth: Partition, partitions: Sequence[Partition], k_hat: int) -> MethodResult:
    return MethodResult(k_hat=k_hat, ari=compare(MeasureId.ARI1, truth, partitions[k_hat - 1]))


def _failure(method: str, dataset: str, exc: Exception) -> MethodResult:
    if isinstance(exc, StadionError):
        logger.warning("%s failed on %s: %s", method, dataset, exc.message)
        return MethodResult(error=exc.to_dict())
    logger.exception("%s failed unexpectedly on %s", method, dataset)
    return MethodResult(error={"error": str(exc), "error_code": "UNEXPECTED_ERROR", "exit_code": 4})


def evaluate_dataset(config: RunConfig, path: Path) -> DatasetResult:
    """Run every method on one labeled dataset; method failures are recorded, not raised.

    Raises:
        DataError: If the file cannot be loaded or has no labels.
    """
    labels_col = -1 if config.labels_col is None else config.labels_col
    data, truth = load_input(config.model_copy(update={"labels_col": labels_col}), path)
    if truth is None:
        raise DataError(f"Benchmark dataset {path} has no ground-truth labels", error_code="MISSING_LABELS")
    k_max = resolve_k_max(config, data, truth)
    grid, calibrate = resolve_grid(config, data)
    alg = config.clusterer_config()
    result = DatasetResult(name=data.name, n_samples=data.n_samples, n_features=data.n_features, k_star=truth.k)

    partitions: list[Partition] | None = None
    try:
        report = select_k(alg, data, k_max, grid, config.stability_params(), config.agg, calibrate)
        partitions = [Partition.from_labels(labels) for labels in report.reference_labels]
        result.results["stadion_max"] = _score(truth, partitions, report.k_hat_max)
        result.results["stadion_mean"] = _score(truth, partitions, report.k_hat_mean)
    except Exception as exc:
        failure = _failure("stadion", data.name, exc)
        for method in STADION_METHODS:
            result.results[method] = failure

    if partitions is None:
        try:
            partitions = reference_partitions(alg, data, k_max, config.seed)
        except StadionError as exc:
            logger.warning("Reference partitions failed on %s: %s", data.name, exc.message)
            for index in IndexId:
                result.results[index.value] = MethodResult(error=exc.to_dict())
            return result

    for index in IndexId:
        try:
            k_hat = select_k_by_index(index, alg, data, k_max, partitions=partitions, seed=config.seed)
            result.results[index.value] = _score(truth, partitions, k_hat)
        except Exception as exc:
            result.results[index.value] = _failure(index.value, data.name, exc)

    logger.info(
        "%s (K*=%d): %s",
        data.name,
        truth.k,
        ", ".join(f"{m}={r.k_hat}" for m, r in result.results.items()),
    )
    return result


def run_benchmark(config: RunConfig) -> dict[str, Any]:
    """Benchmark every method on each labeled CSV file of ``config.data``.

    Writes ``summary.json`` and ``per_dataset.csv`` into ``config.out``.
    """
    stage = "load"
    try:
        directory = config.data
        if directory is None:
            raise ConfigurationError("benchmark needs a data directory (use --data)")
        if not directory.is_dir():
            raise DataError(f"Benchmark data directory not found: {directory}", error_code="FILE_NOT_FOUND")
        files = sorted(directory.glob("*.csv"))
        if not files:
            raise DataError(f"No CSV files in {directory}", error_code="EMPTY_BENCHMARK")

        stage = "benchmark"
        results = [evaluate_dataset(config, path) for path in files]
        summary = summarize(results, METHODS, config.seed)

        stage = "write"
        table = per_dataset_table(summary)
        summary_path = atomic_write_text(config.out / "summary.json", summary.model_dump_json(indent=2) + "\n")
        table_path = atomic_write_text(
            config.out / "per_dataset.csv",
            table.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n"),
        )
    except Exception as exc:
        return handle_command_error(exc, stage)

    return make_response(
        success=True,
        data={
            "datasets": len(results),
            "wins": summary.wins,
            "average_ranks": summary.average_ranks,
            "artifacts": [str(summary_path), str(table_path)],
        },
        message=f"Benchmarked {len(METHODS)} methods on {len(results)} datasets",
        stage=stage,
    )
