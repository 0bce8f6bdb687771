"""Stadion toolkit -- choosing the number of clusters by stability difference.

Estimates between-cluster stability (agreement of a partition with the
partitions of noise-perturbed copies of the data) and within-cluster
stability (the same estimate inside each cluster), and selects the number
of clusters that maximizes their difference over a range of noise levels.
Ships K-means and Ward clusterers, sixteen partition comparison measures,
internal validity-index baselines, SVG path plots and a benchmark harness.
"""

from __future__ import annotations

__version__ = "0.1.0"
__author__ = "amragl"

from .baselines import index_scores, internal_index, reference_partitions, select_k_by_index
from .clusterers import cut_dendrogram, extend, fit, kmeanspp_init, lloyd, ward_merge_sequence
from .config import RunConfig, StadionSettings, build_run_config, get_config
from .dataset import gen_synthetic, load_csv, standardize, unstandardize, write_csv
from .exceptions import (
    ComputationError,
    ConfigurationError,
    DataError,
    ExtensionNotSupportedError,
    ParseError,
    StadionError,
)
from .models import (
    BenchmarkSummary,
    ClustererConfig,
    ContingencyTable,
    Dataset,
    EpsilonGrid,
    FittedModel,
    GeneratorSpec,
    IndexId,
    LabeledDataset,
    MeasureId,
    NoiseSpec,
    PairCounts,
    Partition,
    SelectionReport,
    StabilityParams,
    StadionPath,
    TradeOffRow,
)
from .partitions import compare, contingency, pair_counts, similarity
from .perturbation import calibrate_eps_max, default_grid, derive_seed, perturb
from .plotting import render_paths_svg
from .stability import path_table, ranking, select_k, stab_between, stab_within, stadion_paths, trade_off_table

__all__ = [
    "BenchmarkSummary",
    "ClustererConfig",
    "ComputationError",
    "ConfigurationError",
    "ContingencyTable",
    "DataError",
    "Dataset",
    "EpsilonGrid",
    "ExtensionNotSupportedError",
    "FittedModel",
    "GeneratorSpec",
    "IndexId",
    "LabeledDataset",
    "MeasureId",
    "NoiseSpec",
    "PairCounts",
    "ParseError",
    "Partition",
    "RunConfig",
    "SelectionReport",
    "StabilityParams",
    "StadionError",
    "StadionPath",
    "StadionSettings",
    "TradeOffRow",
    "build_run_config",
    "calibrate_eps_max",
    "compare",
    "contingency",
    "cut_dendrogram",
    "default_grid",
    "derive_seed",
    "extend",
    "fit",
    "gen_synthetic",
    "get_config",
    "index_scores",
    "internal_index",
    "kmeanspp_init",
    "lloyd",
    "load_csv",
    "pair_counts",
    "path_table",
    "perturb",
    "ranking",
    "reference_partitions",
    "render_paths_svg",
    "select_k",
    "select_k_by_index",
    "similarity",
    "stab_between",
    "stab_within",
    "stadion_paths",
    "standardize",
    "trade_off_table",
    "unstandardize",
    "ward_merge_sequence",
    "write_csv",
]
