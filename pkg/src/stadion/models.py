"""Pydantic v2 models for the Stadion toolkit.

Defines the domain types shared by every module: datasets and partitions,
contingency tables and pair tallies, clusterer and stability parameters,
noise grids, stability paths, selection reports and benchmark summaries.

Numerical payloads (data matrices, label vectors, centers, merge histories)
are stored as read-only ``numpy`` arrays on frozen models, so a model can be
shared between parallel workers without copying.  Report-level models
(``StadionPath``, ``SelectionReport``, ``BenchmarkSummary``) hold plain Python
floats and lists so they serialize directly to JSON.
"""

from __future__ import annotations

import math
from enum import StrEnum
from typing import Any, Literal, Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# ---------------------------------------------------------------------------
# Array helpers
# ---------------------------------------------------------------------------


def _frozen_array(value: Any, dtype: type, ndim: int, label: str) -> np.ndarray:
    """Return a read-only contiguous copy of ``value`` with the given dtype and rank."""
    array = np.array(value, dtype=dtype, copy=True)
    if array.ndim != ndim:
        raise ValueError(f"{label} must be {ndim}-dimensional, got shape {array.shape}")
    array.setflags(write=False)
    return array


_ARRAY_CONFIG = ConfigDict(arbitrary_types_allowed=True, frozen=True)


# ---------------------------------------------------------------------------
# Enumerations
# ---------------------------------------------------------------------------


class Scaling(StrEnum):
    """Standardization state of a dataset."""

    RAW = "raw"
    STANDARDIZED = "standardized"


class MeasureId(StrEnum):
    """The sixteen partition similarity and distance measures."""

    RI = "RI"
    ARI1 = "ARI1"
    ARI2 = "ARI2"
    FM = "FM"
    JACC = "JACC"
    MI = "MI"
    AMI = "AMI"
    VI = "VI"
    NVI = "NVI"
    ID = "ID"
    NID = "NID"
    NMI1 = "NMI1"
    NMI2 = "NMI2"
    NMI3 = "NMI3"
    NMI4 = "NMI4"
    NMI5 = "NMI5"

    @property
    def is_dissimilarity(self) -> bool:
        """True for the distance-oriented measures (VI, NVI, ID, NID)."""
        return self in _DISSIMILARITIES

    @property
    def is_count_based(self) -> bool:
        """True for the pair-counting measures."""
        return self in _COUNT_BASED

    @classmethod
    def parse(cls, value: str | MeasureId) -> MeasureId:
        """Parse a measure name case-insensitively (``ari1``, ``NMI4``...)."""
        if isinstance(value, MeasureId):
            return value
        key = value.strip().upper()
        try:
            return cls(key)
        except ValueError:
            raise ValueError(
                f"Unknown measure {value!r}. Valid measures: {[m.value for m in cls]}"
            ) from None


_DISSIMILARITIES = frozenset({MeasureId.VI, MeasureId.NVI, MeasureId.ID, MeasureId.NID})
_COUNT_BASED = frozenset({MeasureId.RI, MeasureId.ARI1, MeasureId.ARI2, MeasureId.FM, MeasureId.JACC})


class IndexId(StrEnum):
    """Internal validity indices used as baselines."""

    SILHOUETTE = "silhouette"
    DAVIES_BOULDIN = "davies_bouldin"
    CALINSKI_HARABASZ = "calinski_harabasz"
    DUNN = "dunn"
    XIE_BENI = "xie_beni"
    RAY_TURI = "ray_turi"
    WEMMERT_GANCARSKI = "wemmert_gancarski"

    @property
    def maximize(self) -> bool:
        """Orientation: True when larger index values indicate better partitions."""
        return self not in _MINIMIZED_INDICES


_MINIMIZED_INDICES = frozenset({IndexId.DAVIES_BOULDIN, IndexId.XIE_BENI, IndexId.RAY_TURI})


# ---------------------------------------------------------------------------
# Dataset
# ---------------------------------------------------------------------------


class Dataset(BaseModel):
    """An N x p matrix of finite real values with its standardization state.

    ``means`` and ``stds`` hold the per-column statistics used by
    ``standardize`` (so the mapping can be inverted); ``zero_variance`` lists
    the columns that had no spread and were mapped to zeros.
    """

    model_config = _ARRAY_CONFIG

    values: np.ndarray
    scaling: Scaling = Scaling.RAW
    means: np.ndarray | None = None
    stds: np.ndarray | None = None
    zero_variance: tuple[int, ...] = ()
    name: str = ""

    @field_validator("values", mode="before")
    @classmethod
    def _validate_values(cls, v: Any) -> np.ndarray:
        array = np.asarray(v, dtype=np.float64)
        if array.ndim == 1:
            array = array.reshape(-1, 1)
        array = _frozen_array(array, np.float64, 2, "values")
        if array.shape[0] < 1 or array.shape[1] < 1:
            raise ValueError(f"dataset needs N >= 1 and p >= 1, got shape {array.shape}")
        if not np.isfinite(array).all():
            raise ValueError("dataset values must be finite (no NaN or Inf)")
        return array

    @field_validator("means", "stds", mode="before")
    @classmethod
    def _validate_moments(cls, v: Any) -> np.ndarray | None:
        if v is None:
            return None
        return _frozen_array(v, np.float64, 1, "column statistics")

    @model_validator(mode="after")
    def _check_moment_shapes(self) -> Self:
        for label, stats in (("means", self.means), ("stds", self.stds)):
            if stats is not None and stats.shape[0] != self.n_features:
                raise ValueError(f"{label} length {stats.shape[0]} does not match p={self.n_features}")
        return self

    @property
    def n_samples(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.values.shape[1])

    def with_values(self, values: np.ndarray) -> Dataset:
        """Return a dataset with new values and the same scaling metadata."""
        return Dataset(
            values=values,
            scaling=self.scaling,
            means=self.means,
            stds=self.stds,
            zero_variance=self.zero_variance,
            name=self.name,
        )

    def subset(self, indices: np.ndarray) -> Dataset:
        """Row subset (with repetition allowed); scaling metadata is kept as is."""
        return self.with_values(self.values[np.asarray(indices, dtype=np.intp)])

    def n_distinct(self) -> int:
        """Number of distinct rows."""
        return int(np.unique(self.values, axis=0).shape[0])


# ---------------------------------------------------------------------------
# Partitions and their comparison tables
# ---------------------------------------------------------------------------


class Partition(BaseModel):
    """A length-N vector of cluster labels in ``0..k-1``.

    ``k`` is the declared number of clusters; the number of labels actually
    present may be smaller (``n_present``).
    """

    model_config = _ARRAY_CONFIG

    labels: np.ndarray
    k: int = Field(ge=1)

    @field_validator("labels", mode="before")
    @classmethod
    def _validate_labels(cls, v: Any) -> np.ndarray:
        array = _frozen_array(v, np.int64, 1, "labels")
        if array.shape[0] < 1:
            raise ValueError("a partition needs at least one sample")
        if array.min() < 0:
            raise ValueError("labels must be non-negative")
        return array

    @model_validator(mode="after")
    def _check_label_range(self) -> Self:
        if int(self.labels.max()) >= self.k:
            raise ValueError(f"label {int(self.labels.max())} out of range for k={self.k}")
        return self

    @classmethod
    def from_labels(cls, labels: Any) -> Partition:
        """Build a partition from arbitrary hashable labels.

        Labels are re-encoded to contiguous integers in order of first
        appearance, and ``k`` is the number of distinct labels.
        """
        raw = np.asarray(labels)
        _, first_index, inverse = np.unique(raw, return_index=True, return_inverse=True)
        order = np.argsort(np.argsort(first_index, kind="stable"), kind="stable")
        dense = order[inverse.reshape(-1)]
        return cls(labels=dense, k=int(first_index.shape[0]))

    @property
    def n_samples(self) -> int:
        return int(self.labels.shape[0])

    @property
    def n_present(self) -> int:
        return int(np.unique(self.labels).shape[0])

    def cluster_sizes(self) -> np.ndarray:
        """Sizes N_k for k = 0..k-1 (zeros for absent labels)."""
        return np.bincount(self.labels, minlength=self.k)

    def restrict(self, indices: np.ndarray) -> Partition:
        """Labels of the given sample indices (repetition allowed), same ``k``."""
        return Partition(labels=self.labels[np.asarray(indices, dtype=np.intp)], k=self.k)

    def members(self, cluster: int) -> np.ndarray:
        """Indices of the samples assigned to ``cluster``."""
        return np.flatnonzero(self.labels == cluster)


class LabeledDataset(BaseModel):
    """A dataset together with its ground-truth partition."""

    model_config = _ARRAY_CONFIG

    data: Dataset
    labels: Partition

    @model_validator(mode="after")
    def _check_lengths(self) -> Self:
        if self.labels.n_samples != self.data.n_samples:
            raise ValueError(
                f"labels length {self.labels.n_samples} does not match N={self.data.n_samples}"
            )
        return self


class ContingencyTable(BaseModel):
    """K x K' co-occurrence counts N_kk' of two partitions over the same samples."""

    model_config = _ARRAY_CONFIG

    counts: np.ndarray

    @field_validator("counts", mode="before")
    @classmethod
    def _validate_counts(cls, v: Any) -> np.ndarray:
        array = _frozen_array(v, np.int64, 2, "counts")
        if array.size == 0:
            raise ValueError("contingency table must not be empty")
        if array.min() < 0:
            raise ValueError("contingency counts must be non-negative")
        return array

    @property
    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


class PairCounts(BaseModel):
    """Pair tallies: same/same (n11), different/different (n00) and the two mixed cases."""

    model_config = ConfigDict(frozen=True)

    n11: int = Field(ge=0)
    n00: int = Field(ge=0)
    n10: int = Field(ge=0)
    n01: int = Field(ge=0)

    @property
    def total(self) -> int:
        return self.n11 + self.n00 + self.n10 + self.n01


# ---------------------------------------------------------------------------
# Clusterers
# ---------------------------------------------------------------------------


class ClustererConfig(BaseModel):
    """Which algorithm to run and how.

    K-means keeps the lowest-cost run out of ``n_runs``; runs stop after
    ``max_iters`` Lloyd iterations or once no center moves by more than
    ``tolerance``.  Ward ignores the K-means options.
    """

    model_config = ConfigDict(frozen=True)

    algorithm: Literal["kmeans", "ward"] = "kmeans"
    n_runs: int = Field(default=35, ge=1)
    max_iters: int = Field(default=300, ge=1)
    tolerance: float = Field(default=1e-6, gt=0)
    init: Literal["kmeanspp", "random"] = "kmeanspp"
    seed: int = Field(default=0, ge=0)

    @property
    def has_extension(self) -> bool:
        return self.algorithm == "kmeans"


class FittedModel(BaseModel):
    """Result of ``clusterers.fit``.

    K-means models carry ``centers`` and the final ``cost`` (plus the cost of
    every run); Ward models carry the full ``merges`` history as rows
    ``(i, j, height, size)`` using scipy's cluster numbering, where
    ``height`` is the increase in within-cluster sum of squares.
    """

    model_config = _ARRAY_CONFIG

    algorithm: Literal["kmeans", "ward"]
    partition: Partition
    centers: np.ndarray | None = None
    cost: float | None = None
    run_costs: tuple[float, ...] = ()
    n_iter: int = 0
    merges: np.ndarray | None = None

    @field_validator("centers", "merges", mode="before")
    @classmethod
    def _validate_matrix(cls, v: Any) -> np.ndarray | None:
        if v is None:
            return None
        return _frozen_array(v, np.float64, 2, "model matrix")

    @property
    def k(self) -> int:
        return self.partition.k


# ---------------------------------------------------------------------------
# Perturbation
# ---------------------------------------------------------------------------

NoiseKind = Literal["uniform", "gaussian", "bootstrap"]


class NoiseSpec(BaseModel):
    """Noise family and amplitude.

    ``epsilon`` is the half-width for uniform noise and the standard
    deviation for Gaussian noise; bootstrap ignores it.
    """

    model_config = ConfigDict(frozen=True)

    kind: NoiseKind = "uniform"
    epsilon: float = Field(default=0.0, ge=0)


class EpsilonGrid(BaseModel):
    """Strictly increasing noise amplitudes starting at 0."""

    model_config = ConfigDict(frozen=True)

    values: tuple[float, ...]

    @field_validator("values")
    @classmethod
    def _validate_grid(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        if not v:
            raise ValueError("grid must not be empty")
        if v[0] != 0.0:
            raise ValueError(f"grid must start at 0, got {v[0]}")
        if any(b <= a for a, b in zip(v, v[1:], strict=False)):
            raise ValueError("grid values must be strictly increasing")
        if not all(math.isfinite(x) for x in v):
            raise ValueError("grid values must be finite")
        return v

    @property
    def m(self) -> int:
        return len(self.values)

    @property
    def eps_max(self) -> float:
        return self.values[-1]

    def truncate(self, eps_max: float) -> EpsilonGrid:
        """Keep the grid points not larger than ``eps_max`` (at least the first two)."""
        kept = tuple(e for e in self.values if e <= eps_max)
        if len(kept) < 2 <= self.m:
            kept = self.values[:2]
        return EpsilonGrid(values=kept)


# ---------------------------------------------------------------------------
# Stability
# ---------------------------------------------------------------------------


class StabilityParams(BaseModel):
    """Parameters of the between/within stability estimates.

    ``variant=None`` picks ``extended`` for algorithms with an extension
    operator and ``standard`` otherwise.  ``unsplittable_score`` is what a
    reference cluster contributes to within-cluster stability when every
    entry of ``omega`` exceeds its size.
    """

    model_config = ConfigDict(frozen=True)

    d_perturbations: int = Field(default=10, ge=1)
    omega: tuple[int, ...] = tuple(range(2, 11))
    measure: MeasureId = MeasureId.ARI1
    noise: NoiseKind = "uniform"
    variant: Literal["standard", "extended"] | None = None
    seed: int = Field(default=0, ge=0)
    n_jobs: int = Field(default=1, ge=1)
    unsplittable_score: float = 0.0

    @field_validator("omega", mode="before")
    @classmethod
    def _validate_omega(cls, v: Any) -> tuple[int, ...]:
        values = tuple(sorted({int(x) for x in v}))
        if not values:
            raise ValueError("omega must not be empty")
        if values[0] < 2:
            raise ValueError(f"omega values must be >= 2, got {values[0]}")
        return values

    @field_validator("measure", mode="before")
    @classmethod
    def _parse_measure(cls, v: Any) -> MeasureId:
        return MeasureId.parse(v)

    def resolved_variant(self, clusterer: ClustererConfig) -> Literal["standard", "extended"]:
        if self.variant is not None:
            return self.variant
        return "extended" if clusterer.has_extension else "standard"


class StadionPath(BaseModel):
    """Between, within and Stadion curves of one candidate K over the noise grid."""

    model_config = ConfigDict(frozen=True)

    k: int = Field(ge=1)
    grid: EpsilonGrid
    stab_b: tuple[float, ...]
    stab_w: tuple[float, ...]
    stadion: tuple[float, ...]

    @model_validator(mode="after")
    def _check_identity(self) -> Self:
        m = self.grid.m
        if not (len(self.stab_b) == len(self.stab_w) == len(self.stadion) == m):
            raise ValueError(f"path vectors must all have length {m}")
        for b, w, s in zip(self.stab_b, self.stab_w, self.stadion, strict=True):
            if s != b - w:
                raise ValueError("stadion must equal stab_b - stab_w")
        return self

    @classmethod
    def from_components(cls, k: int, grid: EpsilonGrid, stab_b: Any, stab_w: Any) -> StadionPath:
        b = tuple(float(x) for x in stab_b)
        w = tuple(float(x) for x in stab_w)
        return cls(k=k, grid=grid, stab_b=b, stab_w=w, stadion=tuple(x - y for x, y in zip(b, w, strict=True)))

    def truncate(self, grid: EpsilonGrid) -> StadionPath:
        """Restrict the path to a prefix grid."""
        m = grid.m
        return StadionPath(
            k=self.k, grid=grid, stab_b=self.stab_b[:m], stab_w=self.stab_w[:m], stadion=self.stadion[:m]
        )


class OmegaSkip(BaseModel):
    """A sub-cluster count skipped because the reference cluster was too small."""

    model_config = ConfigDict(frozen=True)

    k: int
    cluster: int
    cluster_size: int
    omega: int


class SelectionDiagnostics(BaseModel):
    """Non-fatal conditions met while building the paths."""

    skipped_omega: list[OmegaSkip] = Field(default_factory=list)
    eps_max_calibrated: float | None = None
    calibration_fallback: bool = False
    zero_variance_columns: list[int] = Field(default_factory=list)
    warnings: list[str] = Field(default_factory=list)


class TradeOffRow(BaseModel):
    """Aggregated between, within and Stadion values of one K."""

    model_config = ConfigDict(frozen=True)

    k: int
    stab_b: float
    stab_w: float
    stadion: float


Aggregation = Literal["max", "mean"]


def argmax_smallest(scores: list[float] | tuple[float, ...]) -> int:
    """0-based index of the maximum, ties broken toward the smallest index."""
    best = 0
    for i, value in enumerate(scores):
        if value > scores[best]:
            best = i
    return best


class SelectionReport(BaseModel):
    """Outcome of Stadion model selection over K = 1..k_max."""

    k_max: int = Field(ge=1)
    aggregation: Aggregation = "max"
    k_hat_max: int
    k_hat_mean: int
    max_scores: tuple[float, ...]
    mean_scores: tuple[float, ...]
    paths: list[StadionPath]
    reference_labels: list[list[int]]
    clusterer: ClustererConfig
    params: StabilityParams
    variant: Literal["standard", "extended"]
    diagnostics: SelectionDiagnostics = Field(default_factory=SelectionDiagnostics)
    provenance: dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_selection(self) -> Self:
        if len(self.paths) != self.k_max or len(self.reference_labels) != self.k_max:
            raise ValueError("one path and one reference partition per K are required")
        for label, k_hat, scores in (
            ("k_hat_max", self.k_hat_max, self.max_scores),
            ("k_hat_mean", self.k_hat_mean, self.mean_scores),
        ):
            if not 1 <= k_hat <= self.k_max:
                raise ValueError(f"{label}={k_hat} outside 1..{self.k_max}")
            if argmax_smallest(scores) + 1 != k_hat:
                raise ValueError(f"{label} is not the first maximizer of its scores")
        return self

    @property
    def k_hat(self) -> int:
        """Selection under the report's requested aggregation."""
        return self.k_hat_max if self.aggregation == "max" else self.k_hat_mean

    def path(self, k: int) -> StadionPath:
        return self.paths[k - 1]


# ---------------------------------------------------------------------------
# Benchmark
# ---------------------------------------------------------------------------


class MethodResult(BaseModel):
    """Selection of one method on one dataset (or the error that stopped it)."""

    k_hat: int | None = None
    ari: float | None = None
    error: dict[str, Any] | None = None


class DatasetResult(BaseModel):
    """Per-dataset benchmark row."""

    name: str
    n_samples: int
    n_features: int
    k_star: int
    results: dict[str, MethodResult] = Field(default_factory=dict)


class BenchmarkSummary(BaseModel):
    """Wins and average ARI ranks of every method over a dataset collection."""

    methods: list[str]
    datasets: list[DatasetResult]
    wins: dict[str, int]
    average_ranks: dict[str, float]
    seed: int = 0

    @model_validator(mode="after")
    def _check_wins(self) -> Self:
        for method, wins in self.wins.items():
            if wins > len(self.datasets):
                raise ValueError(f"{method} has more wins than datasets")
        return self


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------

GeneratorKind = Literal[
    "gaussian_blobs",
    "uniform_cube",
    "sphere_surface",
    "correlated_gaussians",
    "letters_like",
    "four_clusters_corner",
]


class GeneratorSpec(BaseModel):
    """Recipe for a synthetic labeled dataset.

    Only the fields relevant to ``kind`` are used: ``n_clusters``,
    ``separation``, ``cluster_std`` and ``centers`` shape Gaussian blobs,
    ``thickness`` and ``radius`` the sphere shell, ``scale`` stretches the
    fixed-geometry fixtures.
    """

    model_config = ConfigDict(frozen=True)

    kind: GeneratorKind
    n_samples: int = Field(default=1000, ge=1)
    n_features: int = Field(default=2, ge=1)
    n_clusters: int = Field(default=3, ge=1)
    separation: float = Field(default=10.0, gt=0)
    cluster_std: float = Field(default=1.0, gt=0)
    centers: tuple[tuple[float, ...], ...] | None = None
    radius: float = Field(default=1.0, gt=0)
    thickness: float = Field(default=0.0, ge=0)
    scale: float = Field(default=1.0, gt=0)

    @model_validator(mode="after")
    def _check_geometry(self) -> Self:
        if self.centers is not None:
            if any(len(c) != self.n_features for c in self.centers):
                raise ValueError(f"every center needs {self.n_features} coordinates")
            if len(self.centers) > self.n_samples:
                raise ValueError("more centers than samples")
        if self.kind == "gaussian_blobs" and self.centers is None and self.n_clusters > self.n_samples:
            raise ValueError("more clusters than samples")
        if self.kind in ("correlated_gaussians", "letters_like", "four_clusters_corner") and self.n_features != 2:
            raise ValueError(f"{self.kind} is a two-dimensional fixture")
        if self.kind == "sphere_surface" and self.n_features < 2:
            raise ValueError("sphere_surface needs at least two dimensions")
        if self.thickness >= 2 * self.radius:
            raise ValueError("shell thickness must be smaller than the sphere diameter")
        return self
