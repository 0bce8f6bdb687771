"""Internal validity indices used as baselines for selecting K.

Silhouette, Davies-Bouldin and Calinski-Harabasz come from scikit-learn.
Dunn, Xie-Beni, Ray-Turi and Wemmert-Gancarski follow the crisp definitions
of the usual clustering-index reviews:

* Dunn: smallest distance between points of different clusters divided by
  the largest cluster diameter (maximize).
* Xie-Beni: mean squared distance of points to their centroid divided by the
  smallest squared distance between points of different clusters (minimize).
* Ray-Turi: mean squared distance of points to their centroid divided by the
  smallest squared distance between centroids (minimize).
* Wemmert-Gancarski: for each point, the ratio of the distance to its own
  centroid to the distance to the nearest other centroid; per cluster
  ``max(0, 1 - mean ratio)``, averaged with cluster-size weights (maximize).

Every index needs at least two clusters.
"""

from __future__ import annotations

import logging
import math

import numpy as np
from scipy.spatial.distance import cdist, pdist
from sklearn.metrics import calinski_harabasz_score, davies_bouldin_score, silhouette_score

from .clusterers import fit
from .config import get_config
from .exceptions import ComputationError, ConfigurationError, DataError
from .models import ClustererConfig, Dataset, IndexId, Partition, argmax_smallest
from .perturbation import REFERENCE_STREAM, derive_seed

logger = logging.getLogger(__name__)

_QUADRATIC_INDICES = frozenset({IndexId.SILHOUETTE, IndexId.DUNN, IndexId.XIE_BENI})


def _centroids(X: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    sums = np.zeros((k, X.shape[1]))
    np.add.at(sums, labels, X)
    return sums / np.bincount(labels, minlength=k)[:, None]


def _within_sq(X: np.ndarray, labels: np.ndarray, centroids: np.ndarray) -> float:
    return float(np.sum((X - centroids[labels]) ** 2))


def _dunn(X: np.ndarray, labels: np.ndarray, k: int) -> float:
    groups = [X[labels == c] for c in range(k)]
    diameter = max((float(pdist(g).max()) if g.shape[0] > 1 else 0.0) for g in groups)
    separation = min(
        float(cdist(groups[i], groups[j]).min()) for i in range(k) for j in range(i + 1, k)
    )
    if diameter == 0.0:
        return math.inf
    return separation / diameter


def _xie_beni(X: np.ndarray, labels: np.ndarray, k: int) -> float:
    centroids = _centroids(X, labels, k)
    groups = [X[labels == c] for c in range(k)]
    separation = min(
        float(cdist(groups[i], groups[j], metric="sqeuclidean").min()) for i in range(k) for j in range(i + 1, k)
    )
    if separation == 0.0:
        return math.inf
    return _within_sq(X, labels, centroids) / X.shape[0] / separation


def _ray_turi(X: np.ndarray, labels: np.ndarray, k: int) -> float:
    centroids = _centroids(X, labels, k)
    gaps = pdist(centroids, metric="sqeuclidean")
    separation = float(gaps.min())
    if separation == 0.0:
        return math.inf
    return _within_sq(X, labels, centroids) / X.shape[0] / separation


def _wemmert_gancarski(X: np.ndarray, labels: np.ndarray, k: int) -> float:
    centroids = _centroids(X, labels, k)
    distances = cdist(X, centroids)
    own = distances[np.arange(X.shape[0]), labels]
    others = distances.copy()
    others[np.arange(X.shape[0]), labels] = np.inf
    nearest_other = others.min(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(nearest_other > 0, own / nearest_other, np.where(own > 0, np.inf, 0.0))
    sizes = np.bincount(labels, minlength=k)
    total = 0.0
    for c in range(k):
        mean_ratio = float(ratio[labels == c].mean())
        total += sizes[c] * max(0.0, 1.0 - mean_ratio)
    return total / X.shape[0]


def internal_index(index: IndexId | str, x: Dataset, partition: Partition) -> float:
    """Score a partition of ``x`` with an internal validity index.

    Orientation is given by ``IndexId.maximize``.  A singleton cluster has
    silhouette 0 (so an all-singleton partition scores 0).  An all-singleton
    partition has no within-cluster scatter: Davies-Bouldin is 0 and
    Calinski-Harabasz is ``inf``.

    Raises:
        DataError: Fewer than two clusters, or length mismatch.
        ComputationError: N above ``index_max_samples`` for the quadratic
            indices (silhouette, Dunn, Xie-Beni).
        ValueError: Unknown index name.
    """
    index = IndexId(index)
    if partition.n_samples != x.n_samples:
        raise DataError(
            f"Partition has {partition.n_samples} labels for {x.n_samples} samples",
            error_code="LENGTH_MISMATCH",
            details={"n_labels": partition.n_samples, "n": x.n_samples},
        )
    dense = Partition.from_labels(partition.labels)
    if dense.k < 2:
        raise DataError(
            f"{index.value} needs at least two clusters",
            error_code="INDEX_NEEDS_TWO_CLUSTERS",
            details={"index": index.value, "k": dense.k},
        )
    cap = get_config().index_max_samples
    if index in _QUADRATIC_INDICES and x.n_samples > cap:
        raise ComputationError(
            f"{index.value} on {x.n_samples} samples exceeds the cap of {cap}",
            error_code="INDEX_CAP_EXCEEDED",
            details={"index": index.value, "n": x.n_samples, "cap": cap},
        )

    X, labels, k = x.values, dense.labels, dense.k
    if index == IndexId.SILHOUETTE:
        if k == x.n_samples:
            return 0.0
        return float(silhouette_score(X, labels))
    if index == IndexId.DAVIES_BOULDIN:
        if k == x.n_samples:
            return 0.0
        return float(davies_bouldin_score(X, labels))
    if index == IndexId.CALINSKI_HARABASZ:
        if k == x.n_samples:
            return math.inf
        return float(calinski_harabasz_score(X, labels))
    if index == IndexId.DUNN:
        return _dunn(X, labels, k)
    if index == IndexId.XIE_BENI:
        return _xie_beni(X, labels, k)
    if index == IndexId.RAY_TURI:
        return _ray_turi(X, labels, k)
    return _wemmert_gancarski(X, labels, k)


def reference_partitions(alg: ClustererConfig, x: Dataset, k_max: int, seed: int = 0) -> list[Partition]:
    """The per-K reference partitions (K = 1..k_max) used by the stability criterion."""
    return [fit(alg.model_copy(update={"seed": derive_seed(seed, REFERENCE_STREAM, k)}), x, k).partition for k in range(1, k_max + 1)]


def index_scores(index: IndexId | str, partitions: list[Partition], x: Dataset) -> dict[int, float]:
    """Index value per K (1-based position) for K = 2..N-1.

    K=1 has no between-cluster term and K >= N leaves every point alone, so
    neither is scored.
    """
    index = IndexId(index)
    return {
        k: internal_index(index, x, partition)
        for k, partition in enumerate(partitions, start=1)
        if 2 <= k < x.n_samples
    }


def select_k_by_index(
    index: IndexId | str,
    alg: ClustererConfig,
    x: Dataset,
    k_max: int,
    partitions: list[Partition] | None = None,
    seed: int = 0,
) -> int:
    """Best K in 2..min(k_max, N-1) according to an internal index (ties: smaller K).

    Pass ``partitions`` (K = 1..k_max) to score the same partitions as the
    stability criterion; otherwise they are fitted with the same seeds.

    Raises:
        ConfigurationError: If ``k_max < 2``.
        DataError: If the dataset has fewer than three samples.
    """
    index = IndexId(index)
    if k_max < 2:
        raise ConfigurationError(f"{index.value} needs k_max >= 2, got {k_max}", details={"k_max": k_max})
    if x.n_samples < 3:
        raise DataError(
            f"{index.value} needs at least three samples, got {x.n_samples}",
            error_code="INDEX_NEEDS_TWO_CLUSTERS",
            details={"index": index.value, "n": x.n_samples},
        )
    if partitions is None:
        partitions = reference_partitions(alg, x, min(k_max, x.n_samples - 1), seed)
    scores = index_scores(index, partitions[:k_max], x)
    candidates = sorted(scores)
    ordered = [scores[k] if index.maximize else -scores[k] for k in candidates]
    k_hat = candidates[argmax_smallest(ordered)]
    logger.info("%s selects K=%d", index.value, k_hat)
    return k_hat
