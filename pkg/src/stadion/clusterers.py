"""Clustering algorithms evaluated by the stability criterion.

Two algorithms share one adapter contract (``fit``):

* K-means: K-means++ (or uniform) seeding, Lloyd iterations with
  lowest-index tie-breaking and farthest-point repair of empty clusters, and
  best-of-``n_runs`` restarts with one independent random stream per run.
  Fitted models carry centers, so ``extend`` can label new points.
* Ward: agglomerative merges from ``scipy.cluster.hierarchy.linkage``, cut to
  the requested number of clusters.  Merge heights are reported as the
  increase in within-cluster sum of squares.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy.cluster.hierarchy import cut_tree, linkage
from scipy.spatial.distance import cdist

from .config import get_config
from .exceptions import ComputationError, DataError, ExtensionNotSupportedError
from .models import ClustererConfig, Dataset, FittedModel, Partition, Scaling

logger = logging.getLogger(__name__)


def _as_matrix(x: Dataset | np.ndarray) -> np.ndarray:
    return x.values if isinstance(x, Dataset) else np.asarray(x, dtype=np.float64)


# ---------------------------------------------------------------------------
# K-means
# ---------------------------------------------------------------------------


def kmeanspp_init(x: Dataset | np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """K-means++ seeding.

    The first center is a uniformly chosen point; each further center is
    drawn with probability proportional to the squared distance to the
    nearest center chosen so far.  When every remaining point coincides with
    a chosen center the draw falls back to a uniform choice among the points
    not picked yet.
    """
    X = _as_matrix(x)
    n = X.shape[0]
    if k > n:
        raise DataError(f"Cannot seed {k} centers from {n} points", details={"k": k, "n": n})
    chosen = [int(rng.integers(n))]
    closest = cdist(X, X[chosen], metric="sqeuclidean")[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total > 0.0:
            index = int(rng.choice(n, p=closest / total))
        else:
            remaining = np.setdiff1d(np.arange(n), chosen)
            index = int(rng.choice(remaining))
        chosen.append(index)
        closest = np.minimum(closest, cdist(X, X[index : index + 1], metric="sqeuclidean")[:, 0])
    return X[chosen].copy()


def _assign(X: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-center labels (argmin keeps the lowest index on ties) and squared distances."""
    distances = cdist(X, centers, metric="sqeuclidean")
    labels = np.argmin(distances, axis=1)
    return labels, distances[np.arange(X.shape[0]), labels]


def _repair_empty(labels: np.ndarray, sq_dist: np.ndarray, k: int) -> np.ndarray:
    """Move the farthest point of a multi-point cluster into each empty cluster."""
    sizes = np.bincount(labels, minlength=k)
    empty = np.flatnonzero(sizes == 0)
    if empty.size == 0:
        return labels
    labels = labels.copy()
    sq_dist = sq_dist.copy()
    for cluster in empty:
        movable = sizes[labels] > 1
        candidates = np.where(movable, sq_dist, -np.inf)
        point = int(np.argmax(candidates))
        sizes[labels[point]] -= 1
        labels[point] = cluster
        sizes[cluster] = 1
        sq_dist[point] = 0.0
        logger.debug("Repaired empty cluster %d with point %d", cluster, point)
    return labels


def _update(X: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    sizes = np.bincount(labels, minlength=k).astype(np.float64)
    sums = np.zeros((k, X.shape[1]))
    np.add.at(sums, labels, X)
    return sums / sizes[:, None]


def lloyd(
    x: Dataset | np.ndarray,
    centers: np.ndarray,
    max_iters: int = 300,
    tolerance: float = 1e-6,
) -> tuple[np.ndarray, np.ndarray, float, list[float]]:
    """Run Lloyd iterations from the given centers.

    Stops when the assignment no longer changes, when no center moves by more
    than ``tolerance``, or after ``max_iters`` iterations.  The returned labels
    are the nearest-center assignment of the returned centers.

    Returns:
        ``(labels, centers, cost, cost_history)``; ``cost_history`` holds the
        sum of squared distances after every update and is non-increasing.
    """
    X = _as_matrix(x)
    k = centers.shape[0]
    centers = np.array(centers, dtype=np.float64, copy=True)
    labels, sq_dist = _assign(X, centers)
    labels = _repair_empty(labels, sq_dist, k)
    history: list[float] = []

    for _ in range(max_iters):
        new_centers = _update(X, labels, k)
        history.append(float(np.sum((X - new_centers[labels]) ** 2)))
        shift = float(np.max(np.linalg.norm(new_centers - centers, axis=1)))
        centers = new_centers
        new_labels, sq_dist = _assign(X, centers)
        new_labels = _repair_empty(new_labels, sq_dist, k)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        if shift <= tolerance:
            break

    cost = float(np.sum((X - centers[labels]) ** 2))
    if not history or cost < history[-1]:
        history.append(cost)
    return labels, centers, cost, history


def _kmeans(cfg: ClustererConfig, X: np.ndarray, k: int) -> FittedModel:
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.n_runs)
    best: tuple[np.ndarray, np.ndarray, float, int] | None = None
    run_costs: list[float] = []
    for run, stream in enumerate(streams):
        rng = np.random.default_rng(stream)
        if cfg.init == "kmeanspp":
            start = kmeanspp_init(X, k, rng)
        else:
            start = X[rng.choice(X.shape[0], size=k, replace=False)].copy()
        labels, centers, cost, history = lloyd(X, start, cfg.max_iters, cfg.tolerance)
        run_costs.append(cost)
        # strict comparison keeps the lowest run index on ties
        if best is None or cost < best[2]:
            best = (labels, centers, cost, len(history))
        logger.debug("k-means run %d/%d (k=%d): cost=%.6g", run + 1, cfg.n_runs, k, cost)

    assert best is not None
    labels, centers, cost, n_iter = best
    return FittedModel(
        algorithm="kmeans",
        partition=Partition(labels=labels, k=k),
        centers=centers,
        cost=cost,
        run_costs=tuple(run_costs),
        n_iter=n_iter,
    )


# ---------------------------------------------------------------------------
# Ward
# ---------------------------------------------------------------------------


def ward_merge_sequence(x: Dataset | np.ndarray) -> np.ndarray:
    """Full Ward dendrogram as an ``(N-1) x 4`` array of ``(i, j, height, size)``.

    Cluster numbering follows scipy (original points 0..N-1, merge ``t``
    creates cluster ``N+t``).  ``height`` is the increase in within-cluster
    sum of squares caused by the merge, non-decreasing along the sequence.

    Raises:
        ComputationError: If N exceeds ``ward_max_samples``.
    """
    X = _as_matrix(x)
    n = X.shape[0]
    cap = get_config().ward_max_samples
    if n > cap:
        raise ComputationError(
            f"Ward linkage on {n} samples exceeds the cap of {cap}",
            error_code="WARD_CAP_EXCEEDED",
            details={"n": n, "cap": cap},
        )
    if n < 2:
        return np.empty((0, 4))
    Z = linkage(X, method="ward")
    merges = Z.copy()
    merges[:, 2] = 0.5 * Z[:, 2] ** 2
    return merges


def cut_dendrogram(merges: np.ndarray, n: int, k: int) -> Partition:
    """Apply the first ``n - k`` merges and label the resulting ``k`` clusters.

    Labels are numbered in order of first appearance.
    """
    if not 1 <= k <= n:
        raise DataError(f"Cannot cut {n} samples into {k} clusters", details={"n": n, "k": k})
    if n == 1 or k == n:
        return Partition(labels=np.arange(n), k=n)
    Z = np.array(merges, dtype=np.float64, copy=True)
    Z[:, 2] = np.sqrt(2.0 * Z[:, 2])
    labels = cut_tree(Z, n_clusters=k)[:, 0]
    return Partition.from_labels(labels)


# ---------------------------------------------------------------------------
# Adapter
# ---------------------------------------------------------------------------


def fit(cfg: ClustererConfig, x: Dataset, k: int) -> FittedModel:
    """Cluster ``x`` into ``k`` clusters with the configured algorithm.

    Deterministic in ``(cfg.seed, x, k)``.  K-means keeps the lowest-cost run
    of ``cfg.n_runs`` (ties go to the earliest run).

    Raises:
        DataError: If ``k`` is not in 1..N or exceeds the number of distinct
            points (empty clusters would be unavoidable).
        ComputationError: Size caps exceeded.
    """
    n = x.n_samples
    if not 1 <= k <= n:
        raise DataError(f"k={k} must lie in 1..N={n}", error_code="INVALID_K", details={"k": k, "n": n})
    if k > 1 and k > x.n_distinct():
        raise DataError(
            f"k={k} exceeds the {x.n_distinct()} distinct points; empty clusters are unavoidable",
            error_code="TOO_FEW_DISTINCT_POINTS",
            details={"k": k, "n_distinct": x.n_distinct()},
        )
    if x.scaling != Scaling.STANDARDIZED:
        logger.warning("Fitting %s on raw (unstandardized) data", cfg.algorithm)

    if cfg.algorithm == "kmeans":
        return _kmeans(cfg, x.values, k)

    merges = ward_merge_sequence(x)
    return FittedModel(algorithm="ward", partition=cut_dendrogram(merges, n, k), merges=merges if n > 1 else None)


def extend(model: FittedModel, x_new: Dataset | np.ndarray) -> Partition:
    """Label new points with the nearest center of a K-means model.

    Raises:
        ExtensionNotSupportedError: For models without centers (Ward).
        DataError: Dimension mismatch.
    """
    if model.centers is None:
        raise ExtensionNotSupportedError(
            f"{model.algorithm} models have no extension operator",
            details={"algorithm": model.algorithm},
        )
    X = _as_matrix(x_new)
    if X.shape[1] != model.centers.shape[1]:
        raise DataError(
            f"New points have {X.shape[1]} features, model expects {model.centers.shape[1]}",
            details={"p_new": X.shape[1], "p_model": model.centers.shape[1]},
        )
    labels, _ = _assign(X, model.centers)
    return Partition(labels=labels, k=model.k)
