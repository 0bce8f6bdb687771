"""Between- and within-cluster stability, Stadion paths and the selection of K.

For every candidate K a reference partition is fitted once on the
unperturbed data.  Between-cluster stability at noise level ``eps`` is the
mean similarity between that reference and the partitions of D perturbed
copies; within-cluster stability re-clusters every reference cluster into
K' sub-clusters (K' in Omega) and applies the same estimate inside it,
weighting clusters by size.  Stadion is their difference, evaluated over a
grid of noise levels to form a path, and K is selected by the maximum or the
mean of each path.

Two variants label the perturbed copies:

* ``standard`` re-fits the clusterer on every perturbed copy (with the
  reference seed, so a zero-noise copy reproduces the reference exactly);
* ``extended`` keeps the reference model and assigns perturbed points to
  their nearest center.

The (K, eps) lattice is evaluated with joblib; all randomness comes from
``perturbation.derive_seed`` so results do not depend on ``n_jobs``.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from .clusterers import extend, fit
from .exceptions import ComputationError, ConfigurationError, ExtensionNotSupportedError
from .models import (
    Aggregation,
    ClustererConfig,
    Dataset,
    EpsilonGrid,
    FittedModel,
    NoiseSpec,
    OmegaSkip,
    Partition,
    SelectionDiagnostics,
    SelectionReport,
    StabilityParams,
    StadionPath,
    TradeOffRow,
    argmax_smallest,
)
from .partitions import similarity
from .perturbation import (
    BETWEEN_STREAM,
    FIT_STREAM,
    REFERENCE_STREAM,
    SEED_RULE,
    WITHIN_STREAM,
    calibrate_from_paths,
    derive_seed,
    perturb_with_indices,
    search_grid,
)

logger = logging.getLogger(__name__)

Variant = Literal["standard", "extended"]


@dataclass
class _SubModels:
    """Sub-cluster reference models of one reference partition."""

    # cluster -> (row indices, {K': model})
    clusters: dict[int, tuple[np.ndarray, dict[int, FittedModel]]] = field(default_factory=dict)
    skipped: list[OmegaSkip] = field(default_factory=list)


def _seeded(alg: ClustererConfig, seed: int) -> ClustererConfig:
    return alg.model_copy(update={"seed": seed})


def _check_variant(alg: ClustererConfig, variant: Variant) -> None:
    if variant == "extended" and not alg.has_extension:
        raise ExtensionNotSupportedError(
            f"The extended variant needs an extension operator, which {alg.algorithm} does not provide",
            details={"algorithm": alg.algorithm},
        )


# ---------------------------------------------------------------------------
# Between-cluster stability
# ---------------------------------------------------------------------------


def stab_between(
    alg: ClustererConfig,
    x: Dataset,
    ref: Partition | FittedModel,
    k: int,
    eps: float,
    params: StabilityParams,
    seeds: Sequence[int] | None = None,
) -> float:
    """Mean similarity between ``ref`` and the partitions of D perturbed copies of ``x``.

    Args:
        alg: Clusterer; its ``seed`` is reused for every re-fit of the
            standard variant.
        x: Data the reference model was fitted on.
        ref: Reference partition (K clusters) of ``x``, or the model that
            produced it.  The extended variant needs the model.
        k: Number of clusters of the reference.
        eps: Noise amplitude.
        params: Stability parameters (D, measure, noise kind, variant).
        seeds: One perturbation seed per copy; defaults to the between-stream
            seeds of grid index 0.

    Raises:
        ExtensionNotSupportedError: Extended variant with Ward, or with a
            bare partition as reference.
    """
    variant = params.resolved_variant(alg)
    _check_variant(alg, variant)
    ref_partition = ref if isinstance(ref, Partition) else ref.partition
    if variant == "extended" and not isinstance(ref, FittedModel):
        raise ExtensionNotSupportedError(
            "The extended variant needs the fitted reference model, not only its partition",
            details={"k": k},
        )
    d = params.d_perturbations
    if seeds is None:
        seeds = [derive_seed(params.seed, BETWEEN_STREAM, 0, i) for i in range(d)]
    if len(seeds) != d:
        raise ComputationError(f"expected {d} perturbation seeds, got {len(seeds)}")

    spec = NoiseSpec(kind=params.noise, epsilon=eps)
    # zero additive noise leaves every copy equal to x
    copies = 1 if eps == 0.0 and params.noise != "bootstrap" else d

    total = 0.0
    for index in range(copies):
        x_d, rows = perturb_with_indices(x, spec, seeds[index])
        reference = ref_partition if rows is None else ref_partition.restrict(rows)
        if isinstance(ref, FittedModel) and variant == "extended":
            labels = extend(ref, x_d)
        else:
            k_fit = min(k, x_d.n_distinct()) if rows is not None else k
            labels = fit(alg, x_d, k_fit).partition
        total += similarity(params.measure, reference, labels)
    return total / copies


# ---------------------------------------------------------------------------
# Within-cluster stability
# ---------------------------------------------------------------------------


def fit_sub_models(alg: ClustererConfig, x: Dataset, ref: Partition, params: StabilityParams) -> _SubModels:
    """Fit the reference sub-partitions of every cluster for every K' in Omega.

    K' values larger than the cluster (or than its number of distinct
    points) are skipped and recorded.

    Raises:
        ComputationError: If a reference cluster is empty.
    """
    sub = _SubModels()
    for cluster in range(ref.k):
        rows = ref.members(cluster)
        if rows.size == 0:
            raise ComputationError(
                f"Reference cluster {cluster} of K={ref.k} is empty",
                error_code="EMPTY_REFERENCE_CLUSTER",
                details={"k": ref.k, "cluster": cluster},
            )
        data = x.subset(rows)
        distinct = data.n_distinct()
        models: dict[int, FittedModel] = {}
        for k_sub in params.omega:
            if k_sub > rows.size or k_sub > distinct:
                sub.skipped.append(OmegaSkip(k=ref.k, cluster=cluster, cluster_size=int(rows.size), omega=k_sub))
                continue
            seed = derive_seed(params.seed, FIT_STREAM, ref.k, cluster, k_sub)
            models[k_sub] = fit(_seeded(alg, seed), data, k_sub)
        sub.clusters[cluster] = (rows, models)
    if sub.skipped:
        logger.warning(
            "K=%d: skipped %d (cluster, K') pairs with clusters smaller than K'",
            ref.k,
            len(sub.skipped),
        )
    return sub


def _within_at(
    alg: ClustererConfig,
    x: Dataset,
    k: int,
    sub: _SubModels,
    eps: float,
    eps_index: int,
    params: StabilityParams,
) -> float:
    n = x.n_samples
    total = 0.0
    for cluster, (rows, models) in sub.clusters.items():
        weight = rows.size / n
        if not models:
            total += weight * params.unsplittable_score
            continue
        data = x.subset(rows)
        seeds = [derive_seed(params.seed, WITHIN_STREAM, k, cluster, eps_index, i) for i in range(params.d_perturbations)]
        scores = [
            stab_between(_seeded(alg, derive_seed(params.seed, FIT_STREAM, k, cluster, k_sub)), data, model, k_sub, eps, params, seeds)
            for k_sub, model in models.items()
        ]
        total += weight * float(np.mean(scores))
    return total


def stab_within(
    alg: ClustererConfig,
    x: Dataset,
    ref: Partition,
    params: StabilityParams,
    eps: float,
    eps_index: int = 0,
    diagnostics: SelectionDiagnostics | None = None,
) -> float:
    """Size-weighted mean, over reference clusters, of the between-stability of their sub-partitions.

    Each cluster is re-clustered (without re-standardizing) into K' clusters
    for every K' in Omega and the resulting between-stabilities are averaged
    over the retained K'.  A cluster for which every K' is skipped
    contributes ``params.unsplittable_score``.
    """
    variant = params.resolved_variant(alg)
    _check_variant(alg, variant)
    sub = fit_sub_models(alg, x, ref, params)
    if diagnostics is not None:
        diagnostics.skipped_omega.extend(sub.skipped)
    return _within_at(alg, x, ref.k, sub, eps, eps_index, params)


# ---------------------------------------------------------------------------
# Paths
# ---------------------------------------------------------------------------


@dataclass
class _Evaluation:
    references: list[FittedModel]
    paths: list[StadionPath]
    skipped: list[OmegaSkip]


def _prepare(alg: ClustererConfig, x: Dataset, k: int, params: StabilityParams) -> tuple[FittedModel, _SubModels]:
    seed = derive_seed(params.seed, REFERENCE_STREAM, k)
    ref = fit(_seeded(alg, seed), x, k)
    return ref, fit_sub_models(alg, x, ref.partition, params)


def _cell(
    alg: ClustererConfig,
    x: Dataset,
    k: int,
    ref: FittedModel,
    sub: _SubModels,
    eps: float,
    eps_index: int,
    params: StabilityParams,
) -> tuple[float, float]:
    seeds = [derive_seed(params.seed, BETWEEN_STREAM, eps_index, i) for i in range(params.d_perturbations)]
    fit_cfg = _seeded(alg, derive_seed(params.seed, REFERENCE_STREAM, k))
    b = stab_between(fit_cfg, x, ref, k, eps, params, seeds)
    w = _within_at(alg, x, k, sub, eps, eps_index, params)
    logger.debug("K=%d eps=%.4g: stab_b=%.4f stab_w=%.4f", k, eps, b, w)
    return b, w


def _evaluate(alg: ClustererConfig, x: Dataset, k_max: int, grid: EpsilonGrid, params: StabilityParams) -> _Evaluation:
    if k_max < 1:
        raise ComputationError(f"k_max must be at least 1, got {k_max}", details={"k_max": k_max})
    variant = params.resolved_variant(alg)
    _check_variant(alg, variant)
    logger.info(
        "Evaluating Stadion paths: K=1..%d, M=%d, D=%d, variant=%s, n_jobs=%d",
        k_max,
        grid.m,
        params.d_perturbations,
        variant,
        params.n_jobs,
    )
    ks = list(range(1, k_max + 1))
    with Parallel(n_jobs=params.n_jobs) as parallel:
        prepared = parallel(delayed(_prepare)(alg, x, k, params) for k in ks)
        cells = parallel(
            delayed(_cell)(alg, x, k, prepared[k - 1][0], prepared[k - 1][1], eps, i, params)
            for k in ks
            for i, eps in enumerate(grid.values)
        )

    paths = []
    for k in ks:
        row = cells[(k - 1) * grid.m : k * grid.m]
        paths.append(StadionPath.from_components(k, grid, [b for b, _ in row], [w for _, w in row]))
    skipped = [skip for _, sub in prepared for skip in sub.skipped]
    return _Evaluation(references=[ref for ref, _ in prepared], paths=paths, skipped=skipped)


def stadion_paths(
    alg: ClustererConfig,
    x: Dataset,
    k_max: int,
    grid: EpsilonGrid,
    params: StabilityParams,
) -> list[StadionPath]:
    """Between, within and Stadion paths for K = 1..k_max over ``grid``."""
    return _evaluate(alg, x, k_max, grid, params).paths


# ---------------------------------------------------------------------------
# Selection
# ---------------------------------------------------------------------------


def _aggregate(paths: Sequence[StadionPath]) -> tuple[tuple[float, ...], tuple[float, ...]]:
    max_scores = tuple(float(max(path.stadion)) for path in paths)
    mean_scores = tuple(float(np.mean(path.stadion)) for path in paths)
    return max_scores, mean_scores


def provenance(params: StabilityParams, grid: EpsilonGrid) -> dict[str, object]:
    """Seed-splitting record that allows any (K, eps, d) cell to be recomputed."""
    return {
        "master_seed": params.seed,
        "seed_rule": dict(SEED_RULE),
        "stream_tags": {
            "reference": REFERENCE_STREAM,
            "between": BETWEEN_STREAM,
            "within": WITHIN_STREAM,
            "within_fit": FIT_STREAM,
        },
        "grid": list(grid.values),
    }


def select_k(
    alg: ClustererConfig,
    x: Dataset,
    k_max: int,
    grid: EpsilonGrid,
    params: StabilityParams,
    aggregation: Aggregation = "max",
    calibrate: bool = False,
) -> SelectionReport:
    """Select the number of clusters by maximizing the aggregated Stadion path.

    With ``calibrate=True`` the paths are evaluated on ``search_grid`` (same
    spacing as ``grid``, extended to ``2 sqrt(p)``), ``eps_max`` is set where
    K=1 becomes the best solution, and the paths are truncated there before
    aggregating.  Both aggregations are always reported; ties go to the
    smaller K.
    """
    diagnostics = SelectionDiagnostics(zero_variance_columns=list(x.zero_variance))
    if calibrate:
        if k_max < 2:
            raise ConfigurationError("calibration needs at least two candidate K values", details={"k_max": k_max})
        evaluation = _evaluate(alg, x, k_max, search_grid(x.n_features, grid.m), params)
        eps_max, fallback = calibrate_from_paths(evaluation.paths, x.n_features)
        diagnostics.eps_max_calibrated = eps_max
        diagnostics.calibration_fallback = fallback
        if fallback:
            diagnostics.warnings.append("K=1 never became the best solution; eps_max fell back to sqrt(p)")
        final_grid = evaluation.paths[0].grid.truncate(eps_max)
        paths = [path.truncate(final_grid) for path in evaluation.paths]
    else:
        evaluation = _evaluate(alg, x, k_max, grid, params)
        final_grid = grid
        paths = evaluation.paths

    diagnostics.skipped_omega = evaluation.skipped
    if evaluation.skipped:
        diagnostics.warnings.append(f"{len(evaluation.skipped)} sub-cluster counts skipped for small clusters")

    max_scores, mean_scores = _aggregate(paths)
    report = SelectionReport(
        k_max=k_max,
        aggregation=aggregation,
        k_hat_max=argmax_smallest(max_scores) + 1,
        k_hat_mean=argmax_smallest(mean_scores) + 1,
        max_scores=max_scores,
        mean_scores=mean_scores,
        paths=paths,
        reference_labels=[ref.partition.labels.tolist() for ref in evaluation.references],
        clusterer=alg,
        params=params,
        variant=params.resolved_variant(alg),
        diagnostics=diagnostics,
        provenance=provenance(params, final_grid),
    )
    logger.info("Selected K=%d (max) and K=%d (mean)", report.k_hat_max, report.k_hat_mean)
    return report


def trade_off_table(report: SelectionReport) -> list[TradeOffRow]:
    """Aggregated (Stab_B, Stab_W, Stadion) per K under the report's aggregation.

    ``max`` reads all three values at the noise level where the Stadion path
    peaks (first peak); ``mean`` averages Stab_B and Stab_W over the grid.
    Either way ``stadion == stab_b - stab_w``.
    """
    rows = []
    for path in report.paths:
        if report.aggregation == "max":
            i = argmax_smallest(path.stadion)
            b, w = path.stab_b[i], path.stab_w[i]
        else:
            b, w = float(np.mean(path.stab_b)), float(np.mean(path.stab_w))
        rows.append(TradeOffRow(k=path.k, stab_b=b, stab_w=w, stadion=b - w))
    return rows


def ranking(report: SelectionReport, aggregation: Aggregation | None = None) -> list[int]:
    """Candidate K values ordered from best to worst aggregated Stadion (ties: smaller K first)."""
    scores = report.max_scores if (aggregation or report.aggregation) == "max" else report.mean_scores
    return sorted(range(1, report.k_max + 1), key=lambda k: (-scores[k - 1], k))


def path_table(paths: Sequence[StadionPath]) -> pd.DataFrame:
    """Long-format table with one row per (K, eps): ``K, epsilon, stab_b, stab_w, stadion``."""
    records = [
        {"K": path.k, "epsilon": eps, "stab_b": b, "stab_w": w, "stadion": s}
        for path in paths
        for eps, b, w, s in zip(path.grid.values, path.stab_b, path.stab_w, path.stadion, strict=True)
    ]
    frame = pd.DataFrame.from_records(records, columns=["K", "epsilon", "stab_b", "stab_w", "stadion"])
    return frame.astype({"K": "int64"})

