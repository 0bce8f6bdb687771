"""Noise perturbations, noise grids and the seed-splitting rule.

Every random draw of a stability evaluation comes from
``numpy.random.SeedSequence(master, spawn_key=path)`` where ``path`` starts
with one of the stream tags below.  A cell of the evaluation lattice can
therefore be recomputed in isolation, and results never depend on the order
(or the number of workers) in which cells are computed.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence

import numpy as np

from .exceptions import ConfigurationError
from .models import (
    ClustererConfig,
    Dataset,
    EpsilonGrid,
    NoiseSpec,
    SelectionDiagnostics,
    StabilityParams,
    StadionPath,
)

logger = logging.getLogger(__name__)

# Stream tags (first element of every spawn key)
REFERENCE_STREAM = 0
BETWEEN_STREAM = 1
WITHIN_STREAM = 2
FIT_STREAM = 3

SEED_RULE: dict[str, str] = {
    "generator": "numpy.random.SeedSequence(master_seed, spawn_key=path)",
    "reference_fit": f"({REFERENCE_STREAM}, K)",
    "between_noise": f"({BETWEEN_STREAM}, epsilon_index, d)",
    "within_noise": f"({WITHIN_STREAM}, K, cluster, epsilon_index, d)",
    "within_fit": f"({FIT_STREAM}, K, cluster, K_sub)",
}


def derive_seed(master: int, *path: int) -> int:
    """Derive an independent 64-bit seed for the stream identified by ``path``."""
    sequence = np.random.SeedSequence(master, spawn_key=tuple(int(p) for p in path))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def bootstrap_indices(n: int, seed: int) -> np.ndarray:
    """``n`` row indices drawn uniformly with replacement."""
    rng = np.random.default_rng(seed)
    return rng.integers(0, n, size=n)


def perturb_with_indices(x: Dataset, spec: NoiseSpec, seed: int) -> tuple[Dataset, np.ndarray | None]:
    """Perturb ``x`` and return the bootstrap row indices (None for additive noise).

    Uniform noise shifts every entry by an independent ``U(-eps, +eps)`` draw;
    Gaussian noise adds ``N(0, eps^2)`` per entry.  The input is never
    modified.
    """
    if spec.epsilon < 0:
        raise ConfigurationError(f"epsilon must be non-negative, got {spec.epsilon}")
    if spec.kind == "bootstrap":
        indices = bootstrap_indices(x.n_samples, seed)
        return x.subset(indices), indices
    if spec.epsilon == 0.0:
        return x, None

    rng = np.random.default_rng(seed)
    shape = x.values.shape
    if spec.kind == "uniform":
        noise = rng.uniform(-spec.epsilon, spec.epsilon, size=shape)
    else:
        noise = rng.normal(0.0, spec.epsilon, size=shape)
    return x.with_values(x.values + noise), None


def perturb(x: Dataset, spec: NoiseSpec, seed: int) -> Dataset:
    """Perturbed copy of ``x``; deterministic in ``seed``."""
    perturbed, _ = perturb_with_indices(x, spec, seed)
    return perturbed


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------


def default_grid(p: int, m: int = 21, eps_max: float | None = None) -> EpsilonGrid:
    """``m`` evenly spaced amplitudes from 0 to ``eps_max`` (default ``sqrt(p)``)."""
    if m < 2:
        raise ConfigurationError(f"grid needs at least 2 points, got m={m}", details={"m": m})
    top = math.sqrt(p) if eps_max is None else float(eps_max)
    if top <= 0:
        raise ConfigurationError(f"eps_max must be positive, got {top}", details={"eps_max": top})
    values = np.linspace(0.0, top, m)
    return EpsilonGrid(values=tuple(float(v) for v in values))


def search_grid(p: int, m: int = 21) -> EpsilonGrid:
    """Grid used for calibration: ``2m - 1`` points up to ``2 sqrt(p)``, aligned with ``default_grid``."""
    return default_grid(p, 2 * (m - 1) + 1, 2.0 * math.sqrt(p))


def calibrate_from_paths(paths: Sequence[StadionPath], p: int) -> tuple[float, bool]:
    """Smallest positive grid amplitude where K=1 has the best Stadion value.

    ``paths`` must cover K = 1..k_max (k_max >= 2) on one common grid.  At
    ``eps = 0`` every candidate ties, so the search starts at the first
    positive amplitude; ties count for K=1.

    Returns:
        ``(eps_max, fallback)``; ``fallback`` is True when K=1 never dominates
        and ``sqrt(p)`` is returned instead.
    """
    if len(paths) < 2:
        raise ConfigurationError("calibration needs at least two candidate K values", details={"k_max": len(paths)})
    grid = paths[0].grid
    for i, eps in enumerate(grid.values):
        if eps == 0.0:
            continue
        single = paths[0].stadion[i]
        if all(single >= path.stadion[i] for path in paths[1:]):
            logger.info("Calibrated eps_max=%.4g (K=1 dominates from grid point %d)", eps, i)
            return eps, False
    fallback = math.sqrt(p)
    logger.warning("K=1 never dominates up to eps=%.4g; falling back to eps_max=sqrt(p)=%.4g", grid.eps_max, fallback)
    return fallback, True


def calibrate_eps_max(
    alg: ClustererConfig,
    x: Dataset,
    k_max: int,
    params: StabilityParams,
    m: int = 21,
    diagnostics: SelectionDiagnostics | None = None,
) -> float:
    """Noise level at which the data stop being clusterable.

    Evaluates Stadion paths for K = 1..k_max on ``search_grid`` and returns
    the smallest amplitude where K=1 becomes the best solution, or
    ``sqrt(p)`` when that never happens within ``2 sqrt(p)``.

    Raises:
        ConfigurationError: If ``k_max < 2``.
    """
    if k_max < 2:
        raise ConfigurationError("calibration needs at least two candidate K values", details={"k_max": k_max})
    from .stability import stadion_paths

    paths = stadion_paths(alg, x, k_max, search_grid(x.n_features, m), params)
    eps, fallback = calibrate_from_paths(paths, x.n_features)
    if diagnostics is not None:
        diagnostics.eps_max_calibrated = eps
        diagnostics.calibration_fallback = fallback
    return eps
