"""Shared helpers for the command modules.

Covers the response dict every command returns, conversion of exceptions
into error responses that name the failing stage, input loading, resolution
of ``k_max`` and the noise grid, and atomic artifact writers.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from ..config import RunConfig, default_kmax
from ..dataset import load_csv, standardize
from ..exceptions import ConfigurationError, StadionError
from ..models import Dataset, EpsilonGrid, LabeledDataset, Partition, StadionPath
from ..perturbation import default_grid
from ..stability import path_table

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


# ---------------------------------------------------------------------------
# Responses
# ---------------------------------------------------------------------------


def make_response(
    *,
    success: bool,
    data: Any = None,
    message: str = "",
    stage: str = "",
    error: dict[str, Any] | None = None,
) -> dict[str, Any]:
    """Create a standardized command response dict.

    Args:
        success: Whether the command completed.
        data: The result data (artifact paths, selected K, ...).
        message: Human-readable result description.
        stage: The last stage reached (``load``, ``configure``, ``select``,
            ``paths``, ``benchmark``, ``generate`` or ``write``).
        error: Structured error dict if the command failed.

    Returns:
        A dict with success, data, message, stage, and error keys.
    """
    return {
        "success": success,
        "data": data,
        "message": message,
        "stage": stage,
        "error": error,
    }


def handle_command_error(exc: Exception, stage: str) -> dict[str, Any]:
    """Convert an exception raised during ``stage`` into a failed response.

    ``StadionError`` subclasses keep their error code and exit code; anything
    else is logged with its traceback and reported as ``UNEXPECTED_ERROR``
    with exit code 4.
    """
    if isinstance(exc, StadionError):
        logger.error("Stage %s failed: %s", stage, exc.message)
        error = exc.to_dict()
    else:
        logger.exception("Unexpected error in stage %s: %s", stage, exc)
        error = {"error": str(exc), "error_code": "UNEXPECTED_ERROR", "exit_code": 4}
    return make_response(
        success=False,
        message=f"{stage} failed: {error['error']}",
        stage=stage,
        error=error,
    )


def exit_code(response: dict[str, Any]) -> int:
    """Process exit status for a command response."""
    if response["success"]:
        return 0
    return int(response["error"].get("exit_code", 4))


# ---------------------------------------------------------------------------
# Inputs
# ---------------------------------------------------------------------------


def load_input(config: RunConfig, path: Path | None = None) -> tuple[Dataset, Partition | None]:
    """Load (and by default standardize) the run's dataset.

    Returns:
        The dataset and the ground-truth partition when ``labels_col`` is set.

    Raises:
        ConfigurationError: If no data path is configured.
        DataError: If the file cannot be read.
    """
    source = path or config.data
    if source is None:
        raise ConfigurationError("No input data given (use --data or [data] path)")
    loaded = load_csv(source, delimiter=config.delimiter, header=config.header, label_col=config.labels_col)
    if isinstance(loaded, LabeledDataset):
        data, labels = loaded.data, loaded.labels
    else:
        data, labels = loaded, None
    if config.standardize:
        data = standardize(data)
    else:
        logger.warning("Standardization disabled; noise amplitudes are in raw data units")
    return data, labels


def resolve_k_max(config: RunConfig, data: Dataset, labels: Partition | None) -> int:
    """``--kmax`` if given, else K* + 20 rounded down to ten; capped at the distinct points.

    Raises:
        ConfigurationError: If neither ``--kmax`` nor ground-truth labels are available.
    """
    if config.kmax is not None:
        k_max = config.kmax
    elif labels is not None:
        k_max = default_kmax(labels.k)
    else:
        raise ConfigurationError("k_max is required when the data have no ground-truth labels (use --kmax)")
    distinct = data.n_distinct()
    if k_max > distinct:
        logger.warning("k_max=%d exceeds the %d distinct points; using %d", k_max, distinct, distinct)
        k_max = distinct
    return k_max


def resolve_grid(config: RunConfig, data: Dataset) -> tuple[EpsilonGrid, bool]:
    """Noise grid of the run and whether ``eps_max`` must be calibrated.

    ``eps_max="auto"`` returns the default grid (its spacing drives the
    calibration search) together with ``True``.
    """
    if config.eps_max == "auto":
        return default_grid(data.n_features, config.grid_m), True
    return default_grid(data.n_features, config.grid_m, config.eps_max), False


# ---------------------------------------------------------------------------
# Artifacts
# ---------------------------------------------------------------------------


def atomic_write_text(path: Path, text: str) -> Path:
    """Write ``text`` to a temporary file next to ``path`` and rename it into place."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
    logger.debug("Wrote %s (%d bytes)", path, len(text))
    return path


def write_paths_csv(paths: Sequence[StadionPath], path: Path) -> Path:
    """Path table with columns ``K, epsilon, stab_b, stab_w, stadion``."""
    text = path_table(paths).to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return atomic_write_text(path, text)


def write_json(payload: Any, path: Path) -> Path:
    return atomic_write_text(path, json.dumps(payload, indent=2) + "\n")
