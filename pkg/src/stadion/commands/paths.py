"""The ``paths`` command: stability paths without selecting K."""

from __future__ import annotations

import logging
from typing import Any

from ..config import RunConfig
from ..perturbation import calibrate_from_paths, search_grid
from ..plotting import render_paths_svg
from ..stability import provenance, stadion_paths
from .utils import (
    atomic_write_text,
    handle_command_error,
    load_input,
    make_response,
    resolve_grid,
    resolve_k_max,
    write_json,
    write_paths_csv,
)

logger = logging.getLogger(__name__)


def run_paths(config: RunConfig) -> dict[str, Any]:
    """Evaluate Stab_B, Stab_W and Stadion for K = 1..k_max and write them out.

    With ``eps_max="auto"`` the paths are computed on the calibration grid
    and truncated where K=1 becomes the best solution.  Emits ``paths.csv``,
    ``paths.svg`` (path panels only) and ``paths.json`` (paths plus seed
    provenance).
    """
    stage = "load"
    try:
        data, labels = load_input(config)

        stage = "configure"
        k_max = resolve_k_max(config, data, labels)
        grid, calibrate = resolve_grid(config, data)
        alg, params = config.clusterer_config(), config.stability_params()

        stage = "paths"
        if calibrate:
            full = stadion_paths(alg, data, k_max, search_grid(data.n_features, grid.m), params)
            eps_max, _ = calibrate_from_paths(full, data.n_features)
            grid = full[0].grid.truncate(eps_max)
            paths = [path.truncate(grid) for path in full]
        else:
            paths = stadion_paths(alg, data, k_max, grid, params)

        stage = "write"
        artifacts: list[str] = []
        if "csv" in config.emit:
            artifacts.append(str(write_paths_csv(paths, config.out / "paths.csv")))
        if "svg" in config.emit:
            svg = render_paths_svg(paths, title=f"Stadion paths: {data.name}")
            artifacts.append(str(atomic_write_text(config.out / "paths.svg", svg)))
        if "json" in config.emit:
            payload = {
                "paths": [path.model_dump(mode="json") for path in paths],
                "provenance": provenance(params, grid),
            }
            artifacts.append(str(write_json(payload, config.out / "paths.json")))
    except Exception as exc:
        return handle_command_error(exc, stage)

    logger.info("Wrote stability paths for K=1..%d on %d noise levels", k_max, grid.m)
    return make_response(
        success=True,
        data={"k_max": k_max, "eps_max": grid.eps_max, "m": grid.m, "artifacts": artifacts},
        message=f"Computed {k_max} stability paths for {data.name}",
        stage=stage,
    )
