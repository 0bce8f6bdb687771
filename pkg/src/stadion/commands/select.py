"""The ``select`` command: choose K by Stadion and write the artifacts.

Writes up to three files into the output directory:

* ``report.json`` -- the full selection report (both aggregations, paths,
  reference partitions, diagnostics and seed provenance), the trade-off
  table and the ranking of every candidate K;
* ``paths.csv`` -- one row per (K, epsilon);
* ``paths.svg`` -- the three path panels plus the trade-off curve.
"""

from __future__ import annotations

import logging
from typing import Any

from ..config import RunConfig
from ..models import SelectionReport
from ..plotting import render_paths_svg
from ..stability import ranking, select_k, trade_off_table
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


def report_payload(report: SelectionReport) -> dict[str, Any]:
    """JSON document of a selection report.

    The worker count is left out so reports are identical whatever the
    parallelism of the run.
    """
    return {
        "report": report.model_dump(mode="json", exclude={"params": {"n_jobs"}}),
        "k_hat": report.k_hat,
        "trade_off": [row.model_dump(mode="json") for row in trade_off_table(report)],
        "ranking": ranking(report),
    }


def run_select(config: RunConfig) -> dict[str, Any]:
    """Run Stadion model selection for one dataset.

    Args:
        config: Validated run configuration.

    Returns:
        A response dict; ``data`` holds ``k_hat``, ``k_hat_max``,
        ``k_hat_mean``, ``k_max``, ``eps_max`` and the written ``artifacts``.
    """
    stage = "load"
    try:
        data, labels = load_input(config)

        stage = "configure"
        k_max = resolve_k_max(config, data, labels)
        grid, calibrate = resolve_grid(config, data)

        stage = "select"
        report = select_k(
            config.clusterer_config(),
            data,
            k_max,
            grid,
            config.stability_params(),
            aggregation=config.agg,
            calibrate=calibrate,
        )

        stage = "write"
        artifacts: list[str] = []
        if "json" in config.emit:
            artifacts.append(str(write_json(report_payload(report), config.out / "report.json")))
        if "csv" in config.emit:
            artifacts.append(str(write_paths_csv(report.paths, config.out / "paths.csv")))
        if "svg" in config.emit:
            svg = render_paths_svg(report.paths, trade_off_table(report), title=f"Stadion paths: {data.name}")
            artifacts.append(str(atomic_write_text(config.out / "paths.svg", svg)))
    except Exception as exc:
        return handle_command_error(exc, stage)

    logger.info("Selection finished: K=%d (%s aggregation)", report.k_hat, report.aggregation)
    return make_response(
        success=True,
        data={
            "k_hat": report.k_hat,
            "k_hat_max": report.k_hat_max,
            "k_hat_mean": report.k_hat_mean,
            "k_max": report.k_max,
            "eps_max": report.paths[0].grid.eps_max,
            "artifacts": artifacts,
        },
        message=f"Selected K={report.k_hat} for {data.name}",
        stage=stage,
    )
