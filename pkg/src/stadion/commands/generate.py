"""The ``gen`` command: write a synthetic labeled fixture to CSV."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from ..dataset import gen_synthetic, write_csv
from ..exceptions import ConfigurationError
from ..models import GeneratorSpec
from .utils import handle_command_error, make_response

logger = logging.getLogger(__name__)


def run_gen(out: Path, seed: int = 0, **spec_fields: Any) -> dict[str, Any]:
    """Generate a fixture and write it with the labels in the last column.

    Args:
        out: Destination CSV file.
        seed: Master seed; the output is a pure function of the fixture parameters and seed.
        **spec_fields: ``GeneratorSpec`` fields (``kind``, ``n_samples``,
            ``n_features``, ...); ``None`` values are ignored.
    """
    stage = "configure"
    try:
        try:
            spec = GeneratorSpec(**{key: value for key, value in spec_fields.items() if value is not None})
        except ValidationError as exc:
            raise ConfigurationError(f"Invalid fixture parameters: {exc}", details={"fields": sorted(spec_fields)}) from exc

        stage = "generate"
        fixture = gen_synthetic(spec, seed)

        stage = "write"
        out.parent.mkdir(parents=True, exist_ok=True)
        write_csv(fixture.data, out, labels=fixture.labels)
    except Exception as exc:
        return handle_command_error(exc, stage)

    logger.info("Wrote %s fixture (N=%d, K*=%d) to %s", spec.kind, fixture.data.n_samples, fixture.labels.k, out)
    return make_response(
        success=True,
        data={
            "kind": spec.kind,
            "n_samples": fixture.data.n_samples,
            "n_features": fixture.data.n_features,
            "k_star": fixture.labels.k,
            "artifacts": [str(out)],
        },
        message=f"Generated {spec.kind} fixture",
        stage=stage,
    )
