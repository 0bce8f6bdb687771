"""Configuration management for the Stadion toolkit.

Two layers:

* ``StadionSettings`` -- process-wide settings loaded from environment
  variables (``STADION_`` prefix) and ``.env`` files: default worker count,
  log level, size caps and the default master seed.  A cached
  ``get_config()`` factory avoids re-reading the environment on every call.
* ``RunConfig`` -- one selection/paths/benchmark job.  Built by
  ``build_run_config`` from a TOML run file and command-line flags with the
  precedence flag > run file > environment > default.

Run files group ``key = value`` lines under section headers::

    [data]
    path = "blobs.csv"
    labels_col = 2

    [clusterer]
    algorithm = "kmeans"
    n_runs = 35

    [stability]
    d = 10
    omega = "2..10"
    measure = "ARI1"

    [grid]
    m = 21
    eps_max = "auto"

    [output]
    out = "results"
    emit = ["csv", "svg", "json"]

Usage::

    from stadion.config import get_config

    config = get_config()
    print(config.n_jobs)         # 1
    print(config.log_level)      # INFO
"""

from __future__ import annotations

import logging
import re
import tomllib
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, ValidationInfo, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .exceptions import ConfigurationError
from .models import Aggregation, ClustererConfig, MeasureId, NoiseKind, StabilityParams

logger = logging.getLogger(__name__)

# Valid Python logging level names (upper-cased for comparison)
_VALID_LOG_LEVELS: frozenset[str] = frozenset(
    {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}
)

_VALID_EMITS: frozenset[str] = frozenset({"csv", "svg", "json"})

_OMEGA_PATTERN = re.compile(r"^\s*(\d+)\s*\.\.\s*(\d+)\s*$")


class StadionSettings(BaseSettings):
    """Process-wide settings for the Stadion toolkit.

    Environment variables:
        STADION_N_JOBS:             Default worker count (default 1).
        STADION_LOG_LEVEL:          Logging level (default INFO).
        STADION_CONTINGENCY_CAP:    Largest K or K' of a contingency table (default 4096).
        STADION_WARD_MAX_SAMPLES:   Largest N accepted by Ward linkage (default 20000).
        STADION_INDEX_MAX_SAMPLES:  Largest N for the O(N^2) validity indices (default 20000).
        STADION_DEFAULT_SEED:       Master seed when none is given (default 0).
    """

    model_config = SettingsConfigDict(
        env_prefix="STADION_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
        case_sensitive=False,
    )

    n_jobs: int = Field(
        default=1,
        ge=1,
        description="Default number of parallel workers for stability evaluation",
    )
    log_level: str = Field(
        default="INFO",
        description="Logging level: DEBUG, INFO, WARNING, ERROR, CRITICAL",
    )
    contingency_cap: int = Field(
        default=4096,
        gt=0,
        description="Maximum number of clusters on either side of a contingency table",
    )
    ward_max_samples: int = Field(
        default=20_000,
        gt=1,
        description="Maximum N for Ward linkage (quadratic memory)",
    )
    index_max_samples: int = Field(
        default=20_000,
        gt=1,
        description="Maximum N for quadratic validity indices (silhouette, Dunn)",
    )
    default_seed: int = Field(
        default=0,
        description="Master seed used when a run does not provide one",
    )

    @field_validator("log_level")
    @classmethod
    def _validate_log_level(cls, value: str, info: ValidationInfo) -> str:
        """Validate that the log level is a recognized Python logging level."""
        normalized = value.strip().upper()
        if normalized not in _VALID_LOG_LEVELS:
            raise ValueError(
                f"STADION_LOG_LEVEL must be one of {sorted(_VALID_LOG_LEVELS)}. "
                f"Got: {value!r}"
            )
        return normalized

    @model_validator(mode="after")
    def _log_config_loaded(self) -> StadionSettings:
        """Log that configuration was successfully loaded (debug level)."""
        logger.debug(
            "Configuration loaded: n_jobs=%d, log_level=%s, contingency_cap=%d",
            self.n_jobs,
            self.log_level,
            self.contingency_cap,
        )
        return self


# ------------------------------------------------------------------
# Singleton / factory
# ------------------------------------------------------------------

_config_instance: StadionSettings | None = None


def get_config(**overrides: Any) -> StadionSettings:
    """Return the global ``StadionSettings`` singleton.

    On the first call the settings are loaded from environment variables and
    the ``.env`` file. Subsequent calls return the cached instance.

    Args:
        **overrides: Optional field overrides passed to the
            ``StadionSettings`` constructor on first call only.

    Returns:
        The global ``StadionSettings`` instance.

    Raises:
        pydantic.ValidationError: If validation fails.
    """
    global _config_instance
    if _config_instance is None:
        _config_instance = StadionSettings(**overrides)
        logger.debug("Configuration initialized: n_jobs=%d", _config_instance.n_jobs)
    return _config_instance


def _reset_config() -> None:
    """Reset the cached configuration singleton.

    Intended for test teardown so that each test can start with a clean
    configuration state. Should not be called in production code.
    """
    global _config_instance
    _config_instance = None
    logger.debug("Configuration singleton reset")


# ------------------------------------------------------------------
# Run configuration
# ------------------------------------------------------------------


def parse_omega(value: str | list[int] | tuple[int, ...]) -> tuple[int, ...]:
    """Parse ``"a..b"`` (inclusive), ``"2,3,5"`` or a list into a tuple of sub-cluster counts."""
    if isinstance(value, (list, tuple)):
        return tuple(int(v) for v in value)
    match = _OMEGA_PATTERN.match(value)
    if match:
        low, high = int(match.group(1)), int(match.group(2))
        if high < low:
            raise ValueError(f"empty omega range {value!r}")
        return tuple(range(low, high + 1))
    try:
        return tuple(int(part) for part in value.split(",") if part.strip())
    except ValueError:
        raise ValueError(f"omega must look like 'a..b' or '2,3,5', got {value!r}") from None


class RunConfig(BaseModel):
    """Validated parameters of one CLI job."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    # [data]
    data: Path | None = None
    labels_col: int | None = None
    delimiter: str = ","
    header: bool = False
    standardize: bool = True

    # [clusterer]
    algorithm: Literal["kmeans", "ward"] = "kmeans"
    n_runs: int = Field(default=35, ge=1)
    max_iters: int = Field(default=300, ge=1)
    tolerance: float = Field(default=1e-6, gt=0)
    init: Literal["kmeanspp", "random"] = "kmeanspp"

    # [stability]
    variant: Literal["standard", "extended"] | None = None
    kmax: int | None = Field(default=None, ge=1)
    d: int = Field(default=10, ge=1)
    omega: tuple[int, ...] = tuple(range(2, 11))
    noise: NoiseKind = "uniform"
    measure: MeasureId = MeasureId.ARI1
    agg: Aggregation = "max"
    unsplittable_score: float = 0.0

    # [grid]
    grid_m: int = Field(default=21, ge=2)
    eps_max: float | Literal["auto"] | None = None

    # [output]
    out: Path = Path("stadion-out")
    emit: frozenset[str] = _VALID_EMITS

    # run
    seed: int = Field(default=0, ge=0)
    n_jobs: int = Field(default=1, ge=1)

    @field_validator("omega", mode="before")
    @classmethod
    def _parse_omega(cls, v: Any) -> tuple[int, ...]:
        return parse_omega(v)

    @field_validator("measure", mode="before")
    @classmethod
    def _parse_measure(cls, v: Any) -> MeasureId:
        return MeasureId.parse(v)

    @field_validator("eps_max", mode="before")
    @classmethod
    def _parse_eps_max(cls, v: Any) -> float | str | None:
        if isinstance(v, str):
            text = v.strip().lower()
            if text == "auto":
                return "auto"
            return float(text)
        return v

    @field_validator("emit", mode="before")
    @classmethod
    def _parse_emit(cls, v: Any) -> frozenset[str]:
        items = v.split(",") if isinstance(v, str) else list(v)
        emits = frozenset(item.strip().lower() for item in items if item.strip())
        unknown = emits - _VALID_EMITS
        if unknown:
            raise ValueError(f"unknown emit targets {sorted(unknown)}; valid: {sorted(_VALID_EMITS)}")
        return emits

    @model_validator(mode="after")
    def _check_variant(self) -> RunConfig:
        if self.variant == "extended" and self.algorithm == "ward":
            raise ValueError("the extended variant needs an extension operator; use --variant standard with ward")
        if isinstance(self.eps_max, float) and self.eps_max <= 0:
            raise ValueError("eps_max must be positive")
        return self

    def clusterer_config(self) -> ClustererConfig:
        return ClustererConfig(
            algorithm=self.algorithm,
            n_runs=self.n_runs,
            max_iters=self.max_iters,
            tolerance=self.tolerance,
            init=self.init,
            seed=self.seed,
        )

    def stability_params(self) -> StabilityParams:
        return StabilityParams(
            d_perturbations=self.d,
            omega=self.omega,
            measure=self.measure,
            noise=self.noise,
            variant=self.variant,
            seed=self.seed,
            n_jobs=self.n_jobs,
            unsplittable_score=self.unsplittable_score,
        )


def default_kmax(k_star: int) -> int:
    """K* + 20 rounded down to the nearest ten."""
    return ((k_star + 20) // 10) * 10


def load_run_file(path: Path) -> dict[str, Any]:
    """Read a TOML run file and flatten its sections into RunConfig keys.

    Section headers only group keys; the ``[grid]`` keys ``m`` and the
    ``[data]`` key ``path`` are mapped onto ``grid_m`` and ``data``.

    Raises:
        ConfigurationError: If the file is missing, malformed, or uses
            unknown keys.
    """
    try:
        with path.open("rb") as handle:
            document = tomllib.load(handle)
    except FileNotFoundError:
        raise ConfigurationError(f"Run file not found: {path}", details={"path": str(path)}) from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"Malformed run file {path}: {exc}", details={"path": str(path)}) from exc

    renames = {("data", "path"): "data", ("grid", "m"): "grid_m"}
    flat: dict[str, Any] = {}
    for section, body in document.items():
        if not isinstance(body, dict):
            flat[section] = body
            continue
        for key, value in body.items():
            flat[renames.get((section, key), key)] = value

    unknown = set(flat) - set(RunConfig.model_fields)
    if unknown:
        raise ConfigurationError(
            f"Unknown keys in run file {path}: {sorted(unknown)}",
            details={"path": str(path), "unknown": sorted(unknown)},
        )
    logger.debug("Loaded run file %s with keys %s", path, sorted(flat))
    return flat


def build_run_config(run_file: Path | None = None, **flags: Any) -> RunConfig:
    """Merge defaults, environment, run file and flags into a ``RunConfig``.

    ``None``-valued flags are treated as "not given" so they never mask run
    file values.

    Raises:
        ConfigurationError: If the merged values fail validation.
    """
    settings = get_config()
    merged: dict[str, Any] = {"n_jobs": settings.n_jobs, "seed": settings.default_seed}
    if run_file is not None:
        merged.update(load_run_file(run_file))
    merged.update({key: value for key, value in flags.items() if value is not None})
    try:
        return RunConfig(**merged)
    except (ValidationError, ValueError) as exc:
        raise ConfigurationError(f"Invalid run configuration: {exc}", details={"keys": sorted(merged)}) from exc
