"""Command-line interface for the Stadion toolkit.

Commands:
    select     Select the number of clusters and write report, path table and plot.
    paths      Write the stability paths only.
    benchmark  Compare Stadion with validity indices over labeled datasets.
    gen        Write a synthetic labeled fixture.

Every command prints its JSON response on stdout and exits with 0 on
success, 2 on configuration errors, 3 on data errors and 4 on runtime
failures.  Parameters come from flags, an optional TOML run file
(``--config``), ``STADION_*`` environment variables and defaults, in that
order of precedence.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path
from typing import Annotated, Any, NoReturn, Optional

import typer
from pydantic import ValidationError

from .commands import exit_code, run_benchmark, run_gen, run_paths, run_select
from .commands.utils import handle_command_error
from .config import RunConfig, build_run_config, get_config
from .exceptions import ConfigurationError

logger = logging.getLogger(__name__)

app = typer.Typer(
    name="stadion",
    help="Select the number of clusters with the stability difference criterion",
    add_completion=False,
)

ConfigOpt = Annotated[Optional[Path], typer.Option("--config", "-c", help="TOML run file")]
DataOpt = Annotated[Optional[Path], typer.Option("--data", help="Input CSV file (directory for benchmark)")]
LabelsColOpt = Annotated[Optional[int], typer.Option("--labels-col", help="Zero-based ground-truth column (-1 = last)")]
AlgorithmOpt = Annotated[Optional[str], typer.Option("--algorithm", help="kmeans or ward")]
VariantOpt = Annotated[Optional[str], typer.Option("--variant", help="standard or extended")]
KmaxOpt = Annotated[Optional[int], typer.Option("--kmax", help="Largest candidate K")]
DOpt = Annotated[Optional[int], typer.Option("--d", help="Perturbed copies per noise level")]
OmegaOpt = Annotated[Optional[str], typer.Option("--omega", help="Sub-cluster counts, e.g. 2..10")]
NoiseOpt = Annotated[Optional[str], typer.Option("--noise", help="uniform, gaussian or bootstrap")]
GridMOpt = Annotated[Optional[int], typer.Option("--grid-m", help="Number of noise levels")]
EpsMaxOpt = Annotated[Optional[str], typer.Option("--eps-max", help="Largest noise level, or 'auto' to calibrate")]
MeasureOpt = Annotated[Optional[str], typer.Option("--measure", help="Partition similarity measure (default ARI1)")]
AggOpt = Annotated[Optional[str], typer.Option("--agg", help="Path aggregation: max or mean")]
SeedOpt = Annotated[Optional[int], typer.Option("--seed", help="Master seed")]
OutOpt = Annotated[Optional[Path], typer.Option("--out", "-o", help="Output directory")]
EmitOpt = Annotated[Optional[str], typer.Option("--emit", help="Comma-separated artifacts: csv,svg,json")]
JobsOpt = Annotated[Optional[int], typer.Option("--n-jobs", help="Parallel workers (default STADION_N_JOBS)")]
VerboseOpt = Annotated[bool, typer.Option("--verbose", "-v", help="Enable debug logging")]


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.INFO,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        level = "DEBUG" if verbose else get_config().log_level
    except ValidationError as exc:
        _fail(ConfigurationError(f"Invalid environment settings: {exc}"), "configure")
    logging.getLogger("stadion").setLevel(level)


def _finish(response: dict[str, Any]) -> None:
    typer.echo(json.dumps(response, indent=2, default=str))
    code = exit_code(response)
    if code:
        raise typer.Exit(code)


def _fail(exc: Exception, stage: str) -> NoReturn:
    response = handle_command_error(exc, stage)
    typer.echo(json.dumps(response, indent=2, default=str))
    raise typer.Exit(exit_code(response))


def _run_config(config_file: Path | None, **flags: Any) -> RunConfig:
    try:
        return build_run_config(config_file, **flags)
    except ConfigurationError as exc:
        _fail(exc, "configure")


@app.command()
def select(
    config: ConfigOpt = None,
    data: DataOpt = None,
    labels_col: LabelsColOpt = None,
    algorithm: AlgorithmOpt = None,
    variant: VariantOpt = None,
    kmax: KmaxOpt = None,
    d: DOpt = None,
    omega: OmegaOpt = None,
    noise: NoiseOpt = None,
    grid_m: GridMOpt = None,
    eps_max: EpsMaxOpt = None,
    measure: MeasureOpt = None,
    agg: AggOpt = None,
    seed: SeedOpt = None,
    out: OutOpt = None,
    emit: EmitOpt = None,
    n_jobs: JobsOpt = None,
    verbose: VerboseOpt = False,
) -> None:
    """Select the number of clusters by maximizing the Stadion path."""
    _configure_logging(verbose)
    run = _run_config(
        config, data=data, labels_col=labels_col, algorithm=algorithm, variant=variant, kmax=kmax, d=d,
        omega=omega, noise=noise, grid_m=grid_m, eps_max=eps_max, measure=measure, agg=agg, seed=seed,
        out=out, emit=emit, n_jobs=n_jobs,
    )
    _finish(run_select(run))


@app.command()
def paths(
    config: ConfigOpt = None,
    data: DataOpt = None,
    labels_col: LabelsColOpt = None,
    algorithm: AlgorithmOpt = None,
    variant: VariantOpt = None,
    kmax: KmaxOpt = None,
    d: DOpt = None,
    omega: OmegaOpt = None,
    noise: NoiseOpt = None,
    grid_m: GridMOpt = None,
    eps_max: EpsMaxOpt = None,
    measure: MeasureOpt = None,
    seed: SeedOpt = None,
    out: OutOpt = None,
    emit: EmitOpt = None,
    n_jobs: JobsOpt = None,
    verbose: VerboseOpt = False,
) -> None:
    """Write Stab_B, Stab_W and Stadion paths without selecting K."""
    _configure_logging(verbose)
    run = _run_config(
        config, data=data, labels_col=labels_col, algorithm=algorithm, variant=variant, kmax=kmax, d=d,
        omega=omega, noise=noise, grid_m=grid_m, eps_max=eps_max, measure=measure, seed=seed,
        out=out, emit=emit, n_jobs=n_jobs,
    )
    _finish(run_paths(run))


@app.command()
def benchmark(
    config: ConfigOpt = None,
    data: DataOpt = None,
    labels_col: LabelsColOpt = None,
    algorithm: AlgorithmOpt = None,
    variant: VariantOpt = None,
    kmax: KmaxOpt = None,
    d: DOpt = None,
    omega: OmegaOpt = None,
    noise: NoiseOpt = None,
    grid_m: GridMOpt = None,
    eps_max: EpsMaxOpt = None,
    measure: MeasureOpt = None,
    agg: AggOpt = None,
    seed: SeedOpt = None,
    out: OutOpt = None,
    n_jobs: JobsOpt = None,
    verbose: VerboseOpt = False,
) -> None:
    """Compare Stadion and validity indices on a directory of labeled CSV files."""
    _configure_logging(verbose)
    run = _run_config(
        config, data=data, labels_col=labels_col, algorithm=algorithm, variant=variant, kmax=kmax, d=d,
        omega=omega, noise=noise, grid_m=grid_m, eps_max=eps_max, measure=measure, agg=agg, seed=seed,
        out=out, n_jobs=n_jobs,
    )
    _finish(run_benchmark(run))


@app.command()
def gen(
    kind: Annotated[str, typer.Option("--kind", help="Fixture kind, e.g. gaussian_blobs or uniform_cube")],
    out: Annotated[Path, typer.Option("--out", "-o", help="Destination CSV file")],
    n: Annotated[Optional[int], typer.Option("--n", help="Number of samples")] = None,
    p: Annotated[Optional[int], typer.Option("--p", help="Number of features")] = None,
    k: Annotated[Optional[int], typer.Option("--k", help="Number of blobs (gaussian_blobs)")] = None,
    separation: Annotated[Optional[float], typer.Option("--separation", help="Distance between neighbouring blobs")] = None,
    scale: Annotated[Optional[float], typer.Option("--scale", help="Scale of the fixture")] = None,
    seed: Annotated[int, typer.Option("--seed", help="Master seed")] = 0,
    verbose: VerboseOpt = False,
) -> None:
    """Write a synthetic labeled fixture (labels in the last column)."""
    _configure_logging(verbose)
    _finish(
        run_gen(
            out, seed, kind=kind, n_samples=n, n_features=p, n_clusters=k, separation=separation, scale=scale
        )
    )


def main() -> None:
    """Entry point of the ``stadion`` console script."""
    app()


if __name__ == "__main__":
    main()
