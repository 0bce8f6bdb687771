"""Data ingestion, standardization and synthetic fixtures.

``load_csv`` and ``write_csv`` move numeric matrices (optionally with a
ground-truth label column) between disk and ``Dataset`` models,
``standardize`` z-scores every column with the unbiased standard deviation,
and ``gen_synthetic`` builds the labeled fixtures used for model-selection
scenarios: Gaussian blobs, non-clusterable cubes, Gaussians and sphere
shells, two correlated Gaussians, a three-cluster layout with two close
clusters, and a four-cluster corner layout.
"""

from __future__ import annotations

import logging
import re
from pathlib import Path

import numpy as np
import pandas as pd

from .exceptions import DataError, ParseError
from .models import Dataset, GeneratorSpec, LabeledDataset, Partition, Scaling

logger = logging.getLogger(__name__)

_PANDAS_LINE_PATTERN = re.compile(r"line (\d+)")


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def load_csv(
    path: str | Path,
    *,
    delimiter: str = ",",
    header: bool = False,
    label_col: int | None = None,
) -> Dataset | LabeledDataset:
    """Load a numeric CSV file as a raw (unscaled) dataset.

    Args:
        path: File to read (UTF-8).
        delimiter: Field separator (default comma).
        header: Whether the first line is a header row to skip.
        label_col: Zero-based index of a ground-truth label column (negative
            values count from the end), or None.

    Returns:
        A ``Dataset``, or a ``LabeledDataset`` when ``label_col`` is given.
        Labels are re-encoded to 0..K*-1 in order of first appearance.

    Raises:
        DataError: Missing or empty file, label column out of range.
        ParseError: Ragged rows or non-numeric cells (row and column named).
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"Input file not found: {path}", error_code="FILE_NOT_FOUND", details={"path": str(path)})

    first_row = 2 if header else 1
    try:
        frame = pd.read_csv(
            path,
            sep=delimiter,
            header=0 if header else None,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=True,
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError:
        raise DataError(f"Input file is empty: {path}", error_code="EMPTY_FILE", details={"path": str(path)}) from None
    except pd.errors.ParserError as exc:
        match = _PANDAS_LINE_PATTERN.search(str(exc))
        row = int(match.group(1)) if match else None
        raise ParseError(f"Ragged row in {path}: {exc}", row=row, details={"path": str(path)}) from exc

    if frame.shape[0] == 0:
        raise DataError(f"Input file has no data rows: {path}", error_code="EMPTY_FILE", details={"path": str(path)})

    missing = frame.isna().to_numpy()
    if missing.any():
        position = int(np.argwhere(missing)[0][0])
        raise ParseError(
            f"Ragged row {position + first_row} in {path}: expected {frame.shape[1]} fields",
            row=position + first_row,
            details={"path": str(path)},
        )

    n_columns = frame.shape[1]
    if label_col is not None and -n_columns <= label_col < 0:
        label_col += n_columns
    if label_col is not None and not 0 <= label_col < n_columns:
        raise DataError(
            f"Label column {label_col} out of range for {n_columns} columns",
            error_code="LABEL_COLUMN_OUT_OF_RANGE",
            details={"path": str(path), "label_col": label_col, "n_columns": n_columns},
        )
    feature_cols = [c for c in range(n_columns) if c != label_col]
    if not feature_cols:
        raise DataError(f"No feature columns left in {path}", details={"path": str(path)})

    values = np.empty((frame.shape[0], len(feature_cols)), dtype=np.float64)
    for out_col, col in enumerate(feature_cols):
        raw = frame.iloc[:, col].str.strip()
        try:
            parsed = raw.to_numpy(dtype=np.float64)
        except ValueError:
            parsed = pd.to_numeric(raw, errors="coerce").to_numpy(dtype=np.float64)
        bad = ~np.isfinite(parsed)
        if bad.any():
            position = int(np.flatnonzero(bad)[0])
            raise ParseError(
                f"Cannot parse {raw.iloc[position]!r} as a finite number at row {position + first_row}, "
                f"column {col} of {path}",
                row=position + first_row,
                column=col,
                details={"path": str(path)},
            )
        values[:, out_col] = parsed

    data = Dataset(values=values, name=path.stem)
    logger.info("Loaded %s: N=%d, p=%d", path, data.n_samples, data.n_features)
    if label_col is None:
        return data
    labels = Partition.from_labels(frame.iloc[:, label_col].str.strip().to_numpy())
    logger.debug("Ground truth in column %d has K*=%d", label_col, labels.k)
    return LabeledDataset(data=data, labels=labels)


def write_csv(
    data: Dataset,
    path: str | Path,
    *,
    labels: Partition | None = None,
    delimiter: str = ",",
) -> Path:
    """Write values (and labels as the last column) with round-trip float precision."""
    path = Path(path)
    frame = pd.DataFrame(data.values)
    if labels is not None:
        if labels.n_samples != data.n_samples:
            raise DataError("labels length does not match the dataset", details={"n": data.n_samples})
        frame[data.n_features] = labels.labels
    frame.to_csv(path, sep=delimiter, header=False, index=False, float_format="%.17g", encoding="utf-8")
    logger.debug("Wrote %d rows to %s", data.n_samples, path)
    return path


# ---------------------------------------------------------------------------
# Scaling
# ---------------------------------------------------------------------------


def standardize(data: Dataset) -> Dataset:
    """Z-score every column with the sample (N-1) standard deviation.

    Constant columns (every value identical, or N=1) become all-zeros and are listed in
    ``zero_variance``; the stored means and standard deviations (1.0 for
    constant columns) allow ``unstandardize``.

    Raises:
        DataError: If the dataset is already standardized.
    """
    if data.scaling == Scaling.STANDARDIZED:
        raise DataError(
            "Dataset is already standardized; refusing to scale twice",
            error_code="ALREADY_STANDARDIZED",
            details={"name": data.name},
        )
    values = data.values
    means = values.mean(axis=0)
    constant = np.ptp(values, axis=0) == 0.0
    stds = values.std(axis=0, ddof=1) if data.n_samples > 1 else np.zeros(data.n_features)
    safe_stds = np.where(constant, 1.0, stds)
    scaled = (values - means) / safe_stds
    scaled[:, constant] = 0.0

    zero_variance = tuple(int(i) for i in np.flatnonzero(constant))
    if zero_variance:
        logger.warning("Zero-variance columns mapped to zeros: %s", list(zero_variance))
    return Dataset(
        values=scaled,
        scaling=Scaling.STANDARDIZED,
        means=means,
        stds=safe_stds,
        zero_variance=zero_variance,
        name=data.name,
    )


def unstandardize(data: Dataset) -> Dataset:
    """Map a standardized dataset back to its original units."""
    if data.scaling != Scaling.STANDARDIZED or data.means is None or data.stds is None:
        raise DataError("Dataset is not standardized", error_code="NOT_STANDARDIZED", details={"name": data.name})
    values = data.values * data.stds + data.means
    return Dataset(values=values, name=data.name)


# ---------------------------------------------------------------------------
# Synthetic fixtures
# ---------------------------------------------------------------------------


def _balanced_sizes(n: int, k: int) -> list[int]:
    base, extra = divmod(n, k)
    return [base + (1 if i < extra else 0) for i in range(k)]


def _default_centers(k: int, p: int, separation: float) -> np.ndarray:
    """Centers on a regular polygon (or a line when p=1) with neighbour distance ``separation``."""
    centers = np.zeros((k, p))
    if k == 1:
        return centers
    if p == 1:
        centers[:, 0] = separation * np.arange(k)
        return centers
    radius = separation / (2.0 * np.sin(np.pi / k))
    angles = 2.0 * np.pi * np.arange(k) / k
    centers[:, 0] = radius * np.cos(angles)
    centers[:, 1] = radius * np.sin(angles)
    return centers


def _mixture(
    rng: np.random.Generator,
    centers: np.ndarray,
    stds: np.ndarray,
    sizes: list[int],
) -> tuple[np.ndarray, np.ndarray]:
    """Isotropic Gaussian components; rows are returned shuffled."""
    parts = [rng.normal(loc=c, scale=s, size=(n, centers.shape[1])) for c, s, n in zip(centers, stds, sizes, strict=True)]
    values = np.vstack(parts)
    labels = np.repeat(np.arange(len(sizes)), sizes)
    order = rng.permutation(values.shape[0])
    return values[order], labels[order]


def _correlated_gaussians(rng: np.random.Generator, n: int, scale: float) -> tuple[np.ndarray, np.ndarray]:
    """Two parallel elongated Gaussians along the diagonal, offset across it."""
    sizes = _balanced_sizes(n, 2)
    major, minor, offset = 1.0 * scale, 0.25 * scale, 1.0 * scale
    rotation = np.array([[1.0, 1.0], [-1.0, 1.0]]) / np.sqrt(2.0)
    parts, labels = [], []
    for label, (size, shift) in enumerate(zip(sizes, (-offset, offset), strict=True)):
        local = rng.normal(size=(size, 2)) * np.array([major, minor])
        local[:, 1] += shift
        parts.append(local @ rotation)
        labels.append(np.full(size, label))
    values = np.vstack(parts)
    label_vec = np.concatenate(labels)
    order = rng.permutation(n)
    return values[order], label_vec[order]


def gen_synthetic(spec: GeneratorSpec, seed: int) -> LabeledDataset:
    """Generate a labeled fixture; a pure function of ``(spec, seed)``.

    Non-clusterable kinds (``uniform_cube``, ``sphere_surface``) carry a
    single ground-truth class.  A single Gaussian is ``gaussian_blobs`` with
    ``n_clusters=1``.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    n, p = spec.n_samples, spec.n_features

    if spec.kind == "gaussian_blobs":
        centers = np.array(spec.centers, dtype=np.float64) if spec.centers else _default_centers(
            spec.n_clusters, p, spec.separation
        )
        k = centers.shape[0]
        values, labels = _mixture(rng, centers, np.full(k, spec.cluster_std), _balanced_sizes(n, k))
    elif spec.kind == "uniform_cube":
        values = rng.uniform(0.0, spec.scale, size=(n, p))
        labels = np.zeros(n, dtype=np.int64)
    elif spec.kind == "sphere_surface":
        directions = rng.normal(size=(n, p))
        norms = np.linalg.norm(directions, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        radii = spec.radius + spec.thickness * (rng.uniform(size=(n, 1)) - 0.5)
        values = directions / norms * radii * spec.scale
        labels = np.zeros(n, dtype=np.int64)
    elif spec.kind == "correlated_gaussians":
        values, labels = _correlated_gaussians(rng, n, spec.scale)
    elif spec.kind == "letters_like":
        centers = np.array([[-4.0, 0.0], [3.0, 1.5], [3.0, -1.5]]) * spec.scale
        stds = np.array([0.6, 0.6, 0.6]) * spec.scale
        values, labels = _mixture(rng, centers, stds, _balanced_sizes(n, 3))
    else:  # four_clusters_corner
        centers = np.array([[0.0, 0.0], [6.0, 6.0], [6.8, 6.0], [6.0, 9.5]]) * spec.scale
        stds = np.array([1.0, 0.2, 0.2, 0.2]) * spec.scale
        n_small = max(1, round(0.1 * n))
        sizes = [n - 3 * n_small, n_small, n_small, n_small]
        if sizes[0] < 1:
            raise DataError("four_clusters_corner needs at least 4 samples", details={"n_samples": n})
        values, labels = _mixture(rng, centers, stds, sizes)

    logger.debug("Generated %s fixture: N=%d, p=%d, seed=%d", spec.kind, n, values.shape[1], seed)
    return LabeledDataset(
        data=Dataset(values=values, name=spec.kind),
        labels=Partition(labels=labels, k=int(labels.max()) + 1),
    )
