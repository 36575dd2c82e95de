"""Synthetic datasets and point-file ingestion."""

import csv
import logging
import math
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .exceptions import InvalidInputError

logger = logging.getLogger(__name__)


def gen_blobs(
    n: int,
    blob_count: int = 6,
    separation: float = 10.0,
    rng: Optional[np.random.Generator] = None,
    d: int = 2,
    blob_std: float = 1.0,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Balanced isotropic Gaussian blobs centred on the x-axis.

    Blob j has mean ((j - (B-1)/2) * separation, 0, ...). Points are assigned
    round-robin, so sizes differ by at most one. The left half of the blobs
    gets label -1, the right half +1.

    Returns:
        points (n x d), labels in {-1, +1}, blob id per point.
    """
    if not math.isfinite(separation) or separation < 0.0:
        raise InvalidInputError(f"Separation must be finite and nonnegative, got {separation}")
    if n < blob_count or blob_count < 1:
        raise InvalidInputError(f"Need at least one point per blob (n={n}, blobs={blob_count})")
    rng = rng if rng is not None else np.random.default_rng()

    means = np.zeros((blob_count, d))
    means[:, 0] = (np.arange(blob_count) - (blob_count - 1) / 2.0) * separation

    blob_ids = np.arange(n) % blob_count
    points = means[blob_ids] + blob_std * rng.standard_normal((n, d))
    labels = np.where(blob_ids < blob_count // 2, -1.0, 1.0)
    return points, labels, blob_ids


def gen_regression(
    n: int = 1000,
    d: int = 10,
    scaled_points: int = 10,
    scale: float = 10.0,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Linear-regression data with a few high-leverage points.

    Features are Gaussian with a random mean and variance per dimension;
    ``scaled_points`` random rows are multiplied by ``scale``. Targets are
    X w0 + N(0, 1) with w0 ~ N(0, 25 I).
    """
    if not 0 <= scaled_points <= n:
        raise InvalidInputError(f"scaled_points must lie in [0, {n}], got {scaled_points}")
    rng = rng if rng is not None else np.random.default_rng()

    means = rng.standard_normal(d)
    stds = rng.uniform(0.5, 2.0, size=d)
    X = means + stds * rng.standard_normal((n, d))
    chosen = rng.choice(n, size=scaled_points, replace=False)
    X[chosen] *= scale

    w0 = 5.0 * rng.standard_normal(d)
    y = X @ w0 + rng.standard_normal(n)
    return X, y, w0


def gen_clusters(
    n: int,
    d: int,
    n_clusters: int,
    rng: Optional[np.random.Generator] = None,
    box: float = 10.0,
    cluster_std: float = 1.0,
) -> Tuple[np.ndarray, np.ndarray]:
    """Gaussian clusters with centers uniform in [-box, box]^d and unequal sizes."""
    if n < n_clusters:
        raise InvalidInputError(f"Need at least one point per cluster (n={n}, clusters={n_clusters})")
    rng = rng if rng is not None else np.random.default_rng()

    centers = rng.uniform(-box, box, size=(n_clusters, d))
    sizes = rng.dirichlet(np.full(n_clusters, 2.0))
    labels = np.concatenate([np.arange(n_clusters), rng.choice(n_clusters, size=n - n_clusters, p=sizes)])
    rng.shuffle(labels)
    points = centers[labels] + cluster_std * rng.standard_normal((n, d))
    return points, labels


def train_test_split(
    points: np.ndarray, train_fraction: float, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    if not 0.0 < train_fraction < 1.0:
        raise InvalidInputError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    X = np.asarray(points)
    order = rng.permutation(X.shape[0])
    cut = int(round(train_fraction * X.shape[0]))
    return X[order[:cut]], X[order[cut:]]


def _parse_float(cell: str) -> float:
    return float(cell.strip())


def load_points_csv(path: Path) -> np.ndarray:
    """Read one point per row of numeric columns.

    A first row that does not parse as numbers is treated as a header.
    Errors report the 1-based row and column of the offending cell.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Points file does not exist: {path}")

    with path.open(newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and any(cell.strip() for cell in row)]
    if not rows:
        raise InvalidInputError(f"{path}: file is empty")

    start = 0
    try:
        [_parse_float(cell) for cell in rows[0]]
    except ValueError:
        logger.debug(f"{path}: skipping header row {rows[0]}")
        start = 1
    if start >= len(rows):
        raise InvalidInputError(f"{path}: no data rows after the header")

    width = len(rows[start])
    data: List[List[float]] = []
    for r_idx in range(start, len(rows)):
        row = rows[r_idx]
        if len(row) != width:
            raise InvalidInputError(
                f"{path}: row {r_idx + 1} has {len(row)} columns, expected {width}"
            )
        values = []
        for c_idx, cell in enumerate(row):
            try:
                values.append(_parse_float(cell))
            except ValueError:
                raise InvalidInputError(
                    f"{path}: non-numeric value {cell!r} at row {r_idx + 1}, column {c_idx + 1}"
                ) from None
        data.append(values)

    points = np.array(data, dtype=float)
    logger.info(f"Loaded {points.shape[0]} points with {points.shape[1]} features from {path}")
    return points
