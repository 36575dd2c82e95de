"""Point-level mixtures of fixed sampling distributions.

A :class:`~vrmix.models.ComponentSet` holds k distributions over n atoms with
the uniform distribution always in the last row. Weights live in the
restricted simplex, so every atom keeps probability at least gamma/n.
"""

import csv
import logging
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from scipy.spatial.distance import cdist

from .config import ROW_SUM_TOL
from .exceptions import InvalidInputError
from .models import ComponentSet, MixtureWeights

logger = logging.getLogger(__name__)

WeightsLike = Union[MixtureWeights, np.ndarray]


def as_weight_vector(w: WeightsLike, k: int) -> np.ndarray:
    vec = np.asarray(w.w if isinstance(w, MixtureWeights) else w, dtype=float)
    if vec.shape != (k,):
        raise InvalidInputError(f"Expected {k} mixture weights, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)) or np.any(vec < 0.0):
        raise InvalidInputError("Mixture weights must be finite and nonnegative")
    return vec


def _normalize_rows(rows: np.ndarray) -> np.ndarray:
    """Validate approximately stochastic rows and renormalize them exactly."""
    if not np.all(np.isfinite(rows)):
        raise InvalidInputError("Component rows contain non-finite entries")
    if np.any(rows < 0.0):
        raise InvalidInputError("Component rows contain negative entries")
    sums = rows.sum(axis=1)
    if np.any(sums <= 0.0):
        bad = int(np.nonzero(sums <= 0.0)[0][0])
        raise InvalidInputError(f"Component row {bad} sums to zero")
    off = np.abs(sums - 1.0) > ROW_SUM_TOL
    if np.any(off):
        bad = int(np.nonzero(off)[0][0])
        raise InvalidInputError(f"Component row {bad} sums to {sums[bad]:.8g}, expected 1")
    return rows / sums[:, None]


def _component_set(p: np.ndarray, effective_round: int = 0) -> ComponentSet:
    n = p.shape[1]
    return ComponentSet(p=p, c=float(n * p.max()), effective_round=effective_round)


def attach_uniform(raw_components: np.ndarray, n: Optional[int] = None) -> ComponentSet:
    """Append the uniform distribution to (k-1) x n row-stochastic rows.

    ``n`` is only needed when ``raw_components`` has no rows.
    """
    raw = np.asarray(raw_components, dtype=float)
    if raw.size == 0:
        if n is None:
            n = raw.shape[1] if raw.ndim == 2 and raw.shape[1] > 0 else None
        if n is None or n < 1:
            raise InvalidInputError("Number of atoms is required for an empty component list")
        raw = np.zeros((0, n))
    if raw.ndim == 1:
        raw = raw[None, :]
    if raw.ndim != 2:
        raise InvalidInputError(f"Components must be a matrix, got {raw.ndim} dimensions")
    if n is not None and raw.shape[1] != n:
        raise InvalidInputError(f"Components have {raw.shape[1]} atoms, expected {n}")

    n_atoms = raw.shape[1]
    rows = _normalize_rows(raw) if raw.shape[0] else raw
    uniform = np.full((1, n_atoms), 1.0 / n_atoms)
    cs = _component_set(np.vstack([rows, uniform]))
    logger.debug(f"Built component set with k={cs.k}, n={cs.n}, c={cs.c:.4g}")
    return cs


def mixture_probs(cs: ComponentSet, w: WeightsLike) -> np.ndarray:
    """Mixture probability w^T p(i) of every atom."""
    return as_weight_vector(w, cs.k) @ cs.p


def mixture_prob(cs: ComponentSet, w: WeightsLike, i: int) -> float:
    if not 0 <= i < cs.n:
        raise InvalidInputError(f"Atom index {i} out of range [0, {cs.n})")
    return float(as_weight_vector(w, cs.k) @ cs.p[:, i])


def importance_weights(cs: ComponentSet, q: np.ndarray) -> np.ndarray:
    """r = (1/n) / q; exactly 1 wherever q equals the uniform mass."""
    return (1.0 / cs.n) / q


def sample_atoms(
    cs: ComponentSet, w: WeightsLike, rng: np.random.Generator, size: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Draw ``size`` atoms independently from the mixture.

    Each draw picks a component from ``w`` and then an atom from that
    component's cumulative table. Returns the atom indices and their
    importance weights r = 1/(n w^T p(i)).
    """
    vec = as_weight_vector(w, cs.k)
    u = rng.random((size, 2))

    wc = np.cumsum(vec)
    comps = np.minimum(np.searchsorted(wc, u[:, 0] * wc[-1], side="right"), cs.k - 1)

    cdf = cs.cdf()
    atoms = np.empty(size, dtype=int)
    for j in np.unique(comps):
        mask = comps == j
        row = cdf[j]
        atoms[mask] = np.searchsorted(row, u[mask, 1] * row[-1], side="right")
    atoms = np.minimum(atoms, cs.n - 1)

    q = cs.p[:, atoms].T @ vec
    return atoms, importance_weights(cs, q)


def sample_atom(
    cs: ComponentSet, w: WeightsLike, rng: np.random.Generator
) -> Tuple[int, float]:
    atoms, r = sample_atoms(cs, w, rng, 1)
    return int(atoms[0]), float(r[0])


def build_blob_components(
    points: np.ndarray,
    blob_ids: np.ndarray,
    eps_mass: float,
    blob_count: Optional[int] = None,
) -> ComponentSet:
    """One component per blob: mass 1 - eps_mass spread over the blob's members,
    eps_mass spread over everything else. Uniform component appended."""
    if not 0.0 < eps_mass < 1.0:
        raise InvalidInputError(f"eps_mass must lie in (0, 1), got {eps_mass}")
    ids = np.asarray(blob_ids, dtype=int)
    n = int(np.asarray(points).shape[0])
    if ids.shape != (n,):
        raise InvalidInputError("Need exactly one blob id per point")
    count = int(ids.max()) + 1 if blob_count is None else blob_count

    rows = np.empty((count, n))
    for j in range(count):
        members = ids == j
        size = int(members.sum())
        if size == 0:
            raise InvalidInputError(f"Blob {j} has no points")
        if size == n:
            rows[j] = 1.0 / n
            continue
        rows[j] = np.where(members, (1.0 - eps_mass) / size, eps_mass / (n - size))
    return attach_uniform(rows)


def build_distance_components(points: np.ndarray, centers: np.ndarray) -> ComponentSet:
    """Components proportional to the distance from each center.

    Row j is 0.9 d_j(i) / ||d_j||_2 + 0.1/n, renormalized to sum to 1. A
    center at which every distance vanishes yields a uniform row.
    """
    X = np.asarray(points, dtype=float)
    C = np.atleast_2d(np.asarray(centers, dtype=float))
    if C.shape[0] < 1:
        raise InvalidInputError("At least one center is required")
    if C.shape[1] != X.shape[1]:
        raise InvalidInputError(
            f"Centers have dimension {C.shape[1]}, points have {X.shape[1]}"
        )

    n = X.shape[0]
    dist = cdist(C, X)
    norms = np.sqrt(np.sum(dist**2, axis=1))
    rows = np.full(dist.shape, 1.0 / n)
    live = norms > 0.0
    rows[live] = 0.9 * dist[live] / norms[live, None] + 0.1 / n
    if np.any(~live):
        logger.warning(f"{int((~live).sum())} center(s) coincide with every point; using uniform rows")
    rows /= rows.sum(axis=1, keepdims=True)
    return attach_uniform(rows)


def set_component_rows(cs: ComponentSet, t: int, new_rows: np.ndarray) -> ComponentSet:
    """New component set with replaced rows, effective from round ``t``.

    ``new_rows`` holds either the k-1 non-uniform rows or all k rows with a
    uniform last row.
    """
    rows = np.asarray(new_rows, dtype=float)
    if rows.ndim != 2 or rows.shape[1] != cs.n:
        raise InvalidInputError(f"Replacement rows must have {cs.n} columns")
    if rows.shape[0] == cs.k:
        if not np.allclose(rows[-1], 1.0 / cs.n, rtol=0.0, atol=ROW_SUM_TOL / cs.n):
            raise InvalidInputError("The last component must stay uniform")
        rows = rows[:-1]
    elif rows.shape[0] != cs.k - 1:
        raise InvalidInputError(f"Expected {cs.k - 1} or {cs.k} rows, got {rows.shape[0]}")

    updated = attach_uniform(rows, n=cs.n)
    logger.info(f"Component rows replaced from round {t}; c {cs.c:.4g} -> {updated.c:.4g}")
    return _component_set(updated.p, effective_round=t)


def load_components_csv(path: Path, n: Optional[int] = None) -> ComponentSet:
    """Load non-uniform components from a ``component,atom,prob`` CSV file.

    Missing (component, atom) pairs have probability zero. The number of
    atoms defaults to the largest atom index plus one.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Component file does not exist: {path}")

    entries = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["component", "atom", "prob"]:
            raise InvalidInputError(f"{path}: expected header 'component,atom,prob'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise InvalidInputError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            try:
                entries.append((int(row[0]), int(row[1]), float(row[2])))
            except ValueError as e:
                raise InvalidInputError(f"{path}:{lineno}: {e}") from e

    if not entries:
        if n is None:
            raise InvalidInputError(f"{path}: no components and no atom count given")
        return attach_uniform(np.zeros((0, n)), n=n)

    comp, atom, prob = (np.array(col) for col in zip(*entries))
    if comp.min() < 0 or atom.min() < 0:
        raise InvalidInputError(f"{path}: negative component or atom index")
    n_atoms = int(atom.max()) + 1 if n is None else n
    if atom.max() >= n_atoms:
        raise InvalidInputError(f"{path}: atom index {atom.max()} exceeds n={n_atoms}")

    rows = np.zeros((int(comp.max()) + 1, n_atoms))
    np.add.at(rows, (comp, atom), prob)
    return attach_uniform(rows, n=n_atoms)
