"""Euclidean and H-norm projections onto the simplex and the restricted simplex."""

import itertools
import logging
from typing import Callable, List, Optional

import numpy as np

from .config import PROJ_MAX_ITERS, PROJ_TOL, TAU_FEAS
from .exceptions import InvalidInputError
from .models import RestrictedSimplexSpec

logger = logging.getLogger(__name__)


def _as_finite_vector(w: np.ndarray, name: str = "w") -> np.ndarray:
    vec = np.array(w, dtype=float).ravel()
    if vec.size == 0:
        raise InvalidInputError(f"{name} must have at least one coordinate")
    if not np.all(np.isfinite(vec)):
        raise InvalidInputError(f"{name} has non-finite coordinates")
    return vec


def proj_simplex(w: np.ndarray, z: float = 1.0) -> np.ndarray:
    """Project ``w`` onto {x : x >= 0, sum(x) = z} in Euclidean distance.

    Sort-and-threshold method: with u sorted decreasingly, rho is the last
    index where u_j - (sum_{i<=j} u_i - z) / j is positive and the result is
    max(w - lambda, 0).
    """
    vec = _as_finite_vector(w)
    if not z > 0:
        raise InvalidInputError(f"Simplex mass must be positive, got {z}")

    if vec.size == 1:
        return np.array([float(z)])

    # Feasible points are returned unchanged.
    if np.all(vec >= 0.0) and abs(vec.sum() - z) <= TAU_FEAS:
        return vec

    order = np.argsort(-vec, kind="stable")
    u = vec[order]
    css = np.cumsum(u)
    ranks = np.arange(1, vec.size + 1)
    positive = u - (css - z) / ranks > 0
    rho = int(np.nonzero(positive)[0][-1])
    lam = (css[rho] - z) / (rho + 1)
    return np.maximum(vec - lam, 0.0)


def proj_restricted(w: np.ndarray, spec: RestrictedSimplexSpec) -> np.ndarray:
    """Euclidean projection onto the restricted simplex.

    Stage one projects onto the full simplex. If the last coordinate falls
    below the floor it is pinned to gamma and the remaining coordinates are
    projected onto mass 1 - gamma.
    """
    vec = _as_finite_vector(w)
    if spec.gamma > 1.0:
        raise InvalidInputError(f"gamma must not exceed 1, got {spec.gamma}")
    if vec.size != spec.k:
        raise InvalidInputError(f"Expected {spec.k} coordinates, got {vec.size}")

    x = proj_simplex(vec, 1.0)
    if x[-1] >= spec.gamma:
        return x

    x = x.copy()
    x[-1] = spec.gamma
    if spec.k > 1:
        rest = 1.0 - spec.gamma
        x[:-1] = proj_simplex(x[:-1], rest) if rest > 0 else 0.0
    return x


def _check_metric(H: np.ndarray, k: int) -> np.ndarray:
    metric = np.array(H, dtype=float)
    if metric.shape != (k, k):
        raise InvalidInputError(f"H must be {k}x{k}, got shape {metric.shape}")
    if not np.all(np.isfinite(metric)):
        raise InvalidInputError("H has non-finite entries")
    scale = max(1.0, float(np.abs(metric).max()))
    if not np.allclose(metric, metric.T, rtol=0.0, atol=1e-8 * scale):
        raise InvalidInputError("H must be symmetric")
    try:
        np.linalg.cholesky(metric)
    except np.linalg.LinAlgError as e:
        raise InvalidInputError("H must be positive-definite") from e
    return metric


def h_norm_objective(x: np.ndarray, w: np.ndarray, H: np.ndarray) -> float:
    diff = x - w
    return float(diff @ H @ diff)


def proj_h_norm(
    w: np.ndarray,
    H: np.ndarray,
    spec: RestrictedSimplexSpec,
    max_iters: int = PROJ_MAX_ITERS,
    tol: float = PROJ_TOL,
    history: Optional[List[float]] = None,
) -> np.ndarray:
    """Approximate argmin over the restricted simplex of (x - w)^T H (x - w).

    Projected gradient descent warm-started at the Euclidean projection. The
    step 1/trace(H) never exceeds 1/lambda_max(H), so the objective is
    non-increasing across iterations and every iterate is feasible. When
    ``history`` is given, the objective of the warm start and of every
    iterate is appended to it.
    """
    vec = _as_finite_vector(w)
    metric = _check_metric(H, spec.k)

    step = 1.0 / float(np.trace(metric))
    x = proj_restricted(vec, spec)
    if history is not None:
        history.append(h_norm_objective(x, vec, metric))
    for _ in range(max_iters):
        x_next = proj_restricted(x - step * (metric @ (x - vec)), spec)
        moved = float(np.linalg.norm(x_next - x))
        x = x_next
        if history is not None:
            history.append(h_norm_objective(x, vec, metric))
        if moved < tol:
            break
    return x


def grid_minimize(
    objective: Callable[[np.ndarray], np.ndarray],
    spec: RestrictedSimplexSpec,
    step: float = 1e-3,
    coarse_step: float = 0.1,
    refine: int = 5,
) -> np.ndarray:
    """Brute-force minimizer of a convex objective over the restricted simplex.

    ``objective`` maps an (m, k) array of candidates to m values. The search
    starts on a coarse lattice and repeatedly zooms into a window around the
    incumbent, shrinking the lattice step by ``refine`` until it is at most
    ``step``. Used as an independent oracle for the projections.
    """
    k = spec.k
    if k == 1:
        return np.ones(1)

    def _complete(free: np.ndarray) -> np.ndarray:
        last = 1.0 - free.sum(axis=1, keepdims=True)
        return np.hstack([free, last])

    def _feasible(cands: np.ndarray) -> np.ndarray:
        return np.all(cands >= -1e-12, axis=1) & (cands[:, -1] >= spec.gamma - 1e-12)

    ticks = np.arange(0.0, 1.0 + 1e-12, coarse_step)
    free = np.array(list(itertools.product(ticks, repeat=k - 1)), dtype=float)
    best: Optional[np.ndarray] = None
    h = coarse_step
    while True:
        cands = _complete(free)
        cands = cands[_feasible(cands)]
        if best is not None:
            cands = np.vstack([cands, best[None, :]])
        values = objective(cands)
        best = cands[int(np.argmin(values))]
        if h <= step:
            return best
        h = max(h / refine, step)
        offsets = np.arange(-refine, refine + 1) * h
        grid = np.array(list(itertools.product(offsets, repeat=k - 1)), dtype=float)
        free = best[:-1] + grid


def grid_projection(
    w: np.ndarray,
    spec: RestrictedSimplexSpec,
    H: Optional[np.ndarray] = None,
    step: float = 1e-3,
) -> np.ndarray:
    """Grid-search oracle for the Euclidean (or H-norm) projection."""
    vec = _as_finite_vector(w)
    metric = np.eye(spec.k) if H is None else np.asarray(H, dtype=float)

    def _objective(cands: np.ndarray) -> np.ndarray:
        diff = cands - vec
        return np.einsum("ij,jk,ik->i", diff, metric, diff)

    return grid_minimize(_objective, spec, step=step)
