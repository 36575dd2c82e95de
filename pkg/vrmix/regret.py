"""Hindsight oracle, regret curves and regret bounds."""

import csv
import logging
import math
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy import stats

from .config import DIAMETER, ORACLE_MAX_ITERS, ORACLE_TOL, ORACLE_WEIGHT_FLOOR
from .exceptions import InvalidInputError
from .learners import exp_concavity, gradient_bound
from .models import (
    ComponentSet,
    FeedbackMode,
    OracleDomain,
    OracleResult,
    RegretLedger,
    RestrictedSimplexSpec,
)
from .simplex import proj_restricted, proj_simplex

logger = logging.getLogger(__name__)

ComponentsLike = Union[ComponentSet, np.ndarray]


def _component_matrix(cs: ComponentsLike) -> np.ndarray:
    p = cs.p if isinstance(cs, ComponentSet) else np.asarray(cs, dtype=float)
    if p.ndim != 2:
        raise InvalidInputError("Component matrix must be two-dimensional")
    return p


def hindsight_oracle(
    cs: ComponentsLike,
    loss_sq_matrix: np.ndarray,
    domain: OracleDomain = OracleDomain.FULL,
    gamma: Optional[float] = None,
    iters: int = ORACLE_MAX_ITERS,
    tol: float = ORACLE_TOL,
    w0: Optional[np.ndarray] = None,
) -> OracleResult:
    """Best fixed weights for the summed cost over a T x n loss matrix.

    The summed cost equals the cost of the column sums, so the problem is a
    single smooth convex program. Solved by projected gradient descent with
    backtracking; the result is certified when the gradient-mapping norm is
    at most ``tol * max(1, value)``. ``cs`` may be a ComponentSet or any raw
    k x n matrix of distributions.
    """
    p = _component_matrix(cs)
    losses = np.atleast_2d(np.asarray(loss_sq_matrix, dtype=float))
    if losses.shape[1] != p.shape[1]:
        raise InvalidInputError(f"Loss matrix has {losses.shape[1]} columns, expected {p.shape[1]}")
    if not np.all(np.isfinite(losses)) or np.any(losses < 0.0):
        raise InvalidInputError("Loss matrix must be finite and nonnegative")

    k = p.shape[0]
    if domain == OracleDomain.RESTRICTED:
        if gamma is None:
            raise InvalidInputError("The restricted oracle needs gamma")
        spec = RestrictedSimplexSpec(k=k, gamma=gamma)

        def project(x: np.ndarray) -> np.ndarray:
            return proj_restricted(x, spec)

    else:

        def project(x: np.ndarray) -> np.ndarray:
            return proj_simplex(x, 1.0)

    s = losses.sum(axis=0)
    live = s > 0.0
    s, p = s[live], p[:, live]

    def value(x: np.ndarray) -> float:
        q = np.maximum(x @ p, ORACLE_WEIGHT_FLOOR)
        return float(np.sum(s / q))

    def gradient(x: np.ndarray) -> np.ndarray:
        q = np.maximum(x @ p, ORACLE_WEIGHT_FLOOR)
        return -(p @ (s / q**2))

    w = project(np.full(k, 1.0 / k) if w0 is None else np.asarray(w0, dtype=float))
    if not np.any(live):
        return OracleResult(weights=w, value=0.0, certified=True, iterations=0, gradient_mapping_norm=0.0)

    F = value(w)
    step = 1.0 / max(1.0, float(np.linalg.norm(gradient(w))))
    gm_norm = math.inf
    iteration = 0
    for iteration in range(1, iters + 1):
        g = gradient(w)
        while True:
            w_new = project(w - step * g)
            diff = w_new - w
            F_new = value(w_new)
            if F_new <= F + g @ diff + (diff @ diff) / (2.0 * step) or step < 1e-300:
                break
            step *= 0.5
        gm_norm = float(np.linalg.norm(diff)) / step
        w, F = w_new, F_new
        if gm_norm <= tol * max(1.0, F):
            break
        step *= 1.5

    certified = gm_norm <= tol * max(1.0, F)
    if not certified:
        logger.warning(
            f"Hindsight oracle not certified after {iteration} iterations "
            f"(gradient mapping {gm_norm:.3g}, value {F:.6g})"
        )
    return OracleResult(
        weights=w,
        value=F,
        certified=certified,
        iterations=iteration,
        gradient_mapping_norm=gm_norm,
    )


def oracle_prefix_values(
    cs: ComponentSet,
    loss_sq_matrix: np.ndarray,
    t_points: Sequence[int],
    domain: OracleDomain = OracleDomain.FULL,
    gamma: Optional[float] = None,
) -> np.ndarray:
    """Optimal cumulative cost of every prefix ``[:t]``, in regret units (cost / n^2)."""
    losses = np.asarray(loss_sq_matrix, dtype=float)
    values = np.empty(len(t_points))
    w0 = None
    for idx, t in enumerate(t_points):
        if not 1 <= t <= losses.shape[0]:
            raise InvalidInputError(f"Prefix length {t} outside [1, {losses.shape[0]}]")
        result = hindsight_oracle(cs, losses[:t], domain=domain, gamma=gamma, w0=w0)
        values[idx] = result.value / cs.n**2
        w0 = result.weights
    return values


def regret_curve(
    ledger: RegretLedger,
    oracle_value_per_prefix: Sequence[float],
    t_points: Optional[Sequence[int]] = None,
    use_estimates: bool = False,
) -> np.ndarray:
    """Regret_t = sum_{s<=t} cost_s - oracle_t at each requested prefix.

    Without ``t_points`` the oracle values must cover every round. Costs are
    the true ones when the ledger holds them, estimates otherwise (or when
    ``use_estimates`` is set).
    """
    if use_estimates or not ledger.has_true_costs():
        costs = np.asarray(ledger.cost_est, dtype=float)
    else:
        costs = np.asarray(ledger.cost_true, dtype=float)
    cumulative = np.cumsum(costs)
    oracle = np.asarray(oracle_value_per_prefix, dtype=float)

    if t_points is None:
        if oracle.shape[0] != cumulative.shape[0]:
            raise InvalidInputError(
                f"Oracle covers {oracle.shape[0]} prefixes, ledger has {cumulative.shape[0]} rounds"
            )
        return cumulative - oracle

    idx = np.asarray(t_points, dtype=int)
    if idx.shape[0] != oracle.shape[0]:
        raise InvalidInputError("Need one oracle value per prefix length")
    if np.any(idx < 1) or np.any(idx > cumulative.shape[0]):
        raise InvalidInputError("Prefix lengths must lie within the ledger")
    return cumulative[idx - 1] - oracle


def fit_growth_exponent(horizons: Sequence[float], regrets: Sequence[float]) -> float:
    """Least-squares slope of log(regret) against log(T)."""
    T = np.asarray(horizons, dtype=float)
    R = np.asarray(regrets, dtype=float)
    if T.shape != R.shape or T.shape[0] < 2:
        raise InvalidInputError("Need at least two (T, regret) pairs")
    if np.any(T <= 0) or np.any(R <= 0):
        raise InvalidInputError("Growth exponent needs positive horizons and regrets")
    return float(stats.linregress(np.log(T), np.log(R)).slope)


def ons_regret_bound(
    n: int,
    L: float,
    k: int,
    gamma: float,
    T: int,
    c: float = 1.0,
    mode: FeedbackMode = FeedbackMode.FULL,
    D: float = DIAMETER,
) -> float:
    """5 (1/alpha + G D) k log T, reported in regret units."""
    alpha = exp_concavity(n, L, gamma, mode)
    G = gradient_bound(n, L, k, gamma, c, mode)
    return 5.0 * (1.0 / alpha + G * D) * k * math.log(T) / n**2


def restriction_excess_bound(L: float, gamma: float, T: int) -> float:
    """Price of playing in the restricted simplex: gamma L T in regret units."""
    return gamma * L * T


def regret_envelope(L: float, k: int, T: int, mode: FeedbackMode = FeedbackMode.FULL, c: float = 1.0) -> float:
    """Order of the regret guarantee with the scheduled gamma (constants dropped in partial mode)."""
    if mode == FeedbackMode.FULL:
        return 5.0 * L * k**0.5 * T ** (2.0 / 3.0) * math.log(T) ** (1.0 / 3.0)
    return L * k ** (3.0 / 8.0) * c ** (1.0 / 5.0) * T ** (4.0 / 5.0)


def export_ledger_csv(ledger: RegretLedger, path: Path) -> Path:
    """Write ``t, cost_est, cost_true, w_1..w_k``; cost_true is blank when unknown."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    k = ledger.weights[0].shape[0] if ledger.weights else 0
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "cost_est", "cost_true"] + [f"w_{j + 1}" for j in range(k)])
        for t, est, true, w in zip(ledger.t, ledger.cost_est, ledger.cost_true, ledger.weights):
            writer.writerow([t, repr(est), "" if true is None else repr(true)] + [repr(float(x)) for x in w])
    return path
