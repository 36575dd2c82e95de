"""Regret simulations: adversaries, learners and the regret report."""

import logging
import math
import time
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import InvalidInputError
from .learners import (
    StepSchedule,
    cost_full,
    default_gamma,
    estimate_from_feedback,
    gradient_bound,
    init_state,
    ogd_round,
    ogd_step_schedule,
    ons_round,
    theory_hyperparams,
    vrm_round,
)
from .mixtures import attach_uniform, sample_atom, set_component_rows
from .models import (
    AdversaryKind,
    ComponentSet,
    FeedbackMode,
    LearnerKind,
    LearnerState,
    OracleDomain,
    OracleResult,
    RegretLedger,
    RegretSimConfig,
    RegretSimResult,
)
from .regret import fit_growth_exponent, hindsight_oracle, ons_regret_bound

logger = logging.getLogger(__name__)

DELTA_LOSSES_SQ = np.array([1.0, 4.0])
LOSS_RANGE = (0.1, 4.0)


# Instances
def delta_instance() -> ComponentSet:
    """Two atoms; a point mass on atom 0 plus the uniform component."""
    return attach_uniform(np.array([[1.0, 0.0]]))


def random_instance(n: int, k: int, rng: np.random.Generator) -> ComponentSet:
    """k - 1 Dirichlet(1/2) components over n atoms plus the uniform one."""
    if n < 1 or k < 1:
        raise InvalidInputError(f"Need n >= 1 and k >= 1, got n={n}, k={k}")
    return attach_uniform(rng.dirichlet(np.full(n, 0.5), size=k - 1), n=n)


# Adversaries
def constant_losses(base: np.ndarray, T: int) -> np.ndarray:
    return np.tile(np.asarray(base, dtype=float), (T, 1))


def piecewise_losses(n: int, T: int, phase_length: int, rng: np.random.Generator) -> np.ndarray:
    """Fresh uniform squared losses at the start of every phase."""
    phases = math.ceil(T / phase_length)
    bases = rng.uniform(*LOSS_RANGE, size=(phases, n))
    return np.repeat(bases, phase_length, axis=0)[:T]


def stochastic_losses(
    n: int,
    T: int,
    rng: np.random.Generator,
    d: int = 3,
    step_size: float = 0.1,
    radius: float = 5.0,
) -> np.ndarray:
    """Per-point gradient norms of a least-squares SGD run, squared.

    The optimizer samples uniformly from its own stream and keeps its
    parameters in a ball of ``radius``, so the sequence is oblivious to the
    learner and bounded.
    """
    X = rng.standard_normal((n, d))
    y = X @ rng.standard_normal(d) + 0.1 * rng.standard_normal(n)
    row_norms = np.linalg.norm(X, axis=1)
    theta = np.zeros(d)
    losses = np.empty((T, n))
    for t in range(1, T + 1):
        residual = X @ theta - y
        losses[t - 1] = (np.abs(residual) * row_norms) ** 2
        i = int(rng.integers(n))
        theta -= step_size / math.sqrt(t) * residual[i] * X[i]
        norm = float(np.linalg.norm(theta))
        if norm > radius:
            theta *= radius / norm
    return losses


def adversary_losses(
    cfg: RegretSimConfig, instance: str, n: int, T: int, rng: np.random.Generator
) -> np.ndarray:
    """T x n matrix of squared losses for the configured adversary."""
    if cfg.adversary == AdversaryKind.CONSTANT:
        base = DELTA_LOSSES_SQ if instance == "delta" else rng.uniform(*LOSS_RANGE, size=n)
        return constant_losses(base, T)
    if cfg.adversary == AdversaryKind.PIECEWISE:
        return piecewise_losses(n, T, cfg.phase_length or max(1, T // 4), rng)
    return stochastic_losses(n, T, rng)


# Learner rounds
def _ogd_partial_round(
    state: LearnerState,
    cs: ComponentSet,
    rng: np.random.Generator,
    losses_sq: np.ndarray,
    schedule: StepSchedule,
    ledger: RegretLedger,
) -> LearnerState:
    i, _ = sample_atom(cs, state.weights, rng)
    cost_est, g = estimate_from_feedback(cs, state.weights, i, math.sqrt(losses_sq[i]))
    ledger.append(
        state.t + 1,
        cost_est / cs.n**2,
        state.w,
        cost_true=cost_full(cs, state.w, losses_sq) / cs.n**2,
        losses_sq=losses_sq,
    )
    return ogd_round(state, cs, g, schedule)


def _oracle_value(
    segments: Sequence[Tuple[int, ComponentSet]],
    losses: np.ndarray,
    t: int,
    domain: OracleDomain,
    gamma: float,
    w0: Optional[np.ndarray] = None,
) -> OracleResult:
    """Hindsight optimum over the first t rounds with time-varying components.

    Each segment (first round, components) contributes its own column sums;
    the oracle then solves one program over the concatenated columns.
    """
    p_blocks: List[np.ndarray] = []
    s_blocks: List[np.ndarray] = []
    for idx, (start, cs) in enumerate(segments):
        end = segments[idx + 1][0] - 1 if idx + 1 < len(segments) else losses.shape[0]
        end = min(end, t)
        if end < start:
            continue
        p_blocks.append(cs.p)
        s_blocks.append(losses[start - 1 : end].sum(axis=0))
    return hindsight_oracle(
        np.hstack(p_blocks), np.hstack(s_blocks)[None, :], domain=domain, gamma=gamma, w0=w0
    )


def checkpoints(T: int, count: int) -> List[int]:
    return [int(t) for t in np.unique(np.linspace(1, T, count).round().astype(int))]


def run_regret_sim(cfg: RegretSimConfig, T: int, seed: int) -> Tuple[RegretSimResult, RegretLedger]:
    """Play one learner against one adversary for T rounds and report regret.

    Learning-rate overrides ``beta`` and ``eps`` are per unit of n^2 L, like
    the experiment hyperparameters; without them the theory schedule is used.
    Every regret figure is in cost / n^2 units.
    """
    started = time.perf_counter()
    inst_rng, loss_rng, play_rng = [
        np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3)
    ]
    if T < 3:
        raise InvalidInputError(f"Horizon must be at least 3, got {T}")

    cs = delta_instance() if cfg.instance == "delta" else random_instance(cfg.n, cfg.k, inst_rng)
    segments: List[Tuple[int, ComponentSet]] = [(1, cs)]
    if cfg.component_switch is not None and cfg.component_switch <= T:
        rows = inst_rng.dirichlet(np.full(cs.n, 0.5), size=cs.k - 1)
        segments.append((cfg.component_switch, set_component_rows(cs, cfg.component_switch, rows)))

    losses = adversary_losses(cfg, cfg.instance, cs.n, T, loss_rng)
    L = float(losses.max()) or 1.0
    n, k = cs.n, cs.k
    c = max(seg.c for _, seg in segments)

    mode = FeedbackMode.FULL if cfg.learner == LearnerKind.ONS else FeedbackMode.PARTIAL
    gamma = cfg.gamma if cfg.gamma is not None else default_gamma(k, T, c, mode)
    hyper = theory_hyperparams(cs, T, L, mode, gamma, c=c)
    scale = n**2 * L
    if cfg.beta is not None:
        hyper = hyper.model_copy(update={"beta": cfg.beta / scale})
    if cfg.eps is not None:
        hyper = hyper.model_copy(update={"eps": cfg.eps * scale**2})
    logger.info(
        f"regret-sim seed={seed} T={T} learner={cfg.learner.value} adversary={cfg.adversary.value}: "
        f"n={n}, k={k}, gamma={gamma:.4g}, L={L:.4g}"
    )

    schedule = ogd_step_schedule(gradient_bound(n, L, k, gamma, c, FeedbackMode.PARTIAL))
    state = init_state(k, hyper)
    ledger = RegretLedger()
    active = cs
    next_segment = 1
    for t in range(1, T + 1):
        if next_segment < len(segments) and t == segments[next_segment][0]:
            active = segments[next_segment][1]
            next_segment += 1
        losses_t = losses[t - 1]
        if cfg.learner == LearnerKind.ONS:
            state, _ = ons_round(state, active, losses_t, ledger)
        elif cfg.learner == LearnerKind.VRM:
            root = np.sqrt(losses_t)
            state = vrm_round(state, active, play_rng, lambda i: root[i], ledger, losses_t).state
        else:
            state = _ogd_partial_round(state, active, play_rng, losses_t, schedule, ledger)
        if t % max(1, T // 10) == 0:
            logger.debug(f"round {t}/{T}: w={np.round(state.w, 4)}")

    units = float(n**2)
    full = _oracle_value(segments, losses, T, OracleDomain.FULL, gamma)
    restricted = _oracle_value(segments, losses, T, OracleDomain.RESTRICTED, gamma, w0=full.weights)
    cumulative_true = float(np.sum(ledger.cost_true))
    cumulative_est = float(np.sum(ledger.cost_est))

    t_points = checkpoints(T, cfg.checkpoints)
    cumulative = np.cumsum(np.asarray(ledger.cost_true, dtype=float))
    curve: List[float] = []
    w0 = None
    for t in t_points:
        prefix = _oracle_value(segments, losses, t, cfg.oracle_domain, gamma, w0=w0)
        w0 = prefix.weights
        curve.append(float(cumulative[t - 1] - prefix.value / units))

    bound = None
    if cfg.learner != LearnerKind.OGD:
        bound = ons_regret_bound(n, L, k, gamma, T, c, mode)

    result = RegretSimResult(
        T=T,
        seed=seed,
        learner=cfg.learner,
        adversary=cfg.adversary,
        gamma=gamma,
        beta=hyper.beta,
        eps=hyper.eps,
        L=L,
        regret=cumulative_true - full.value / units,
        regret_est=cumulative_est - full.value / units,
        regret_restricted=cumulative_true - restricted.value / units,
        restriction_excess=(restricted.value - full.value) / units,
        oracle_value=full.value / units,
        oracle_certified=full.certified and restricted.certified,
        ons_bound=bound,
        curve_t=t_points,
        curve_regret=curve,
        final_weights=[float(x) for x in state.w],
        clip_count=state.clip_count,
        wall_time=time.perf_counter() - started,
    )
    return result, ledger


def growth_summary(results: Sequence[RegretSimResult]) -> Dict[str, object]:
    """Mean regret per horizon, the fitted log-log slope and whether regret/T falls."""
    horizons = sorted({r.T for r in results})
    means = [float(np.mean([r.regret for r in results if r.T == T])) for T in horizons]
    per_round = [m / T for m, T in zip(means, horizons)]
    summary: Dict[str, object] = {
        "horizons": horizons,
        "mean_regret": means,
        "regret_per_round": per_round,
        "per_round_decreasing": all(b < a for a, b in zip(per_round, per_round[1:])),
        "slope": None,
    }
    if len(horizons) >= 2 and all(m > 0 for m in means):
        summary["slope"] = fit_growth_exponent(horizons, means)
    elif len(horizons) >= 2:
        logger.warning("Non-positive mean regret at some horizon; slope not fitted")
    return summary
