"""Online learners over mixture weights.

ONS with full information, VRM (ONS on single-atom feedback) and projected
OGD as a baseline. All costs here are unnormalized: divide by n^2 for
regret units.
"""

import logging
import math
import time
from typing import Callable, NamedTuple, Optional, Tuple

import numpy as np

from .config import CALIBRATION_ROUNDS, DIAMETER
from .exceptions import DomainError, InvalidInputError
from .mixtures import (
    WeightsLike,
    as_weight_vector,
    mixture_probs,
    sample_atom,
    sample_atoms,
)
from .models import (
    ComponentSet,
    FeedbackMode,
    HyperParams,
    LearnerState,
    MixtureWeights,
    RegretLedger,
    SamplerKind,
)
from .simplex import proj_h_norm, proj_restricted

logger = logging.getLogger(__name__)

LossCallback = Callable[[int], float]
StepSchedule = Callable[[int], float]


def _losses(losses_sq: np.ndarray, n: int) -> np.ndarray:
    ls = np.asarray(losses_sq, dtype=float)
    if ls.shape != (n,):
        raise InvalidInputError(f"Expected {n} squared losses, got shape {ls.shape}")
    if not np.all(np.isfinite(ls)) or np.any(ls < 0.0):
        raise InvalidInputError("Squared losses must be finite and nonnegative")
    return ls


def _probs(cs: ComponentSet, w: WeightsLike, ls: np.ndarray) -> np.ndarray:
    q = mixture_probs(cs, w)
    if np.any((q <= 0.0) & (ls > 0.0)):
        raise DomainError("Mixture assigns zero probability to an atom with positive loss")
    return q


def cost_full(cs: ComponentSet, w: WeightsLike, losses_sq: np.ndarray) -> float:
    """f(w) = sum_i l^2(i) / (w^T p(i))."""
    ls = _losses(losses_sq, cs.n)
    q = _probs(cs, w, ls)
    live = ls > 0.0
    return float(np.sum(ls[live] / q[live]))


def grad_full(cs: ComponentSet, w: WeightsLike, losses_sq: np.ndarray) -> np.ndarray:
    ls = _losses(losses_sq, cs.n)
    q = _probs(cs, w, ls)
    live = ls > 0.0
    return -(cs.p[:, live] @ (ls[live] / q[live] ** 2))


def hessian_full(cs: ComponentSet, w: WeightsLike, losses_sq: np.ndarray) -> np.ndarray:
    ls = _losses(losses_sq, cs.n)
    q = _probs(cs, w, ls)
    live = ls > 0.0
    p = cs.p[:, live]
    return 2.0 * (p * (ls[live] / q[live] ** 3)) @ p.T


class PartialCostEstimate:
    """The unbiased single-atom estimate of the cost, as a function of w.

    With q_t the probability of the sampled atom under the weights that drew
    it, the estimate is (l^2 / q_t) / (w^T p(i)). Its expectation over the
    draw equals the full cost at every w.
    """

    def __init__(self, p_col: np.ndarray, loss_sq: float, q_t: float):
        if q_t <= 0.0:
            raise DomainError("Sampled atom has zero probability")
        self.p_col = np.asarray(p_col, dtype=float)
        self.loss_sq_tilde = float(loss_sq) / q_t

    @classmethod
    def at_round(
        cls, cs: ComponentSet, w_t: WeightsLike, i: int, loss: float
    ) -> "PartialCostEstimate":
        p_col = cs.p[:, i]
        q_t = float(as_weight_vector(w_t, cs.k) @ p_col)
        return cls(p_col, float(loss) ** 2, q_t)

    def _q(self, w: np.ndarray) -> float:
        q = float(np.asarray(w, dtype=float) @ self.p_col)
        if q <= 0.0:
            raise DomainError("Mixture assigns zero probability to the sampled atom")
        return q

    def value(self, w: np.ndarray) -> float:
        return self.loss_sq_tilde / self._q(w)

    def gradient(self, w: np.ndarray) -> np.ndarray:
        return -self.loss_sq_tilde / self._q(w) ** 2 * self.p_col

    def hessian(self, w: np.ndarray) -> np.ndarray:
        return 2.0 * self.loss_sq_tilde / self._q(w) ** 3 * np.outer(self.p_col, self.p_col)


def _point_estimate(p_col: np.ndarray, w: np.ndarray, loss_sq: float) -> Tuple[float, np.ndarray]:
    q = float(w @ p_col)
    if q <= 0.0:
        raise DomainError("Sampled atom has zero probability")
    return loss_sq / q**2, -(loss_sq / q**3) * p_col


def estimate_from_feedback(
    cs: ComponentSet, w_t: WeightsLike, i: int, loss: float
) -> Tuple[float, np.ndarray]:
    """Cost and gradient estimates at w_t from the loss of the sampled atom."""
    if not 0 <= i < cs.n:
        raise InvalidInputError(f"Atom index {i} out of range [0, {cs.n})")
    if not math.isfinite(loss):
        raise InvalidInputError(f"Feedback loss must be finite, got {loss}")
    w = as_weight_vector(w_t, cs.k)
    return _point_estimate(cs.p[:, i], w, float(loss) ** 2)


def estimate_from_component_probs(
    probs: np.ndarray, w_t: WeightsLike, loss: float
) -> Tuple[float, np.ndarray]:
    """Estimates for a sample whose per-component probabilities are ``probs``.

    Used for set-valued samples, where ``probs`` are expressed relative to the
    uniform mass so the uniform component contributes exactly 1.
    """
    p_col = np.asarray(probs, dtype=float)
    if not math.isfinite(loss):
        raise InvalidInputError(f"Feedback loss must be finite, got {loss}")
    w = as_weight_vector(w_t, p_col.shape[0])
    return _point_estimate(p_col, w, float(loss) ** 2)


# Hyperparameters
def default_gamma(k: int, T: int, c: float = 1.0, mode: FeedbackMode = FeedbackMode.PARTIAL) -> float:
    """Floor on the uniform weight, clamped into (0, 1/k]."""
    if T < 3 or k < 1 or c < 1.0:
        raise InvalidInputError(f"Need T >= 3, k >= 1, c >= 1 (got T={T}, k={k}, c={c})")
    if mode == FeedbackMode.FULL:
        gamma = 3.0 * k**0.5 * T ** (-1.0 / 3.0) * math.log(T) ** (1.0 / 3.0)
    else:
        gamma = k ** (3.0 / 8.0) * c ** (1.0 / 5.0) * T ** (-1.0 / 5.0)
    return min(gamma, 1.0 / k)


def gradient_bound(
    n: int, L: float, k: int, gamma: float, c: float = 1.0, mode: FeedbackMode = FeedbackMode.FULL
) -> float:
    """Upper bound G on the gradient norm over the restricted simplex."""
    if mode == FeedbackMode.FULL:
        return n**2 * L * math.sqrt(k) / gamma**2
    return L * n**2 * c * math.sqrt(k) / gamma**3


def exp_concavity(n: int, L: float, gamma: float, mode: FeedbackMode = FeedbackMode.FULL) -> float:
    if mode == FeedbackMode.FULL:
        return 2.0 * gamma / (n**2 * L)
    return 2.0 * gamma**2 / (n**2 * L)


def default_beta_eps(
    gamma: float,
    n: int,
    L: float,
    c: float,
    k: int,
    D: float = DIAMETER,
    mode: FeedbackMode = FeedbackMode.FULL,
) -> Tuple[float, float]:
    """Standard ONS prescription beta = min(1/(4GD), alpha)/2, eps = 1/(beta D)^2."""
    if min(gamma, n, L, c, k, D) <= 0:
        raise InvalidInputError("All hyperparameter inputs must be positive")
    G = gradient_bound(n, L, k, gamma, c, mode)
    alpha = exp_concavity(n, L, gamma, mode)
    beta = 0.5 * min(1.0 / (4.0 * G * D), alpha)
    eps = 1.0 / (beta**2 * D**2)
    return beta, eps


def theory_hyperparams(
    cs: ComponentSet,
    T: int,
    L: float,
    mode: FeedbackMode = FeedbackMode.PARTIAL,
    gamma: Optional[float] = None,
    c: Optional[float] = None,
) -> HyperParams:
    """Hyperparameters from the regret-optimal schedules.

    ``c`` overrides ``cs.c``; components that change over time pass the
    largest c of any segment.
    """
    if c is None:
        c = cs.c
    if gamma is None:
        gamma = default_gamma(cs.k, T, c, mode)
    beta, eps = default_beta_eps(gamma, cs.n, L, c, cs.k, mode=mode)
    return HyperParams(gamma=gamma, beta=beta, eps=eps, L=L)


def ogd_step_schedule(G: float, D: float = DIAMETER) -> StepSchedule:
    """eta_t = D / (G sqrt(t))."""
    return lambda t: D / (G * math.sqrt(t))


# Learner state and rounds
def init_state(k: int, hyper: HyperParams) -> LearnerState:
    """w_1 uniform (projected when gamma > 1/k), H_0 = eps I."""
    w = MixtureWeights.uniform(k, hyper.gamma)
    if not w.spec.contains(w.w):
        w = MixtureWeights(w=proj_restricted(w.w, w.spec), gamma=hyper.gamma)
    return LearnerState(
        weights=w,
        H=hyper.eps * np.eye(k),
        H_inv=np.eye(k) / hyper.eps,
        hyper=hyper,
    )


def _check_gradient(state: LearnerState, g: np.ndarray) -> np.ndarray:
    vec = np.asarray(g, dtype=float).ravel()
    if vec.shape != (state.weights.k,):
        raise InvalidInputError(f"Gradient must have {state.weights.k} coordinates")
    if not np.all(np.isfinite(vec)):
        raise InvalidInputError("Gradient has non-finite coordinates; round rejected")
    return vec


def _advance(state: LearnerState, w_next: np.ndarray, **changes: object) -> LearnerState:
    weights = MixtureWeights(w=w_next, gamma=state.weights.gamma)
    return state.model_copy(update={"weights": weights, "t": state.t + 1, **changes})


def sherman_morrison(H_inv: np.ndarray, g: np.ndarray) -> np.ndarray:
    """(H + g g^T)^{-1} from H^{-1}."""
    Hg = H_inv @ g
    updated = H_inv - np.outer(Hg, Hg) / (1.0 + g @ Hg)
    return 0.5 * (updated + updated.T)


def ons_update(state: LearnerState, g: np.ndarray) -> LearnerState:
    """One Newton step followed by the H-norm projection."""
    g = _check_gradient(state, g)
    H = state.H + np.outer(g, g)
    H_inv = sherman_morrison(state.H_inv, g)
    w_prime = state.w - (H_inv @ g) / state.hyper.beta
    w_next = proj_h_norm(
        w_prime,
        H,
        state.spec,
        max_iters=state.hyper.proj_max_iters,
        tol=state.hyper.proj_tol,
    )
    return _advance(state, w_next, H=H, H_inv=H_inv)


def ogd_round(
    state: LearnerState,
    cs: Optional[ComponentSet],
    gradient: np.ndarray,
    step_schedule: Optional[StepSchedule] = None,
) -> LearnerState:
    """Projected gradient step w - eta_t g onto the restricted simplex.

    The default schedule needs ``cs`` for the gradient bound.
    """
    g = _check_gradient(state, gradient)
    if step_schedule is None:
        if cs is None:
            raise InvalidInputError("OGD needs a component set or an explicit step schedule")
        hyper = state.hyper
        step_schedule = ogd_step_schedule(gradient_bound(cs.n, hyper.L, cs.k, hyper.gamma, cs.c))
    eta = step_schedule(state.t + 1)
    return _advance(state, proj_restricted(state.w - eta * g, state.spec))


def ons_round(
    state: LearnerState,
    cs: ComponentSet,
    losses_sq: np.ndarray,
    ledger: Optional[RegretLedger] = None,
) -> Tuple[LearnerState, float]:
    """Full-information round: play w_t, observe every loss, update."""
    cost = cost_full(cs, state.w, losses_sq)
    g = grad_full(cs, state.w, losses_sq)
    if ledger is not None:
        scaled = cost / cs.n**2
        ledger.append(state.t + 1, scaled, state.w, cost_true=scaled, losses_sq=losses_sq)
    return ons_update(state, g), cost


class RoundOutcome(NamedTuple):
    """Result of one partial-feedback round."""

    state: LearnerState
    atom: int
    r: float
    cost_est: float


def clip_loss(loss: float, L: float, clip_count: int = 0) -> Tuple[float, int]:
    """Clip a loss to sqrt(L); returns the loss and the updated clip counter."""
    if not math.isfinite(loss):
        raise InvalidInputError(f"Feedback loss must be finite, got {loss}")
    loss = abs(float(loss))
    if loss**2 <= L:
        return loss, clip_count
    if clip_count == 0:
        logger.warning(f"Feedback loss {loss:.4g} exceeds sqrt(L)={math.sqrt(L):.4g}; clipping")
    return math.sqrt(L), clip_count + 1


def vrm_round(
    state: LearnerState,
    cs: ComponentSet,
    rng: np.random.Generator,
    loss_callback: LossCallback,
    ledger: Optional[RegretLedger] = None,
    losses_sq: Optional[np.ndarray] = None,
) -> RoundOutcome:
    """Sample an atom, receive its loss and take an ONS step on the estimate.

    When the caller knows the whole loss vector (simulations) it may pass
    ``losses_sq`` so the ledger also records the true cost.
    """
    i, r = sample_atom(cs, state.weights, rng)
    loss, clips = clip_loss(loss_callback(i), state.hyper.L, state.clip_count)
    cost_est, g = estimate_from_feedback(cs, state.weights, i, loss)

    if ledger is not None:
        cost_true = None if losses_sq is None else cost_full(cs, state.w, losses_sq) / cs.n**2
        ledger.append(state.t + 1, cost_est / cs.n**2, state.w, cost_true=cost_true, losses_sq=losses_sq)

    new_state = ons_update(state, g)
    if clips != state.clip_count:
        new_state = new_state.model_copy(update={"clip_count": clips})
    logger.debug(f"round {new_state.t}: atom={i} r={r:.4g} cost_est={cost_est:.4g}")
    return RoundOutcome(new_state, i, r, cost_est)


def calibrate_loss_bound(
    cs: ComponentSet,
    rng: np.random.Generator,
    loss_callback: LossCallback,
    rounds: int = CALIBRATION_ROUNDS,
) -> float:
    """Running max of l^2 over uniformly sampled atoms; no learner updates."""
    uniform = np.zeros(cs.k)
    uniform[-1] = 1.0
    L = 0.0
    for _ in range(rounds):
        i, _ = sample_atom(cs, uniform, rng)
        L = max(L, float(loss_callback(i)) ** 2)
    if L <= 0.0:
        logger.warning("All calibration losses were zero; using L=1")
        return 1.0
    logger.info(f"Calibrated loss bound L={L:.4g} over {rounds} rounds")
    return L


class AdaptiveSampler:
    """A mixture sampler whose weights are driven by an online learner.

    ``kind`` selects ONS (vrm), projected OGD (ogd) or no learning at all
    (uniform). Feedback for a batch is credited through one update using the
    average of the per-sample estimates. ``probs`` columns are the
    per-component probabilities of each sample in the units the hyperparameters
    were built for.
    """

    def __init__(
        self,
        k: int,
        hyper: HyperParams,
        kind: SamplerKind = SamplerKind.VRM,
        cs: Optional[ComponentSet] = None,
        ogd_schedule: Optional[StepSchedule] = None,
    ):
        self.kind = kind
        self.cs = cs
        self.state = init_state(k, hyper)
        self.ogd_schedule = ogd_schedule
        self.learner_time = 0.0

    @property
    def weights(self) -> MixtureWeights:
        return self.state.weights

    @property
    def clip_count(self) -> int:
        return self.state.clip_count

    def draw(self, rng: np.random.Generator, size: int = 1) -> Tuple[np.ndarray, np.ndarray]:
        if self.cs is None:
            raise InvalidInputError("This sampler has no point-level component set")
        return sample_atoms(self.cs, self.state.weights, rng, size)

    def update(self, probs: np.ndarray, losses: np.ndarray) -> float:
        """Feed back the losses of one batch; returns the averaged cost estimate."""
        if self.kind == SamplerKind.UNIFORM:
            return 0.0

        started = time.perf_counter()
        cols = np.atleast_2d(np.asarray(probs, dtype=float))
        loss_vec = np.atleast_1d(np.asarray(losses, dtype=float))
        if cols.shape[1] != loss_vec.shape[0]:
            raise InvalidInputError("Need one probability column per loss")

        w = self.state.w
        clips = self.state.clip_count
        cost_sum = 0.0
        grad_sum = np.zeros_like(w)
        for j in range(loss_vec.shape[0]):
            loss, clips = clip_loss(loss_vec[j], self.state.hyper.L, clips)
            cost, grad = _point_estimate(cols[:, j], w, loss**2)
            cost_sum += cost
            grad_sum += grad
        m = loss_vec.shape[0]

        if self.kind == SamplerKind.OGD:
            state = ogd_round(self.state, self.cs, grad_sum / m, self.ogd_schedule)
        else:
            state = ons_update(self.state, grad_sum / m)
        self.state = state.model_copy(update={"clip_count": clips})
        self.learner_time += time.perf_counter() - started
        return cost_sum / m
