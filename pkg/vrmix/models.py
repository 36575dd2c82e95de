"""Data models for the vrmix package."""

from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple
from uuid import UUID, uuid4

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator
from sqlmodel import Field as SQLField
from sqlmodel import SQLModel

from .config import (
    DEFAULT_TRUNCATION,
    EXPERIMENT_DEFAULTS,
    PROJ_MAX_ITERS,
    PROJ_TOL,
    TAU_FEAS,
    TUNE_BETAS,
    TUNE_GAMMAS,
)


def utcnow() -> datetime:
    return datetime.now(timezone.utc).replace(tzinfo=None)


class FeedbackMode(str, Enum):
    """Feedback regime of the learner."""

    FULL = "full"
    PARTIAL = "partial"


class SamplerKind(str, Enum):
    """How an experiment draws its points or batches."""

    VRM = "vrm"
    UNIFORM = "uniform"
    OGD = "ogd"


class ExperimentKind(str, Enum):
    """Desk-scale experiments."""

    SVM_BLOBS = "svm-blobs"
    LINREG_DPP = "linreg-dpp"
    KMEANS = "kmeans"


class AdversaryKind(str, Enum):
    """Loss sequences for regret simulations."""

    CONSTANT = "constant"
    PIECEWISE = "piecewise"
    STOCHASTIC = "stochastic"


class LearnerKind(str, Enum):
    """Online learners available to regret simulations."""

    VRM = "vrm"
    ONS = "ons"
    OGD = "ogd"


class OracleDomain(str, Enum):
    """Feasible set of the hindsight oracle."""

    FULL = "full"
    RESTRICTED = "restricted"


class RunStatus(str, Enum):
    """Run status enumeration."""

    QUEUED = "queued"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


# Numeric containers
class RestrictedSimplexSpec(BaseModel):
    """The restricted simplex: w >= 0, sum(w) = 1, w[k-1] >= gamma."""

    k: int = Field(..., ge=1, description="Dimension")
    gamma: float = Field(..., gt=0.0, le=1.0, description="Floor on the last coordinate")

    def contains(self, w: np.ndarray, tol: float = TAU_FEAS) -> bool:
        w = np.asarray(w, dtype=float)
        return bool(
            w.shape == (self.k,)
            and np.all(np.isfinite(w))
            and np.all(w >= -tol)
            and abs(w.sum() - 1.0) <= tol
            and w[-1] >= self.gamma - tol
        )


class ComponentSet(BaseModel):
    """k fixed sampling distributions over n atoms, last one uniform.

    Build instances through :mod:`vrmix.mixtures`, which validates the
    row-stochastic and uniform-last-row invariants.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    p: np.ndarray = Field(..., description="k x n row-stochastic matrix")
    c: float = Field(..., ge=1.0 - TAU_FEAS, description="n times the largest entry")
    effective_round: int = Field(default=0, ge=0, description="First round these rows apply to")

    _cdf: Optional[np.ndarray] = PrivateAttr(default=None)

    @property
    def n(self) -> int:
        return int(self.p.shape[1])

    @property
    def k(self) -> int:
        return int(self.p.shape[0])

    def cdf(self) -> np.ndarray:
        """Per-component cumulative tables, built on first use."""
        if self._cdf is None:
            self._cdf = np.cumsum(self.p, axis=1)
        return self._cdf


class MixtureWeights(BaseModel):
    """A weight vector in the restricted simplex."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    w: np.ndarray
    gamma: float = Field(..., gt=0.0, le=1.0)

    @property
    def k(self) -> int:
        return int(self.w.shape[0])

    @property
    def spec(self) -> RestrictedSimplexSpec:
        return RestrictedSimplexSpec(k=self.k, gamma=self.gamma)

    @classmethod
    def uniform(cls, k: int, gamma: float) -> "MixtureWeights":
        return cls(w=np.full(k, 1.0 / k), gamma=gamma)


class HyperParams(BaseModel):
    """Learner hyperparameters in raw cost units."""

    gamma: float = Field(..., gt=0.0, le=1.0)
    beta: float = Field(..., gt=0.0)
    eps: float = Field(..., gt=0.0)
    L: float = Field(..., gt=0.0, description="Upper bound on squared losses")
    proj_max_iters: int = Field(default=PROJ_MAX_ITERS, ge=1)
    proj_tol: float = Field(default=PROJ_TOL, ge=0.0)

    @classmethod
    def from_normalized(
        cls, gamma: float, beta: float, eps: float, L: float, n: float, **kwargs: Any
    ) -> "HyperParams":
        """Build raw hyperparameters from values given per unit of n^2 L.

        ONS is invariant when the cost is rescaled by s and (beta, eps) are
        rescaled by (1/s, s^2); with s = 1/(n^2 L) this makes beta and eps
        independent of the dataset size and the loss scale.
        """
        scale = float(n) ** 2 * L
        return cls(
            gamma=gamma, beta=beta / scale, eps=eps * scale**2, L=L, **kwargs
        )


class LearnerState(BaseModel):
    """State of an ONS/VRM/OGD learner after t rounds."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    weights: MixtureWeights
    H: np.ndarray = Field(..., description="eps I + sum of gradient outer products")
    H_inv: np.ndarray = Field(..., description="Inverse of H maintained by Sherman-Morrison")
    t: int = Field(default=0, ge=0)
    hyper: HyperParams
    clip_count: int = Field(default=0, ge=0)

    @property
    def w(self) -> np.ndarray:
        return self.weights.w

    @property
    def spec(self) -> RestrictedSimplexSpec:
        return self.weights.spec


class RegretLedger(BaseModel):
    """Per-round record of a learner's play, in regret units (cost / n^2)."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    t: List[int] = Field(default_factory=list)
    cost_est: List[float] = Field(default_factory=list)
    cost_true: List[Optional[float]] = Field(default_factory=list)
    weights: List[np.ndarray] = Field(default_factory=list)
    losses_sq: List[np.ndarray] = Field(default_factory=list)

    def __len__(self) -> int:
        return len(self.t)

    def append(
        self,
        t: int,
        cost_est: float,
        weights: np.ndarray,
        cost_true: Optional[float] = None,
        losses_sq: Optional[np.ndarray] = None,
    ) -> None:
        self.t.append(t)
        self.cost_est.append(float(cost_est))
        self.cost_true.append(None if cost_true is None else float(cost_true))
        self.weights.append(np.array(weights, dtype=float))
        if losses_sq is not None:
            self.losses_sq.append(np.array(losses_sq, dtype=float))

    def loss_matrix(self) -> np.ndarray:
        """Stored loss vectors as a T x n matrix."""
        if len(self.losses_sq) != len(self.t):
            raise ValueError("Ledger does not hold a loss vector for every round")
        return np.vstack(self.losses_sq)

    def has_true_costs(self) -> bool:
        return len(self.cost_true) > 0 and all(c is not None for c in self.cost_true)


class OracleResult(BaseModel):
    """Best fixed mixture weights in hindsight."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    weights: np.ndarray
    value: float
    certified: bool
    iterations: int
    gradient_mapping_norm: float


class DppKernel(BaseModel):
    """A k-DPP over n atoms with its eigendecomposition."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    L: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    batch_size: int = Field(..., ge=1)

    _esym: Optional[np.ndarray] = PrivateAttr(default=None)

    @property
    def n(self) -> int:
        return int(self.L.shape[0])


class SetSample(BaseModel):
    """A minibatch drawn from a mixture of set distributions."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    S: Tuple[int, ...]
    component: int
    prob_per_component: np.ndarray
    rel_probs: np.ndarray = Field(..., description="Component probabilities over the uniform set mass")
    r: float = Field(..., description="Importance weight against uniform minibatches")
    r_trunc: float = Field(..., description="Soft-truncated importance weight")


# Configuration and results
class ExperimentConfig(BaseModel):
    """Resolved configuration of one experiment."""

    model_config = ConfigDict(extra="forbid")

    experiment: ExperimentKind
    sampler: SamplerKind = SamplerKind.VRM
    seeds: List[int] = Field(default_factory=lambda: [0], min_length=1)
    n: int = Field(..., gt=0)
    d: int = Field(default=2, gt=0)
    blob_count: int = Field(default=6, gt=0)
    separation: float = Field(default=10.0, ge=0.0)
    blob_std: float = Field(default=1.0, gt=0.0)
    eps_mass: float = Field(default=0.1, gt=0.0, lt=1.0)
    scaled_points: int = Field(default=10, ge=0)
    scale: float = Field(default=10.0, gt=0.0)
    n_clusters: int = Field(default=100, gt=0)
    n_components: int = Field(default=10, gt=0)
    batch_size: int = Field(default=1, gt=0)
    epochs: int = Field(default=1, gt=0)
    iterations: Optional[int] = Field(default=None, gt=0)
    step_size: float = Field(default=0.01, gt=0.0)
    dpp_regularizers: List[float] = Field(default_factory=lambda: [1.0, 10.0, 100.0])
    trunc: Tuple[float, float] = DEFAULT_TRUNCATION
    gamma: Optional[float] = Field(default=None, gt=0.0, le=1.0)
    beta: Optional[float] = Field(default=None, gt=0.0)
    eps: Optional[float] = Field(default=None, gt=0.0)
    L: Optional[float] = Field(default=None, gt=0.0)
    eval_every: int = Field(default=100, gt=0)
    train_fraction: float = Field(default=0.8, gt=0.0, lt=1.0)
    calibration_rounds: int = Field(default=100, ge=1)
    proj_max_iters: int = Field(default=PROJ_MAX_ITERS, ge=1)
    points_path: Optional[str] = None
    uniform_only: bool = Field(default=False, description="Run the adaptive learner over the uniform component alone")
    tune: bool = Field(default=False, description="Grid-search beta and gamma on an inner split of the training data")
    tune_betas: List[float] = Field(default_factory=lambda: list(TUNE_BETAS), min_length=1)
    tune_gammas: List[float] = Field(default_factory=lambda: list(TUNE_GAMMAS), min_length=1)

    @classmethod
    def for_experiment(cls, kind: ExperimentKind, **overrides: Any) -> "ExperimentConfig":
        """Experiment defaults with ``overrides`` applied on top (None values ignored)."""
        values: Dict[str, Any] = dict(EXPERIMENT_DEFAULTS[kind.value])
        values.update({key: value for key, value in overrides.items() if value is not None})
        values["experiment"] = kind
        return cls(**values)

    @property
    def unbiased(self) -> bool:
        return self.trunc == (1.0, 0.0)

    @model_validator(mode="after")
    def _tuning_grid_valid(self) -> "ExperimentConfig":
        if any(beta <= 0.0 for beta in self.tune_betas):
            raise ValueError("Tuning betas must be positive")
        if any(not 0.0 < gamma <= 1.0 for gamma in self.tune_gammas):
            raise ValueError("Tuning gammas must lie in (0, 1]")
        return self


class RunResult(BaseModel):
    """Outcome of one experiment run (one seed, one sampler)."""

    experiment: ExperimentKind
    sampler: SamplerKind
    seed: int
    metric_name: str
    iterations: List[int]
    metric: List[float]
    final_weights: List[float]
    wall_time: float = Field(..., ge=0.0)
    learner_time: float = Field(default=0.0, ge=0.0)
    clip_count: int = Field(default=0, ge=0)
    extra: Dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _series_aligned(self) -> "RunResult":
        if len(self.iterations) != len(self.metric):
            raise ValueError("Metric series and iteration series differ in length")
        return self


class RegretSimConfig(BaseModel):
    """Resolved configuration of a regret simulation."""

    model_config = ConfigDict(extra="forbid")

    adversary: AdversaryKind = AdversaryKind.CONSTANT
    learner: LearnerKind = LearnerKind.VRM
    horizons: List[int] = Field(..., min_length=1)
    seeds: List[int] = Field(default_factory=lambda: [0], min_length=1)
    instance: str = Field(default="delta", pattern="^(delta|random)$")
    n: int = Field(default=2, gt=0)
    k: int = Field(default=2, gt=0)
    gamma: Optional[float] = Field(default=None, gt=0.0, le=1.0)
    beta: Optional[float] = Field(default=None, gt=0.0)
    eps: Optional[float] = Field(default=None, gt=0.0)
    oracle_domain: OracleDomain = OracleDomain.FULL
    checkpoints: int = Field(default=20, ge=2)
    phase_length: Optional[int] = Field(default=None, gt=0)
    component_switch: Optional[int] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _horizons_valid(self) -> "RegretSimConfig":
        if any(T < 3 for T in self.horizons):
            raise ValueError("Every horizon must be at least 3")
        return self


class RegretSimResult(BaseModel):
    """Regret report of one simulated run."""

    T: int
    seed: int
    learner: LearnerKind
    adversary: AdversaryKind
    gamma: float
    beta: float
    eps: float
    L: float
    regret: float
    regret_est: float
    regret_restricted: float
    restriction_excess: float
    oracle_value: float
    oracle_certified: bool
    ons_bound: Optional[float] = None
    curve_t: List[int]
    curve_regret: List[float]
    final_weights: List[float]
    clip_count: int = 0
    wall_time: float = 0.0


class CliConfig(BaseModel):
    """Invocation record embedded in every artifact."""

    subcommand: str
    config_file: Optional[str] = None
    output_dir: str
    seeds: List[int] = Field(..., min_length=1)
    overrides: Dict[str, Any] = Field(default_factory=dict)


# Run registry
class RunDB(SQLModel, table=True):
    """Database model for experiment and simulation runs."""

    __tablename__ = "runs"

    id: UUID = SQLField(primary_key=True, default_factory=uuid4)
    kind: str = SQLField(description="Subcommand that produced the run")
    sampler: str = SQLField(description="Sampler or learner")
    seed: int = SQLField(default=0)
    status: RunStatus = SQLField(default=RunStatus.QUEUED)
    config_json: str = SQLField(description="Fully resolved config as JSON")
    output_file: Optional[str] = SQLField(default=None, description="Artifact written by the run")
    start_time: Optional[datetime] = SQLField(default=None)
    end_time: Optional[datetime] = SQLField(default=None)
    log: Optional[str] = SQLField(default=None, description="Error/info messages")
    created_at: datetime = SQLField(default_factory=utcnow)
    updated_at: datetime = SQLField(default_factory=utcnow)


class RunCreate(BaseModel):
    """Model for registering a new run."""

    kind: str
    sampler: str
    seed: int
    config_json: str


class RunUpdate(BaseModel):
    """Model for updating a run."""

    status: Optional[RunStatus] = None
    output_file: Optional[str] = None
    start_time: Optional[datetime] = None
    end_time: Optional[datetime] = None
    log: Optional[str] = None
