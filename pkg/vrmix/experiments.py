"""Desk-scale experiments: SVM on blobs, k-DPP regression and minibatch k-means.

Every run draws its data, its samples and its loss calibration from
independent streams derived from the seed, so the sampler choice never
changes the data a run sees. Hyperparameter tuning draws from streams of its
own and never touches those of the run.
"""

import logging
import time
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from .config import EXPERIMENT_BETA, EXPERIMENT_EPS, EXPERIMENT_GAMMA, TUNE_FRACTION
from .datasets import gen_blobs, gen_clusters, gen_regression, load_points_csv, train_test_split
from .dpp import kernel_from_points, sample_set_mixture
from .exceptions import InvalidInputError
from .learners import (
    AdaptiveSampler,
    calibrate_loss_bound,
    gradient_bound,
    ogd_step_schedule,
)
from .mixtures import attach_uniform, build_blob_components, build_distance_components
from .models import (
    ComponentSet,
    DppKernel,
    ExperimentConfig,
    ExperimentKind,
    FeedbackMode,
    HyperParams,
    RunResult,
    SamplerKind,
)

logger = logging.getLogger(__name__)

Trace = Tuple[List[int], List[float], AdaptiveSampler]
Score = Callable[[np.ndarray], float]


def _streams(seed: int, count: int) -> List[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def _tuning_seeds(seed: int, index: int) -> List[np.random.SeedSequence]:
    """Split, sampling and calibration seeds for tuning, disjoint from the run's ``index`` streams."""
    return np.random.SeedSequence(seed).spawn(index + 1)[index].spawn(3)


def _fresh(seeds: Sequence[np.random.SeedSequence]) -> List[np.random.Generator]:
    return [np.random.default_rng(s) for s in seeds]


def _hyper(cfg: ExperimentConfig, L: float, n_scale: float) -> HyperParams:
    return HyperParams.from_normalized(
        gamma=cfg.gamma if cfg.gamma is not None else EXPERIMENT_GAMMA,
        beta=cfg.beta if cfg.beta is not None else EXPERIMENT_BETA,
        eps=cfg.eps if cfg.eps is not None else EXPERIMENT_EPS,
        L=L,
        n=n_scale,
        proj_max_iters=cfg.proj_max_iters,
    )


def _sampler(
    cfg: ExperimentConfig,
    k: int,
    hyper: HyperParams,
    cs: Optional[ComponentSet],
    n_scale: float,
    c: float,
) -> AdaptiveSampler:
    schedule = None
    if cfg.sampler == SamplerKind.OGD:
        G = gradient_bound(n_scale, hyper.L, k, hyper.gamma, c, FeedbackMode.PARTIAL)
        schedule = ogd_step_schedule(G)
    return AdaptiveSampler(k, hyper, kind=cfg.sampler, cs=cs, ogd_schedule=schedule)


def _uses_mixture(cfg: ExperimentConfig) -> bool:
    return cfg.sampler != SamplerKind.UNIFORM and not cfg.uniform_only


def _uniform_components(n: int) -> ComponentSet:
    return attach_uniform(np.zeros((0, n)), n=n)


def _horizon(cfg: ExperimentConfig, n: int) -> int:
    return cfg.iterations or cfg.epochs * n // cfg.batch_size


def _is_checkpoint(t: int, T: int, every: int) -> bool:
    return t % every == 0 or t == T


def _result(
    cfg: ExperimentConfig,
    seed: int,
    metric_name: str,
    trace: Trace,
    started: float,
    **extra: float,
) -> RunResult:
    iterations, metric, sampler = trace
    if cfg.tune and _uses_mixture(cfg):
        extra.update(tuned_beta=float(cfg.beta or EXPERIMENT_BETA), tuned_gamma=float(cfg.gamma or EXPERIMENT_GAMMA))
    return RunResult(
        experiment=cfg.experiment,
        sampler=cfg.sampler,
        seed=seed,
        metric_name=metric_name,
        iterations=iterations,
        metric=metric,
        final_weights=[float(x) for x in sampler.weights.w],
        wall_time=time.perf_counter() - started,
        learner_time=sampler.learner_time,
        clip_count=sampler.clip_count,
        extra=extra,
    )


# Hyperparameter tuning
def tune_hyperparams(
    cfg: ExperimentConfig,
    validate: Callable[[ExperimentConfig], float],
    higher_is_better: bool = False,
) -> Tuple[float, float]:
    """Grid-search (beta, gamma) over ``cfg.tune_betas`` x ``cfg.tune_gammas``.

    ``validate`` trains one candidate on the inner training split and returns
    its score on the held-out part. Ties keep the earlier candidate;
    non-finite scores are skipped.
    """
    best: Optional[Tuple[float, float, float]] = None
    for beta in cfg.tune_betas:
        for gamma in cfg.tune_gammas:
            candidate = cfg.model_copy(update={"beta": beta, "gamma": gamma, "tune": False})
            score = float(validate(candidate))
            logger.debug(f"tuning beta={beta:g} gamma={gamma:g}: validation {score:.6g}")
            if not np.isfinite(score):
                continue
            if best is None or (score > best[0] if higher_is_better else score < best[0]):
                best = (score, beta, gamma)
    if best is None:
        raise InvalidInputError("No (beta, gamma) candidate produced a finite validation score")
    logger.info(f"Tuned beta={best[1]:g}, gamma={best[2]:g} (validation {best[0]:.6g})")
    return best[1], best[2]


def _tuned(
    cfg: ExperimentConfig,
    seed: int,
    index: int,
    validate: Callable[[ExperimentConfig, List[np.random.Generator]], float],
    higher_is_better: bool = False,
) -> ExperimentConfig:
    seeds = _tuning_seeds(seed, index)
    beta, gamma = tune_hyperparams(cfg, lambda candidate: validate(candidate, _fresh(seeds)), higher_is_better)
    return cfg.model_copy(update={"beta": beta, "gamma": gamma})


def _inner_split(n: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    fit, held_out = train_test_split(np.arange(n), TUNE_FRACTION, rng)
    if fit.size == 0 or held_out.size == 0:
        raise InvalidInputError(f"{n} training points are too few to hold out a validation split")
    return fit, held_out


# SVM on blobs
def _accuracy(Xb: np.ndarray, y: np.ndarray, theta: np.ndarray) -> float:
    return float(np.mean(np.sign(Xb @ theta) == y))


def _train_svm(
    cfg: ExperimentConfig,
    Xb: np.ndarray,
    y: np.ndarray,
    cs: ComponentSet,
    sample_rng: np.random.Generator,
    calib_rng: np.random.Generator,
    score: Score,
) -> Trace:
    n = Xb.shape[0]
    theta = np.zeros(Xb.shape[1])

    def subgradients(idx: np.ndarray) -> np.ndarray:
        margins = y[idx] * (Xb[idx] @ theta)
        return np.where((margins < 1.0)[:, None], -y[idx, None] * Xb[idx], 0.0)

    def loss_of(i: int) -> float:
        return float(np.linalg.norm(subgradients(np.array([i]))[0]))

    L = cfg.L if cfg.L is not None else calibrate_loss_bound(cs, calib_rng, loss_of, cfg.calibration_rounds)
    sampler = _sampler(cfg, cs.k, _hyper(cfg, L, n), cs, n, cs.c)

    T = _horizon(cfg, n)
    iterations: List[int] = []
    metric: List[float] = []
    for t in range(1, T + 1):
        atoms, r = sampler.draw(sample_rng, cfg.batch_size)
        grads = subgradients(atoms)
        theta -= cfg.step_size / np.sqrt(t) * np.mean(r[:, None] * grads, axis=0)
        sampler.update(cs.p[:, atoms], np.linalg.norm(grads, axis=1))

        if _is_checkpoint(t, T, cfg.eval_every):
            iterations.append(t)
            metric.append(score(theta))
    return iterations, metric, sampler


def run_svm_blobs(cfg: ExperimentConfig, seed: int) -> RunResult:
    """Online hinge-loss SVM with importance-weighted subgradient steps.

    The sampler's feedback for a point is the norm of its hinge subgradient.
    """
    started = time.perf_counter()
    data_rng, sample_rng, calib_rng = _streams(seed, 3)

    X, y, blob_ids = gen_blobs(cfg.n, cfg.blob_count, cfg.separation, data_rng, cfg.d, cfg.blob_std)
    n = X.shape[0]
    Xb = np.hstack([X, np.ones((n, 1))])

    if cfg.tune and _uses_mixture(cfg):

        def validate(candidate: ExperimentConfig, rngs: List[np.random.Generator]) -> float:
            split_rng, inner_sample, inner_calib = rngs
            fit, held_out = _inner_split(n, split_rng)
            inner_cs = build_blob_components(X[fit], blob_ids[fit], candidate.eps_mass, candidate.blob_count)
            _, metric, _ = _train_svm(
                candidate, Xb[fit], y[fit], inner_cs, inner_sample, inner_calib,
                lambda theta: _accuracy(Xb[held_out], y[held_out], theta),
            )
            return metric[-1] if metric else float("nan")

        cfg = _tuned(cfg, seed, 3, validate, higher_is_better=True)

    if _uses_mixture(cfg):
        cs = build_blob_components(X, blob_ids, cfg.eps_mass, cfg.blob_count)
    else:
        cs = _uniform_components(n)

    logger.info(
        f"svm-blobs seed={seed} sampler={cfg.sampler.value}: n={n}, k={cs.k}, c={cs.c:.3g}, T={_horizon(cfg, n)}"
    )
    trace = _train_svm(cfg, Xb, y, cs, sample_rng, calib_rng, lambda theta: _accuracy(Xb, y, theta))
    return _result(cfg, seed, "accuracy", trace, started, c=cs.c)


# Linear regression with k-DPP minibatches
def _calibrate_sets(
    n: int, b: int, rng: np.random.Generator, loss_of: Callable[[Sequence[int]], float], rounds: int
) -> float:
    L = max(loss_of(rng.choice(n, size=b, replace=False)) ** 2 for _ in range(rounds))
    return L if L > 0.0 else 1.0


def _mse(X: np.ndarray, y: np.ndarray, theta: np.ndarray) -> float:
    return float(np.mean((X @ theta - y) ** 2))


def _dpp_kernels(cfg: ExperimentConfig, X: np.ndarray) -> List[DppKernel]:
    if not _uses_mixture(cfg):
        return []
    return [kernel_from_points(X, lam, cfg.batch_size) for lam in cfg.dpp_regularizers]


def _train_linreg(
    cfg: ExperimentConfig,
    X: np.ndarray,
    y: np.ndarray,
    kernels: List[DppKernel],
    sample_rng: np.random.Generator,
    calib_rng: np.random.Generator,
    score: Score,
) -> Trace:
    n, b = X.shape[0], cfg.batch_size
    if b > n:
        raise InvalidInputError(f"Batch size {b} exceeds the number of points {n}")
    theta = np.zeros(X.shape[1])

    def batch_gradient(S: Sequence[int]) -> np.ndarray:
        idx = np.asarray(S, dtype=int)
        return (2.0 / b) * X[idx].T @ (X[idx] @ theta - y[idx])

    def loss_of(S: Sequence[int]) -> float:
        return float(np.linalg.norm(batch_gradient(S)))

    L = cfg.L if cfg.L is not None else _calibrate_sets(n, b, calib_rng, loss_of, cfg.calibration_rounds)
    # Set probabilities are relative to the uniform set mass, i.e. already in cost/N^2 units.
    sampler = _sampler(cfg, len(kernels) + 1, _hyper(cfg, L, 1.0), None, 1.0, 1.0)

    T = _horizon(cfg, n)
    iterations: List[int] = []
    metric: List[float] = []
    for t in range(1, T + 1):
        sample = sample_set_mixture(kernels, sampler.weights, sample_rng, cfg.trunc, n=n, batch_size=b)
        g = batch_gradient(sample.S)
        theta -= cfg.step_size / np.sqrt(t) * sample.r_trunc * g
        sampler.update(sample.rel_probs[:, None], [np.linalg.norm(g)])

        if _is_checkpoint(t, T, cfg.eval_every):
            iterations.append(t)
            metric.append(score(theta))
    return iterations, metric, sampler


def run_linreg_dpp(cfg: ExperimentConfig, seed: int) -> RunResult:
    """Minibatch SGD on least squares with batches from a k-DPP mixture.

    Steps are weighted by the soft-truncated importance weight; the sampler's
    feedback is the norm of the batch gradient.
    """
    started = time.perf_counter()
    data_rng, sample_rng, calib_rng = _streams(seed, 3)

    X, y, _ = gen_regression(cfg.n, cfg.d, cfg.scaled_points, cfg.scale, data_rng)
    n = X.shape[0]
    if cfg.batch_size > n:
        raise InvalidInputError(f"Batch size {cfg.batch_size} exceeds the number of points {n}")

    if cfg.tune and _uses_mixture(cfg):
        # Kernels depend on the points only, so every candidate shares them.
        inner: List[Tuple[np.ndarray, np.ndarray, List[DppKernel]]] = []

        def validate(candidate: ExperimentConfig, rngs: List[np.random.Generator]) -> float:
            split_rng, inner_sample, inner_calib = rngs
            if not inner:
                fit, held_out = _inner_split(n, split_rng)
                inner.append((fit, held_out, _dpp_kernels(candidate, X[fit])))
            fit, held_out, kernels = inner[0]
            _, metric, _ = _train_linreg(
                candidate, X[fit], y[fit], kernels, inner_sample, inner_calib,
                lambda theta: _mse(X[held_out], y[held_out], theta),
            )
            return metric[-1] if metric else float("nan")

        cfg = _tuned(cfg, seed, 3, validate)

    kernels = _dpp_kernels(cfg, X)
    logger.info(
        f"linreg-dpp seed={seed} sampler={cfg.sampler.value}: n={n}, k={len(kernels) + 1}, "
        f"T={_horizon(cfg, n)}, trunc={cfg.trunc}"
    )
    trace = _train_linreg(cfg, X, y, kernels, sample_rng, calib_rng, lambda theta: _mse(X, y, theta))
    return _result(cfg, seed, "mse", trace, started, unbiased=float(cfg.unbiased))


# Minibatch k-means
def kmeans_pp(X: np.ndarray, k: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """k-means++ seeding: returns the chosen centers and their row indices."""
    n = X.shape[0]
    if k > n:
        raise InvalidInputError(f"Cannot seed {k} centers from {n} points")
    indices = [int(rng.integers(n))]
    closest = np.sum((X - X[indices[0]]) ** 2, axis=1)
    for _ in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            nxt = int(rng.integers(n))
        else:
            cdf = np.cumsum(closest)
            nxt = min(int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right")), n - 1)
        indices.append(nxt)
        closest = np.minimum(closest, np.sum((X - X[nxt]) ** 2, axis=1))
    idx = np.array(indices)
    return X[idx].copy(), idx


def kmeans_loss(X: np.ndarray, centers: np.ndarray) -> float:
    """Mean squared distance to the nearest center."""
    return float(np.mean(np.min(cdist(X, centers, "sqeuclidean"), axis=1)))


def lloyd_kmeans(
    X: np.ndarray, centers: np.ndarray, tol: float = 1e-6, max_iters: int = 300
) -> np.ndarray:
    """Full-batch k-means until the relative change of the potential is below ``tol``."""
    C = np.array(centers, dtype=float)
    previous = np.inf
    for it in range(max_iters):
        d2 = cdist(X, C, "sqeuclidean")
        assign = np.argmin(d2, axis=1)
        potential = float(np.mean(d2[np.arange(X.shape[0]), assign]))
        if previous < np.inf and previous - potential <= tol * previous:
            logger.debug(f"Lloyd converged after {it} iterations, potential {potential:.6g}")
            break
        previous = potential
        for c in range(C.shape[0]):
            members = assign == c
            if np.any(members):
                C[c] = X[members].mean(axis=0)
    return C


def _kmeans_components(cfg: ExperimentConfig, train: np.ndarray, rng: np.random.Generator) -> ComponentSet:
    m = train.shape[0]
    if not _uses_mixture(cfg):
        return _uniform_components(m)
    anchors = train[rng.choice(m, size=min(cfg.n_components, m), replace=False)]
    return build_distance_components(train, anchors)


def _train_kmeans(
    cfg: ExperimentConfig,
    train: np.ndarray,
    centers0: np.ndarray,
    cs: ComponentSet,
    sample_rng: np.random.Generator,
    calib_rng: np.random.Generator,
    score: Score,
) -> Trace:
    m = train.shape[0]

    def loss_of(i: int) -> float:
        return float(np.sqrt(np.min(np.sum((centers0 - train[i]) ** 2, axis=1))))

    L = cfg.L if cfg.L is not None else calibrate_loss_bound(cs, calib_rng, loss_of, cfg.calibration_rounds)
    sampler = _sampler(cfg, cs.k, _hyper(cfg, L, m), cs, m, cs.c)

    centers = centers0.copy()
    counts = np.zeros(centers.shape[0])
    T = _horizon(cfg, m)
    iterations: List[int] = []
    metric: List[float] = []
    for t in range(1, T + 1):
        atoms, r = sampler.draw(sample_rng, cfg.batch_size)
        batch = train[atoms]
        d2 = cdist(batch, centers, "sqeuclidean")
        assign = np.argmin(d2, axis=1)
        dists = np.sqrt(d2[np.arange(batch.shape[0]), assign])
        for j in range(batch.shape[0]):
            c = assign[j]
            counts[c] += r[j]
            eta = r[j] / counts[c]
            centers[c] = (1.0 - eta) * centers[c] + eta * batch[j]
        sampler.update(cs.p[:, atoms], dists)

        if _is_checkpoint(t, T, cfg.eval_every):
            iterations.append(t)
            metric.append(score(centers))
    return iterations, metric, sampler


def run_kmeans(
    cfg: ExperimentConfig,
    seed: int,
    points: Optional[np.ndarray] = None,
    init_centers: Optional[np.ndarray] = None,
) -> RunResult:
    """Sculley-style minibatch k-means with batches drawn from the mixture.

    Each atom moves its nearest center with rate r / v_c, where v_c sums the
    importance weights the center has received. The sampler gets one update
    per batch from the distances of the batch atoms to their centers.
    """
    started = time.perf_counter()
    data_rng, init_rng, comp_rng, sample_rng, calib_rng = _streams(seed, 5)

    if points is not None:
        X = np.asarray(points, dtype=float)
    elif cfg.points_path:
        X = load_points_csv(cfg.points_path)
    else:
        X, _ = gen_clusters(cfg.n, cfg.d, cfg.n_clusters, data_rng)
    if X.shape[0] < cfg.n_clusters:
        raise InvalidInputError(f"{X.shape[0]} points cannot support {cfg.n_clusters} clusters")

    train, test = train_test_split(X, cfg.train_fraction, init_rng)
    if train.shape[0] < cfg.n_clusters:
        raise InvalidInputError(f"Training split of {train.shape[0]} points is smaller than {cfg.n_clusters} clusters")
    centers0 = kmeans_pp(train, cfg.n_clusters, init_rng)[0] if init_centers is None else np.array(init_centers, dtype=float)
    reference = kmeans_loss(test, lloyd_kmeans(train, centers0))

    if cfg.tune and _uses_mixture(cfg):

        def validate(candidate: ExperimentConfig, rngs: List[np.random.Generator]) -> float:
            split_rng, inner_sample, inner_calib = rngs
            fit, held_out = _inner_split(train.shape[0], split_rng)
            if fit.size < candidate.n_clusters:
                raise InvalidInputError(
                    f"Inner training split of {fit.size} points is smaller than {candidate.n_clusters} clusters"
                )
            inner_centers = kmeans_pp(train[fit], candidate.n_clusters, split_rng)[0]
            inner_cs = _kmeans_components(candidate, train[fit], split_rng)
            _, metric, _ = _train_kmeans(
                candidate, train[fit], inner_centers, inner_cs, inner_sample, inner_calib,
                lambda centers: kmeans_loss(train[held_out], centers),
            )
            return metric[-1] if metric else float("nan")

        cfg = _tuned(cfg, seed, 5, validate)

    cs = _kmeans_components(cfg, train, comp_rng)
    logger.info(
        f"kmeans seed={seed} sampler={cfg.sampler.value}: train={train.shape[0]}, test={test.shape[0]}, "
        f"k={cs.k}, c={cs.c:.3g}, T={_horizon(cfg, train.shape[0])}, reference={reference:.6g}"
    )
    trace = _train_kmeans(cfg, train, centers0, cs, sample_rng, calib_rng, lambda centers: kmeans_loss(test, centers))
    losses = trace[1]

    relative_error = (losses[-1] - reference) / reference if reference > 0 else 0.0
    return _result(
        cfg,
        seed,
        "test_loss",
        trace,
        started,
        reference_loss=reference,
        relative_error=relative_error,
        c=cs.c,
    )


def run_experiment(cfg: ExperimentConfig, seed: int) -> RunResult:
    """Dispatch one seed of the configured experiment."""
    runners = {
        ExperimentKind.SVM_BLOBS: run_svm_blobs,
        ExperimentKind.LINREG_DPP: run_linreg_dpp,
        ExperimentKind.KMEANS: run_kmeans,
    }
    return runners[cfg.experiment](cfg, seed)
