"""Exact k-DPP sampling and set probabilities.

Mixture components over minibatches: each non-uniform component is a k-DPP
with a fixed kernel, the last one draws size-b subsets uniformly.
"""

import logging
from typing import Sequence, Tuple

import numpy as np
from scipy.special import gammaln

from .config import DEFAULT_TRUNCATION, EIGEN_REL_CUTOFF
from .exceptions import DegenerateKernelError, InvalidInputError
from .mixtures import WeightsLike, as_weight_vector
from .models import DppKernel, SetSample

logger = logging.getLogger(__name__)


def _esym_table(lams: np.ndarray, b: int) -> np.ndarray:
    """E[m, i] = e_m(lams[:i]) for m <= b, i <= n."""
    n = lams.shape[0]
    E = np.zeros((b + 1, n + 1))
    E[0, :] = 1.0
    for m in range(1, b + 1):
        for i in range(1, n + 1):
            E[m, i] = E[m, i - 1] + lams[i - 1] * E[m - 1, i - 1]
    return E


def elementary_symmetric(lams: np.ndarray, b: int) -> np.ndarray:
    """e_0(lams), ..., e_b(lams)."""
    vec = np.asarray(lams, dtype=float).ravel()
    if not 0 <= b <= vec.shape[0]:
        raise InvalidInputError(f"Need 0 <= b <= n, got b={b}, n={vec.shape[0]}")
    return _esym_table(vec, b)[:, -1].copy()


def kernel_from_matrix(L: np.ndarray, batch_size: int) -> DppKernel:
    """Eigendecompose a PSD kernel once.

    Eigenvalues within a relative ``EIGEN_REL_CUTOFF`` of zero are set to zero;
    clearly negative ones reject the kernel.
    """
    mat = np.asarray(L, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise InvalidInputError(f"Kernel must be square, got shape {mat.shape}")
    n = mat.shape[0]
    if not 1 <= batch_size <= n:
        raise InvalidInputError(f"Batch size must lie in [1, {n}], got {batch_size}")
    if not np.all(np.isfinite(mat)):
        raise InvalidInputError("Kernel has non-finite entries")
    scale = max(1.0, float(np.abs(mat).max()))
    if not np.allclose(mat, mat.T, rtol=0.0, atol=1e-10 * scale):
        raise InvalidInputError("Kernel must be symmetric")

    eigvals, eigvecs = np.linalg.eigh(0.5 * (mat + mat.T))
    lam_max = float(eigvals.max())
    if float(eigvals.min()) < -EIGEN_REL_CUTOFF * float(np.abs(eigvals).max()):
        raise InvalidInputError(
            f"Kernel must be positive semidefinite, smallest eigenvalue is {eigvals.min():.4g}"
        )
    eigvals = np.where(eigvals < EIGEN_REL_CUTOFF * max(lam_max, 0.0), 0.0, eigvals)
    positive = int(np.sum(eigvals > 0.0))
    if positive < batch_size:
        raise DegenerateKernelError(
            f"Kernel has {positive} positive eigenvalues, fewer than batch size {batch_size}"
        )

    kernel = DppKernel(L=mat, eigvals=eigvals, eigvecs=eigvecs, batch_size=batch_size)
    kernel._esym = _esym_table(eigvals, batch_size)
    logger.debug(f"k-DPP kernel n={n}, b={batch_size}, lambda_max={lam_max:.4g}")
    return kernel


def kernel_from_points(points: np.ndarray, regularizer: float, batch_size: int) -> DppKernel:
    """Regularized linear kernel X X^T + lambda I."""
    if regularizer < 0.0:
        raise InvalidInputError(f"Regularizer must be nonnegative, got {regularizer}")
    X = np.asarray(points, dtype=float)
    return kernel_from_matrix(X @ X.T + regularizer * np.eye(X.shape[0]), batch_size)


def _esym(kernel: DppKernel) -> np.ndarray:
    if kernel._esym is None:
        kernel._esym = _esym_table(kernel.eigvals, kernel.batch_size)
    return kernel._esym


def sample_kdpp(kernel: DppKernel, rng: np.random.Generator) -> Tuple[int, ...]:
    """Draw S with probability det(L_S) / e_b(lambda).

    Phase one picks b eigenvectors using ratios of elementary symmetric
    polynomials; phase two samples atoms one at a time from the span of the
    chosen eigenvectors, projecting out each selected atom.
    """
    E = _esym(kernel)
    lams = kernel.eigvals
    b = kernel.batch_size

    chosen = []
    remaining = b
    for i in range(kernel.n, 0, -1):
        if remaining == 0:
            break
        if i == remaining:
            marg = 1.0
        else:
            marg = lams[i - 1] * E[remaining - 1, i - 1] / E[remaining, i]
        if rng.random() < marg:
            chosen.append(i - 1)
            remaining -= 1

    V = kernel.eigvecs[:, chosen]
    S = []
    while V.shape[1] > 0:
        weights = np.sum(V**2, axis=1)
        cdf = np.cumsum(weights)
        item = min(int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right")), kernel.n - 1)
        S.append(item)

        j = int(np.argmax(np.abs(V[item, :])))
        pivot = V[:, j]
        V = V - np.outer(pivot, V[item, :] / pivot[item])
        V = np.delete(V, j, axis=1)
        if V.shape[1] > 0:
            V, _ = np.linalg.qr(V)
    return tuple(sorted(S))


def _check_set(kernel: DppKernel, S: Sequence[int]) -> np.ndarray:
    idx = np.asarray(sorted(S), dtype=int)
    if idx.shape[0] != kernel.batch_size:
        raise InvalidInputError(f"Set has {idx.shape[0]} atoms, expected {kernel.batch_size}")
    if idx.shape[0] and (idx[0] < 0 or idx[-1] >= kernel.n or np.any(np.diff(idx) == 0)):
        raise InvalidInputError("Set must hold distinct atom indices in range")
    return idx


def set_log_prob(kernel: DppKernel, S: Sequence[int]) -> float:
    """log det(L_S) - log e_b; -inf for singular submatrices."""
    idx = _check_set(kernel, S)
    try:
        chol = np.linalg.cholesky(kernel.L[np.ix_(idx, idx)])
    except np.linalg.LinAlgError:
        return -np.inf
    log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
    return log_det - float(np.log(_esym(kernel)[-1, -1]))


def set_prob(kernel: DppKernel, S: Sequence[int]) -> float:
    return float(np.exp(set_log_prob(kernel, S)))


def log_n_subsets(n: int, b: int) -> float:
    """log C(n, b)."""
    return float(gammaln(n + 1) - gammaln(b + 1) - gammaln(n - b + 1))


def _component_probs(
    kernels: Sequence[DppKernel], S: Tuple[int, ...], n: int, b: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Per-component probabilities of S, raw and relative to the uniform mass."""
    log_uniform = -log_n_subsets(n, b)
    logs = np.array([set_log_prob(kernel, S) for kernel in kernels] + [log_uniform])
    return np.exp(logs), np.exp(logs - log_uniform)


def sample_set_mixture(
    kernels: Sequence[DppKernel],
    w: WeightsLike,
    rng: np.random.Generator,
    trunc: Tuple[float, float] = DEFAULT_TRUNCATION,
    n: int = 0,
    batch_size: int = 0,
) -> SetSample:
    """Draw a minibatch from the mixture of k-DPPs and uniform size-b subsets.

    r = (1/C(n,b)) / (w^T p(S)) keeps uniform-minibatch expectations, and the
    soft-truncated weight is trunc[0] * r + trunc[1]. ``n`` and
    ``batch_size`` are only needed when ``kernels`` is empty.
    """
    if kernels:
        n, batch_size = kernels[0].n, kernels[0].batch_size
        for kernel in kernels[1:]:
            if kernel.n != n or kernel.batch_size != batch_size:
                raise InvalidInputError("All kernels must share n and the batch size")
    if n < 1 or not 1 <= batch_size <= n:
        raise InvalidInputError(f"Invalid set sizes n={n}, b={batch_size}")

    k = len(kernels) + 1
    vec = as_weight_vector(w, k)
    wc = np.cumsum(vec)
    component = min(int(np.searchsorted(wc, rng.random() * wc[-1], side="right")), k - 1)

    if component == k - 1:
        S = tuple(sorted(int(i) for i in rng.choice(n, size=batch_size, replace=False)))
    else:
        S = sample_kdpp(kernels[component], rng)

    probs, rel = _component_probs(kernels, S, n, batch_size)
    r = 1.0 / float(vec @ rel)
    return SetSample(
        S=S,
        component=component,
        prob_per_component=probs,
        rel_probs=rel,
        r=r,
        r_trunc=trunc[0] * r + trunc[1],
    )
