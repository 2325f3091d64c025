"""Cluster-covariance RBF kernel and its baselines.

Every point x is projected to the Gaussian density N(x, (2γ)^-1 Σ_x), where
Σ_x is the covariance of the k-means cell containing x. The L² inner product
of two such densities, with the γ-dependent constants dropped, is

    K_γ(x, y) = det(Σ_x + Σ_y)^(-1/2) · exp(-γ (x-y)ᵀ (Σ_x + Σ_y)^(-1) (x-y))

Only k distinct covariances exist, so det and inverse of every pairwise sum
are precomputed once per clustering (``norm_factors`` and ``inv_sums``).
All kernels here share the factorisation K = N ∘ exp(-γ Q) with N and Q
independent of γ (see :class:`GramParts`).
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional, Protocol, Tuple

import numpy as np
import scipy.linalg as la

from ckrbf.clustering import Clustering, KMeansPartitioner, Partitioner, assign, assign_many
from ckrbf.exceptions import EmptyClusterError, IllConditionedCovarianceError

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-10
MAX_EPSILON = 1e-2
# relative eigenvalue floor below which a covariance counts as singular
PD_RELATIVE_FLOOR = 1e-12
_CHUNK_ELEMENTS = 2_000_000


@dataclass(frozen=True, eq=False)
class GaussianParams:
    """Mean and covariance of a multivariate normal density."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self) -> None:
        mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=np.float64))
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f"covariance shape {cov.shape} does not match mean size {mean.size}")
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-12):
            raise ValueError("covariance must be symmetric")
        if not is_positive_definite(cov):
            raise ValueError("covariance must be positive definite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @property
    def d(self) -> int:
        return int(self.mean.size)

    def pdf(self, x: np.ndarray) -> float:
        """Density at ``x``."""
        diff = np.atleast_1d(np.asarray(x, dtype=np.float64)) - self.mean
        cho = la.cho_factor(self.covariance)
        logdet = 2.0 * np.sum(np.log(np.diag(cho[0])))
        quad = float(diff @ la.cho_solve(cho, diff))
        return float(np.exp(-0.5 * (self.d * np.log(2 * np.pi) + logdet + quad)))


@dataclass(frozen=True, eq=False)
class GramParts:
    """γ-independent factors of a Gram matrix: K = norm * exp(-γ * quad)."""

    norm: np.ndarray
    quad: np.ndarray

    def at(self, gamma: float) -> np.ndarray:
        if gamma <= 0:
            raise ValueError(f"gamma must be positive, got {gamma}")
        return self.norm * np.exp(-gamma * self.quad)

    def take(self, rows: np.ndarray, cols: np.ndarray) -> "GramParts":
        return GramParts(self.norm[np.ix_(rows, cols)], self.quad[np.ix_(rows, cols)])


class Kernel(Protocol):
    """Interface shared by every kernel family."""

    gamma: float

    def __call__(self, x: np.ndarray, y: np.ndarray) -> float:
        ...

    def gram_parts(self, A: np.ndarray, B: Optional[np.ndarray] = None) -> GramParts:
        ...

    def with_gamma(self, gamma: float) -> "Kernel":
        ...

    def to_dict(self) -> Dict[str, Any]:
        ...


# ---------------------------------------------------------------------------
# Covariance estimation and regularisation
# ---------------------------------------------------------------------------


def covariance(X: np.ndarray) -> np.ndarray:
    """Maximum-likelihood covariance (divides by m); a single point gives zeros.

    Raises:
        EmptyClusterError: If ``X`` has no rows
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] == 0:
        raise EmptyClusterError("covariance of an empty cluster is undefined")
    centered = X - X.mean(axis=0)
    cov = centered.T @ centered / X.shape[0]
    return (cov + cov.T) / 2.0


def is_positive_definite(S: np.ndarray) -> bool:
    """Cholesky succeeds and the smallest eigenvalue exceeds 1e-12 * trace."""
    S = np.atleast_2d(np.asarray(S, dtype=np.float64))
    if not np.all(np.isfinite(S)):
        return False
    try:
        la.cholesky(S, lower=True)
    except la.LinAlgError:
        return False
    return bool(np.linalg.eigvalsh(S)[0] > PD_RELATIVE_FLOOR * np.trace(S))


def regularize(
    S: np.ndarray,
    A: np.ndarray,
    eps: float = DEFAULT_EPSILON,
    max_eps: float = MAX_EPSILON,
) -> np.ndarray:
    """Return S if it is positive definite, else (1-eps)S + eps*A.

    eps grows tenfold until the blend is positive definite.

    Raises:
        ValueError: If eps is outside (0, 1)
        IllConditionedCovarianceError: If eps would exceed ``max_eps``
    """
    if not 0 < eps < 1:
        raise ValueError(f"eps must be in (0, 1), got {eps}")
    S = np.atleast_2d(np.asarray(S, dtype=np.float64))
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    if is_positive_definite(S):
        return S.copy()

    current = eps
    while current <= max_eps * (1 + 1e-9):
        blended = (1.0 - current) * S + current * A
        blended = (blended + blended.T) / 2.0
        if is_positive_definite(blended):
            if current != eps:
                logger.warning("Covariance needed eps=%.0e to become positive definite", current)
            return blended
        current *= 10.0
    raise IllConditionedCovarianceError(
        f"covariance is not positive definite even with eps={max_eps:g}"
    )


def regularizer_for(X: np.ndarray, eps: float = DEFAULT_EPSILON) -> np.ndarray:
    """Blend target A: cov(X) when invertible, regularised toward I otherwise."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    identity = np.eye(X.shape[1])
    cov = covariance(X)
    if is_positive_definite(cov):
        return cov
    try:
        return regularize(cov, identity, eps)
    except IllConditionedCovarianceError:
        logger.warning("Data covariance is degenerate; using the identity as regularizer")
        return identity


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------


def gaussian_product_integral(g1: GaussianParams, g2: GaussianParams) -> float:
    """∫ N(m1,Σ1)(x) N(m2,Σ2)(x) dx, which equals N(m1, Σ1+Σ2) evaluated at m2.

    Raises:
        LinAlgError: If Σ1 + Σ2 is singular
    """
    if g1.d != g2.d:
        raise ValueError(f"dimension mismatch: {g1.d} vs {g2.d}")
    total = g1.covariance + g2.covariance
    cho = la.cho_factor(total)
    diff = g1.mean - g2.mean
    logdet = 2.0 * np.sum(np.log(np.diag(cho[0])))
    quad = float(diff @ la.cho_solve(cho, diff))
    return float(np.exp(-0.5 * (g1.d * np.log(2 * np.pi) + logdet + quad)))


def merge_quadratic_forms(
    m1: np.ndarray, m2: np.ndarray, P1: np.ndarray, P2: np.ndarray, x: np.ndarray
) -> Tuple[float, float]:
    """Both sides of the quadratic-form merging identity.

        (x-m1)ᵀP1(x-m1) + (x-m2)ᵀP2(x-m2) = (x-m)ᵀŜ(x-m) + (m1-m2)ᵀW(m1-m2)

    with Ŝ = P1+P2, m = Ŝ⁻¹(P1 m1 + P2 m2) and W = (P1⁻¹ + P2⁻¹)⁻¹.

    Returns:
        (lhs, rhs)
    """
    m1, m2, x = (np.atleast_1d(np.asarray(v, dtype=np.float64)) for v in (m1, m2, x))
    P1, P2 = (np.atleast_2d(np.asarray(P, dtype=np.float64)) for P in (P1, P2))

    a, b = x - m1, x - m2
    lhs = float(a @ P1 @ a + b @ P2 @ b)

    merged = P1 + P2
    m = np.linalg.solve(merged, P1 @ m1 + P2 @ m2)
    # (P1⁻¹ + P2⁻¹)⁻¹ = P1 (P1 + P2)⁻¹ P2
    W = P1 @ np.linalg.solve(merged, P2)
    W = (W + W.T) / 2.0
    c, delta = x - m, m1 - m2
    rhs = float(c @ merged @ c + delta @ W @ delta)
    return lhs, rhs


# ---------------------------------------------------------------------------
# Shared Gram machinery
# ---------------------------------------------------------------------------


def _quadratic_rows(D: np.ndarray, S: np.ndarray) -> np.ndarray:
    """dᵀ S d for every d along the last axis of ``D``, clipped at 0.

    The sum runs term by term in a fixed order with elementwise operations
    only, so a pair of points gets the same bits in a batch of any size.
    """
    total = np.zeros(D.shape[:-1])
    for a in range(S.shape[0]):
        inner = np.zeros(D.shape[:-1])
        for b in range(S.shape[1]):
            inner += S[a, b] * D[..., b]
        total += D[..., a] * inner
    return np.maximum(total, 0.0)


def _squared_norms(D: np.ndarray) -> np.ndarray:
    """‖d‖² along the last axis of ``D``, summed in a fixed order."""
    total = np.zeros(D.shape[:-1])
    for a in range(D.shape[-1]):
        total += D[..., a] * D[..., a]
    return total


def _block_quad(A: np.ndarray, B: np.ndarray, S: np.ndarray) -> np.ndarray:
    out = np.empty((A.shape[0], B.shape[0]))
    if out.size == 0:
        return out
    step = max(1, _CHUNK_ELEMENTS // max(1, B.shape[0] * A.shape[1]))
    for start in range(0, A.shape[0], step):
        D = A[start : start + step, np.newaxis, :] - B[np.newaxis, :, :]
        out[start : start + step] = _quadratic_rows(D, S)
    return out


def _squared_euclidean(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    out = np.empty((A.shape[0], B.shape[0]))
    step = max(1, _CHUNK_ELEMENTS // max(1, B.shape[0] * A.shape[1]))
    for start in range(0, A.shape[0], step):
        D = A[start : start + step, np.newaxis, :] - B[np.newaxis, :, :]
        out[start : start + step] = _squared_norms(D)
    return out


def _check_matrix(M: np.ndarray, d: int, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim == 1:
        M = M[np.newaxis, :]
    if M.ndim != 2 or M.shape[1] != d:
        raise ValueError(f"{name} must have {d} columns, got shape {M.shape}")
    return M


def _check_vector(v: np.ndarray, d: int, name: str) -> np.ndarray:
    v = np.atleast_1d(np.asarray(v, dtype=np.float64))
    if v.shape != (d,):
        raise ValueError(f"{name} must have dimension {d}, got shape {v.shape}")
    return v


def _symmetrize_upper(G: np.ndarray) -> np.ndarray:
    return np.triu(G) + np.triu(G, 1).T


# ---------------------------------------------------------------------------
# Cluster-covariance kernel
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class KernelModel:
    """Precomputed cluster-covariance kernel.

    Attributes:
        clustering: partition defining which Σ_i applies to a point
        sigmas: k x d x d regularised cluster covariances
        norm_factors: k x k matrix of det(Σ_i + Σ_j)^(-1/2)
        inv_sums: k x k x d x d array of (Σ_i + Σ_j)^(-1)
        gamma: kernel width parameter
        epsilon: regularisation strength used for the Σ_i
        regularizer: blend target A of the regularisation
        radial: Σ_i are isotropic, which enables the scalar fast path
    """

    clustering: Clustering
    sigmas: np.ndarray
    norm_factors: np.ndarray
    inv_sums: np.ndarray
    gamma: float
    epsilon: float = DEFAULT_EPSILON
    regularizer: Optional[np.ndarray] = None
    radial: bool = False

    def __post_init__(self) -> None:
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        k, d = self.clustering.k, self.clustering.d
        if self.sigmas.shape != (k, d, d):
            raise ValueError(f"sigmas must have shape {(k, d, d)}, got {self.sigmas.shape}")
        if self.norm_factors.shape != (k, k) or self.inv_sums.shape != (k, k, d, d):
            raise ValueError("precomputed factors do not match the clustering")

    @property
    def k(self) -> int:
        return self.clustering.k

    @property
    def d(self) -> int:
        return self.clustering.d

    def __call__(self, x: np.ndarray, y: np.ndarray) -> float:
        return eval_kernel(self, x, y)

    def gram_parts(self, A: np.ndarray, B: Optional[np.ndarray] = None) -> GramParts:
        return gram_parts(self, A, B)

    def with_gamma(self, gamma: float) -> "KernelModel":
        return rescale_gamma(self, gamma)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "family": "ckrbf-radial" if self.radial else "ckrbf",
            "clustering": self.clustering.to_dict(),
            "sigmas": self.sigmas.tolist(),
            "gamma": self.gamma,
            "epsilon": self.epsilon,
            "regularizer": None if self.regularizer is None else self.regularizer.tolist(),
            "radial": self.radial,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "KernelModel":
        regularizer = data.get("regularizer")
        return assemble_kernel(
            Clustering.from_dict(data["clustering"]),
            np.asarray(data["sigmas"], dtype=np.float64),
            data["gamma"],
            epsilon=data.get("epsilon", DEFAULT_EPSILON),
            regularizer=None if regularizer is None else np.asarray(regularizer),
            radial=data.get("radial", False),
        )


def assemble_kernel(
    clustering: Clustering,
    sigmas: np.ndarray,
    gamma: float,
    epsilon: float = DEFAULT_EPSILON,
    regularizer: Optional[np.ndarray] = None,
    radial: bool = False,
) -> KernelModel:
    """Precompute n_ij and S_ij for given per-cluster covariances.

    Raises:
        LinAlgError: If some Σ_i + Σ_j is not positive definite
    """
    sigmas = np.asarray(sigmas, dtype=np.float64)
    k, d = clustering.k, clustering.d
    norm_factors = np.empty((k, k))
    inv_sums = np.empty((k, k, d, d))
    identity = np.eye(d)
    for i in range(k):
        for j in range(i, k):
            total = sigmas[i] + sigmas[j]
            cho = la.cho_factor(total, lower=True)
            logdet = 2.0 * np.sum(np.log(np.diag(cho[0])))
            inv = la.cho_solve(cho, identity)
            inv = (inv + inv.T) / 2.0
            norm_factors[i, j] = norm_factors[j, i] = np.exp(-0.5 * logdet)
            inv_sums[i, j] = inv_sums[j, i] = inv
    for array in (sigmas, norm_factors, inv_sums):
        array.setflags(write=False)
    return KernelModel(
        clustering=clustering,
        sigmas=sigmas,
        norm_factors=norm_factors,
        inv_sums=inv_sums,
        gamma=float(gamma),
        epsilon=epsilon,
        regularizer=regularizer,
        radial=radial,
    )


def build_kernel_from_clustering(
    X: np.ndarray, clustering: Clustering, gamma: float, eps: float = DEFAULT_EPSILON
) -> KernelModel:
    """Build the kernel for an existing partition of the rows of ``X``."""
    X = np.asarray(X, dtype=np.float64)
    if clustering.assignments.shape != (X.shape[0],):
        raise ValueError("clustering assignments do not match the rows of X")
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")

    A = regularizer_for(X, eps)
    sigmas = np.empty((clustering.k, X.shape[1], X.shape[1]))
    for i in range(clustering.k):
        members = clustering.members(i)
        if members.size == 0:
            logger.warning("Cluster %d is empty; using eps*A as its covariance", i)
            sigmas[i] = regularize(np.zeros_like(A), A, eps)
        else:
            sigmas[i] = regularize(covariance(X[members]), A, eps)
    return assemble_kernel(clustering, sigmas, gamma, epsilon=eps, regularizer=A)


def build_kernel(
    X: np.ndarray,
    k: int,
    gamma: float,
    eps: float = DEFAULT_EPSILON,
    seed: int = 0,
    restarts: int = 10,
    partitioner: Optional[Partitioner] = None,
    jobs: int = 1,
) -> KernelModel:
    """Cluster ``X`` and build the cluster-covariance kernel.

    Args:
        X: n x d feature matrix (every available point, labelled or not)
        k: number of clusters
        gamma: kernel width parameter
        eps: initial regularisation strength
        seed: k-means seed
        restarts: k-means++ restarts, the lowest-inertia one is kept
        partitioner: alternative partitioner; overrides k/seed/restarts
        jobs: worker threads running the k-means restarts
    """
    X = np.asarray(X, dtype=np.float64)
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if partitioner is None:
        if k < 1 or k > X.shape[0]:
            raise ValueError(f"k must be in [1, n={X.shape[0]}], got {k}")
        partitioner = KMeansPartitioner(k=k, restarts=restarts, seed=seed, jobs=jobs)
    return build_kernel_from_clustering(X, partitioner.fit(X), gamma, eps)


def eval_kernel(model: KernelModel, x: np.ndarray, y: np.ndarray) -> float:
    """K_γ(x, y) = n_ij · exp(-γ (x-y)ᵀ S_ij (x-y)) with i, j the cells of x, y.

    Equal bit for bit to the matching entry of :func:`gram`.
    """
    x = _check_vector(x, model.d, "x")
    y = _check_vector(y, model.d, "y")
    parts = gram_parts(model, x[np.newaxis, :], y[np.newaxis, :])
    return float(parts.at(model.gamma)[0, 0])


def gram_parts(model: KernelModel, A: np.ndarray, B: Optional[np.ndarray] = None) -> GramParts:
    """γ-independent factors of the Gram matrix between rows of A and rows of B.

    With ``B`` omitted the Gram matrix of A with itself is produced and is
    exactly symmetric.
    """
    A = _check_matrix(A, model.d, "A")
    symmetric = B is None
    B = A if B is None else _check_matrix(B, model.d, "B")

    rows = assign_many(model.clustering, A)
    cols = assign_many(model.clustering, B)
    norm = model.norm_factors[np.ix_(rows, cols)]
    quad = np.empty((A.shape[0], B.shape[0]))

    if model.radial:
        scale = model.inv_sums[:, :, 0, 0][np.ix_(rows, cols)]
        quad = _squared_euclidean(A, B) * scale
    else:
        for i in np.unique(rows):
            row_idx = np.flatnonzero(rows == i)
            for j in np.unique(cols):
                col_idx = np.flatnonzero(cols == j)
                quad[np.ix_(row_idx, col_idx)] = _block_quad(
                    A[row_idx], B[col_idx], model.inv_sums[i, j]
                )

    if symmetric:
        quad = _symmetrize_upper(quad)
    return GramParts(norm=norm, quad=quad)


def gram(model: KernelModel, A: np.ndarray, B: Optional[np.ndarray] = None) -> np.ndarray:
    """Matrix G[a, b] = K_γ(A_a, B_b)."""
    return gram_parts(model, A, B).at(model.gamma)


def convert_gram(
    G: np.ndarray, norm: np.ndarray, gamma: float, new_gamma: float
) -> np.ndarray:
    """Turn a Gram matrix at ``gamma`` into one at ``new_gamma`` without new determinants.

    K_new = n · exp(ln(K / n) · new_gamma / gamma)
    """
    if gamma <= 0 or new_gamma <= 0:
        raise ValueError("gamma values must be positive")
    return norm * np.exp(np.log(G / norm) * (new_gamma / gamma))


def rescale_gamma(model: KernelModel, new_gamma: float) -> KernelModel:
    """Same clustering and precomputations, new γ.

    Raises:
        ValueError: If new_gamma <= 0
    """
    if new_gamma <= 0:
        raise ValueError(f"gamma must be positive, got {new_gamma}")
    return replace(model, gamma=float(new_gamma))


def radial_variant(model: KernelModel) -> KernelModel:
    """Replace every Σ_i by σ_i² I with σ_i² = trace(Σ_i) / d.

    Then n_ij = (σ_i² + σ_j²)^(-d/2) and S_ij = I / (σ_i² + σ_j²), and the
    quadratic form reduces to a scaled squared Euclidean distance.
    """
    k, d = model.k, model.d
    variances = np.array([np.trace(s) / d for s in model.sigmas])
    identity = np.eye(d)
    sigmas = np.stack([v * identity for v in variances])
    total = variances[:, np.newaxis] + variances[np.newaxis, :]
    norm_factors = total ** (-d / 2.0)
    inv_sums = (1.0 / total)[:, :, np.newaxis, np.newaxis] * identity
    for array in (sigmas, norm_factors, inv_sums):
        array.setflags(write=False)
    return replace(
        model,
        sigmas=sigmas,
        norm_factors=norm_factors,
        inv_sums=inv_sums,
        radial=True,
    )


def feature_density(model: KernelModel, x: np.ndarray) -> GaussianParams:
    """Feature-space image of ``x``: the density N(x, (2γ)^-1 Σ_x)."""
    x = _check_vector(x, model.d, "x")
    cell = assign(model.clustering, x)
    return GaussianParams(mean=x, covariance=model.sigmas[cell] / (2.0 * model.gamma))


# ---------------------------------------------------------------------------
# Baseline kernels
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RbfKernel:
    """K(x, y) = exp(-γ ||x - y||²)."""

    gamma: float

    def __post_init__(self) -> None:
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")

    def __call__(self, x: np.ndarray, y: np.ndarray) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        y = _check_vector(y, x.size, "y")
        return float(self.gram_parts(x[np.newaxis, :], y[np.newaxis, :]).at(self.gamma)[0, 0])

    def gram_parts(self, A: np.ndarray, B: Optional[np.ndarray] = None) -> GramParts:
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        symmetric = B is None
        B = A if B is None else _check_matrix(B, A.shape[1], "B")
        quad = _squared_euclidean(A, B)
        if symmetric:
            quad = _symmetrize_upper(quad)
        return GramParts(norm=np.ones_like(quad), quad=quad)

    def with_gamma(self, gamma: float) -> "RbfKernel":
        return RbfKernel(gamma)

    def to_dict(self) -> Dict[str, Any]:
        return {"family": "rbf", "gamma": self.gamma}


@dataclass(frozen=True, eq=False)
class MahalanobisRbfKernel:
    """K(x, y) = exp(-γ (x-y)ᵀ Σ⁻¹ (x-y)) for a fixed positive definite Σ."""

    sigma: np.ndarray
    gamma: float
    precision: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        sigma = np.atleast_2d(np.asarray(self.sigma, dtype=np.float64))
        precision = la.cho_solve(la.cho_factor(sigma), np.eye(sigma.shape[0]))
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "precision", (precision + precision.T) / 2.0)

    @property
    def d(self) -> int:
        return int(self.sigma.shape[0])

    def __call__(self, x: np.ndarray, y: np.ndarray) -> float:
        x, y = _check_vector(x, self.d, "x"), _check_vector(y, self.d, "y")
        return float(self.gram_parts(x[np.newaxis, :], y[np.newaxis, :]).at(self.gamma)[0, 0])

    def gram_parts(self, A: np.ndarray, B: Optional[np.ndarray] = None) -> GramParts:
        A = _check_matrix(A, self.d, "A")
        symmetric = B is None
        B = A if B is None else _check_matrix(B, self.d, "B")
        quad = _block_quad(A, B, self.precision)
        if symmetric:
            quad = _symmetrize_upper(quad)
        return GramParts(norm=np.ones_like(quad), quad=quad)

    def with_gamma(self, gamma: float) -> "MahalanobisRbfKernel":
        return MahalanobisRbfKernel(self.sigma, gamma)

    def to_dict(self) -> Dict[str, Any]:
        return {"family": "mrbf", "gamma": self.gamma, "sigma": self.sigma.tolist()}


def rbf_kernel(gamma: float) -> RbfKernel:
    """Classical Gaussian kernel."""
    return RbfKernel(gamma)


def mahalanobis_rbf_kernel(
    X: np.ndarray, gamma: float, eps: float = DEFAULT_EPSILON
) -> MahalanobisRbfKernel:
    """Gaussian kernel in the metric of the (regularised) data covariance."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    sigma = regularize(covariance(X), np.eye(X.shape[1]), eps)
    return MahalanobisRbfKernel(sigma, gamma)
