"""k-means partitioning of the input space.

The partition W_1..W_k is the Voronoi diagram of the fitted centroids, so any
point of R^d (seen or unseen) belongs to the cell of its nearest centroid.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Protocol, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]

DEFAULT_MAX_ITER = 300
DEFAULT_RESTARTS = 10


@dataclass(frozen=True, eq=False)
class Clustering:
    """Result of a k-means fit.

    Attributes:
        centroids: k x d matrix
        assignments: cluster index of every fitted point
        inertia: sum of squared distances to the assigned centroids
        seed: seed the fit was run with, when known
        iterations: Lloyd iterations used by the winning restart
    """

    centroids: np.ndarray
    assignments: np.ndarray
    inertia: float
    seed: Optional[int] = None
    iterations: int = 0

    def __post_init__(self) -> None:
        centroids = np.array(self.centroids, dtype=np.float64, copy=True)
        assignments = np.array(self.assignments, dtype=np.int64, copy=True)
        if centroids.ndim != 2:
            raise ValueError(f"centroids must be k x d, got shape {centroids.shape}")
        if not np.all(np.isfinite(centroids)):
            raise ValueError("centroids contain non-finite values")
        if assignments.size and (assignments.min() < 0 or assignments.max() >= len(centroids)):
            raise ValueError("assignments out of range")
        centroids.setflags(write=False)
        assignments.setflags(write=False)
        object.__setattr__(self, "centroids", centroids)
        object.__setattr__(self, "assignments", assignments)
        object.__setattr__(self, "inertia", float(self.inertia))

    @property
    def k(self) -> int:
        return int(self.centroids.shape[0])

    @property
    def d(self) -> int:
        return int(self.centroids.shape[1])

    def members(self, cluster: int) -> np.ndarray:
        """Indices of the fitted points assigned to ``cluster``."""
        return np.flatnonzero(self.assignments == cluster)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "centroids": self.centroids.tolist(),
            "assignments": self.assignments.tolist(),
            "inertia": self.inertia,
            "seed": self.seed,
            "iterations": self.iterations,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Clustering":
        return cls(
            centroids=np.asarray(data["centroids"], dtype=np.float64),
            assignments=np.asarray(data["assignments"], dtype=np.int64),
            inertia=data["inertia"],
            seed=data.get("seed"),
            iterations=data.get("iterations", 0),
        )


class Partitioner(Protocol):
    """Anything that turns a feature matrix into a Clustering."""

    def fit(self, X: np.ndarray) -> Clustering:
        ...


def _squared_distances(X: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    return np.sum((X[:, np.newaxis, :] - centroids[np.newaxis, :, :]) ** 2, axis=2)


def _inertia(X: np.ndarray, centroids: np.ndarray, assignments: np.ndarray) -> float:
    return float(np.sum((X - centroids[assignments]) ** 2))


def assign_many(c: Clustering, X: np.ndarray) -> np.ndarray:
    """Nearest-centroid index for every row of ``X``; ties go to the lowest index."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != c.d:
        raise ValueError(f"expected an m x {c.d} matrix, got shape {X.shape}")
    return np.argmin(_squared_distances(X, c.centroids), axis=1)


def assign(c: Clustering, x: np.ndarray) -> int:
    """Cluster index of a single point (its Voronoi cell)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (c.d,):
        raise ValueError(f"expected a vector of dimension {c.d}, got shape {x.shape}")
    return int(assign_many(c, x[np.newaxis, :])[0])


def kmeans_pp_seed(X: np.ndarray, k: int, seed: SeedLike) -> np.ndarray:
    """Choose k initial centroids by k-means++.

    The first centroid is uniform over the rows; each next one is drawn with
    probability proportional to the squared distance to the nearest chosen
    centroid. When all remaining distances are zero the draw falls back to a
    uniform choice among rows not chosen yet.

    Raises:
        ValueError: If k < 1 or k > n
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if k < 1 or k > n:
        raise ValueError(f"k must be in [1, n={n}], got {k}")

    rng = np.random.default_rng(seed)
    chosen = [int(rng.integers(0, n))]
    nearest = np.sum((X - X[chosen[0]]) ** 2, axis=1)

    for _ in range(1, k):
        total = nearest.sum()
        if total > 0:
            idx = int(rng.choice(n, p=nearest / total))
        else:
            remaining = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(remaining))
        chosen.append(idx)
        nearest = np.minimum(nearest, np.sum((X - X[idx]) ** 2, axis=1))

    return X[chosen].copy()


def lloyd(
    X: np.ndarray, centroids: np.ndarray, max_iter: int = DEFAULT_MAX_ITER
) -> Tuple[Clustering, List[float]]:
    """Run Lloyd iterations from ``centroids`` until the assignment is a fixpoint.

    Empty clusters are reseeded at the point farthest from its own centroid.

    Returns:
        (clustering, inertia after every iteration)
    """
    X = np.asarray(X, dtype=np.float64)
    centroids = np.array(centroids, dtype=np.float64, copy=True)
    k = centroids.shape[0]
    assignments = np.argmin(_squared_distances(X, centroids), axis=1)
    history = [_inertia(X, centroids, assignments)]

    iterations = 0
    for iterations in range(1, max_iter + 1):
        updated = centroids.copy()
        empty = []
        for j in range(k):
            mask = assignments == j
            if np.any(mask):
                updated[j] = X[mask].mean(axis=0)
            else:
                empty.append(j)

        if empty:
            spread = np.sum((X - updated[assignments]) ** 2, axis=1)
            for j in empty:
                far = int(np.argmax(spread))
                logger.debug("Reseeding empty cluster %d at point %d", j, far)
                updated[j] = X[far]
                spread[far] = -1.0

        new_assignments = np.argmin(_squared_distances(X, updated), axis=1)
        centroids = updated
        history.append(_inertia(X, centroids, new_assignments))
        if np.array_equal(new_assignments, assignments):
            break
        assignments = new_assignments
    else:
        logger.debug("Lloyd iterations hit the cap of %d", max_iter)

    clustering = Clustering(
        centroids=centroids,
        assignments=assignments,
        inertia=_inertia(X, centroids, assignments),
        iterations=iterations,
    )
    return clustering, history


def kmeans_fit(
    X: np.ndarray,
    k: int,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    max_iter: int = DEFAULT_MAX_ITER,
    jobs: int = 1,
) -> Clustering:
    """Best-of-``restarts`` k-means with k-means++ seeding.

    Restart seeds are spawned from ``seed``, so the result is deterministic
    and independent of ``jobs``. Ties in inertia go to the earliest restart.

    Raises:
        ValueError: If k > n or restarts < 1
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if k < 1 or k > n:
        raise ValueError(f"k must be in [1, n={n}], got {k}")
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")

    children = np.random.SeedSequence(seed).spawn(restarts)

    def run(child: np.random.SeedSequence) -> Clustering:
        clustering, _ = lloyd(X, kmeans_pp_seed(X, k, child), max_iter)
        return clustering

    if jobs > 1 and restarts > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, children))
    else:
        results = [run(child) for child in children]

    best = min(range(restarts), key=lambda r: (results[r].inertia, r))
    logger.debug(
        "k-means k=%d: best restart %d of %d, inertia %.6g",
        k,
        best,
        restarts,
        results[best].inertia,
    )
    winner = results[best]
    return Clustering(
        centroids=winner.centroids,
        assignments=winner.assignments,
        inertia=winner.inertia,
        seed=seed,
        iterations=winner.iterations,
    )


@dataclass(frozen=True, eq=False)
class KMeansPartitioner:
    """Partitioner backed by :func:`kmeans_fit`."""

    k: int
    restarts: int = DEFAULT_RESTARTS
    seed: int = 0
    max_iter: int = DEFAULT_MAX_ITER
    jobs: int = 1

    def fit(self, X: np.ndarray) -> Clustering:
        return kmeans_fit(X, self.k, self.restarts, self.seed, self.max_iter, self.jobs)
