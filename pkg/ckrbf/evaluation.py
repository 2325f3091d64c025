"""Cross-validated accuracy, (C, γ) grid search and the P_f stability index.

A grid search prepares each fold once: the γ-independent Gram factors of the
chosen kernel family are computed per fold (or once for the whole dataset in
transductive mode) and every (C, γ) cell only re-exponentiates them and
retrains the SVM.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ckrbf.clustering import DEFAULT_RESTARTS, Clustering, assign_many, kmeans_fit
from ckrbf.dataset import Dataset, FoldPlan, UnitIntervalScaler
from ckrbf.kernel import (
    DEFAULT_EPSILON,
    GramParts,
    Kernel,
    KernelModel,
    MahalanobisRbfKernel,
    RbfKernel,
    build_kernel,
    build_kernel_from_clustering,
    covariance,
    mahalanobis_rbf_kernel,
    radial_variant,
)
from ckrbf.solver import DEFAULT_MAX_ITER, DEFAULT_TOL, SvmProblem, predict, train_svc

logger = logging.getLogger(__name__)

FAMILIES = ("rbf", "mrbf", "ckrbf", "ckrbf-radial", "mkrbf")
MODES = ("transductive", "strict")
SCALINGS = ("none", "strict")

ProgressCallback = Callable[[int, int], None]


# ---------------------------------------------------------------------------
# Specifications and results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and the parameters needed to build it for some features.

    Attributes:
        family: one of ``FAMILIES``
        k: cluster count for the clustered families
        gamma: kernel width used by :func:`cross_validate`
        eps: covariance regularisation strength
        mode: ``transductive`` clusters all features once, ``strict`` only
            the training part of every fold
        seed: k-means seed
        restarts: k-means++ restarts
        scaling: ``strict`` rescales every fold to [0, 1] from its training part
        tol: SMO stopping tolerance
        max_iter: SMO pair-update cap
    """

    family: str = "ckrbf"
    k: int = 2
    gamma: float = 1.0
    eps: float = DEFAULT_EPSILON
    mode: str = "transductive"
    seed: int = 0
    restarts: int = DEFAULT_RESTARTS
    scaling: str = "none"
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}; expected one of {FAMILIES}")
        if self.mode not in MODES:
            raise ValueError(f"unknown clustering mode {self.mode!r}; expected one of {MODES}")
        if self.scaling not in SCALINGS:
            raise ValueError(f"unknown scaling {self.scaling!r}; expected one of {SCALINGS}")
        if self.scaling == "strict" and self.mode != "strict":
            raise ValueError("strict scaling needs mode='strict'")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.family == "mkrbf" and self.k < 2:
            raise ValueError("the per-cluster baseline needs k >= 2")

    @property
    def clustered(self) -> bool:
        return self.family in ("ckrbf", "ckrbf-radial", "mkrbf")

    @property
    def label(self) -> str:
        """Short identifier used in reports, e.g. ``ckrbf(2)`` or ``m3rbf``."""
        if self.family == "mkrbf":
            return f"m{self.k}rbf"
        if self.family in ("ckrbf", "ckrbf-radial"):
            return f"{self.family}({self.k})"
        return self.family

    def with_gamma(self, gamma: float) -> "KernelSpec":
        return replace(self, gamma=gamma)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "family": self.family,
            "k": self.k,
            "gamma": self.gamma,
            "eps": self.eps,
            "mode": self.mode,
            "seed": self.seed,
            "restarts": self.restarts,
            "scaling": self.scaling,
            "tol": self.tol,
            "max_iter": self.max_iter,
        }


def _check_axis(values: Sequence[float], name: str) -> Tuple[float, ...]:
    values = tuple(float(v) for v in values)
    if not values:
        raise ValueError(f"{name} must not be empty")
    if any(not np.isfinite(v) or v <= 0 for v in values):
        raise ValueError(f"{name} must be positive")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError(f"{name} must be strictly increasing")
    return values


@dataclass(frozen=True)
class GridSpec:
    """Cartesian grid of C and γ values (both strictly increasing)."""

    c_values: Tuple[float, ...]
    gamma_values: Tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "c_values", _check_axis(self.c_values, "c_values"))
        object.__setattr__(self, "gamma_values", _check_axis(self.gamma_values, "gamma_values"))

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.c_values), len(self.gamma_values)

    @property
    def size(self) -> int:
        return len(self.c_values) * len(self.gamma_values)

    def to_dict(self) -> Dict[str, Any]:
        return {"c_values": list(self.c_values), "gamma_values": list(self.gamma_values)}


def default_grid() -> GridSpec:
    """C ∈ {2^-5, 2^-3, ..., 2^15}, γ ∈ {10^-5, ..., 10^1}."""
    return GridSpec(
        c_values=tuple(2.0**e for e in range(-5, 16, 2)),
        gamma_values=tuple(10.0**e for e in range(-5, 2)),
    )


def limited_search_specs() -> List[GridSpec]:
    """Three-value γ windows at C = 1: γ ∈ {10^i, 10^(i+1), 10^(i+2)} for i = 0..-5."""
    return [
        GridSpec(c_values=(1.0,), gamma_values=(10.0**i, 10.0 ** (i + 1), 10.0 ** (i + 2)))
        for i in range(0, -6, -1)
    ]


@dataclass(frozen=True)
class FoldOutcome:
    """Accuracy of one fold; ``accuracy`` is None when the fold was skipped."""

    index: int
    accuracy: Optional[float]
    correct: int
    test_size: int
    skipped: bool = False


@dataclass(frozen=True)
class CvReport:
    """Mean accuracy over the evaluated folds plus the per-fold detail."""

    accuracy: float
    folds: Tuple[FoldOutcome, ...]

    @property
    def skipped(self) -> List[int]:
        return [f.index for f in self.folds if f.skipped]


@dataclass(frozen=True, eq=False)
class GridResult:
    """Mean CV accuracy for every (C, γ) cell; ``scores[i, j]`` is at (C_i, γ_j)."""

    scores: np.ndarray
    spec: GridSpec
    kernel_id: str
    dataset_id: str
    folds: int
    seed: int
    skipped_folds: Tuple[int, ...] = ()

    def __post_init__(self) -> None:
        scores = np.array(self.scores, dtype=np.float64, copy=True)
        if scores.shape != self.spec.shape:
            raise ValueError(f"scores shape {scores.shape} does not match grid {self.spec.shape}")
        if np.any(scores < 0) or np.any(scores > 1):
            raise ValueError("scores must lie in [0, 1]")
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "skipped_folds", tuple(self.skipped_folds))

    def best(self) -> Tuple[float, float, float]:
        """(score, C, γ) of the best cell; ties go to the first cell in row-major order."""
        i, j = np.unravel_index(int(np.argmax(self.scores)), self.scores.shape)
        return float(self.scores[i, j]), self.spec.c_values[i], self.spec.gamma_values[j]

    def rows(self) -> List[Tuple[float, float, float]]:
        """Heatmap rows ``(C, gamma, accuracy)``."""
        return [
            (c, g, float(self.scores[i, j]))
            for i, c in enumerate(self.spec.c_values)
            for j, g in enumerate(self.spec.gamma_values)
        ]

    def to_dict(self) -> Dict[str, Any]:
        score, c, g = self.best()
        return {
            "kernel": self.kernel_id,
            "dataset": self.dataset_id,
            "folds": self.folds,
            "seed": self.seed,
            "grid": self.spec.to_dict(),
            "scores": self.scores.tolist(),
            "best": {"accuracy": score, "C": c, "gamma": g},
            "skipped_folds": list(self.skipped_folds),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GridResult":
        return cls(
            scores=np.asarray(data["scores"], dtype=np.float64),
            spec=GridSpec(tuple(data["grid"]["c_values"]), tuple(data["grid"]["gamma_values"])),
            kernel_id=data["kernel"],
            dataset_id=data["dataset"],
            folds=data["folds"],
            seed=data["seed"],
            skipped_folds=tuple(data.get("skipped_folds", ())),
        )


@dataclass(frozen=True, eq=False)
class PfCurve:
    """Empirical P_f(α): share of grid cells scoring at least α.

    Attributes:
        thresholds: sorted distinct scores
        probabilities: P̂_f at each threshold, non-increasing, first one is 1
        cells: number of grid cells the curve was counted over
    """

    thresholds: np.ndarray
    probabilities: np.ndarray
    cells: int = 0

    def __post_init__(self) -> None:
        thresholds = np.array(self.thresholds, dtype=np.float64, copy=True)
        probabilities = np.array(self.probabilities, dtype=np.float64, copy=True)
        if thresholds.ndim != 1 or thresholds.size == 0:
            raise ValueError("a P_f curve needs at least one threshold")
        if probabilities.shape != thresholds.shape:
            raise ValueError("thresholds and probabilities differ in length")
        if np.any(np.diff(thresholds) <= 0):
            raise ValueError("thresholds must be strictly increasing")
        if np.any(np.diff(probabilities) > 0):
            raise ValueError("probabilities must be non-increasing")
        if np.any(probabilities < 0) or np.any(probabilities > 1):
            raise ValueError("probabilities must lie in [0, 1]")
        thresholds.setflags(write=False)
        probabilities.setflags(write=False)
        object.__setattr__(self, "thresholds", thresholds)
        object.__setattr__(self, "probabilities", probabilities)

    def __call__(self, alpha: float) -> float:
        """P̂_f(α) for any α, including values between thresholds."""
        idx = int(np.searchsorted(self.thresholds, alpha, side="left"))
        if idx >= self.thresholds.size:
            return 0.0
        return float(self.probabilities[idx])

    def rows(self) -> List[Tuple[float, float]]:
        return list(zip(self.thresholds.tolist(), self.probabilities.tolist()))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "cells": self.cells,
            "thresholds": self.thresholds.tolist(),
            "probabilities": self.probabilities.tolist(),
        }


@dataclass(frozen=True)
class DatasetDiagnostics:
    """Size, class balance and relative covariance gaps of a 2-means split."""

    name: str
    d: int
    n_negative: int
    n_positive: int
    sigma1_vs_identity: float
    sigma2_vs_identity: float
    sigma2_vs_sigma1: float
    sum_vs_global: float
    seed: int = 0

    @property
    def ratios(self) -> Tuple[float, float, float, float]:
        return (
            self.sigma1_vs_identity,
            self.sigma2_vs_identity,
            self.sigma2_vs_sigma1,
            self.sum_vs_global,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dataset": self.name,
            "d": self.d,
            "n_negative": self.n_negative,
            "n_positive": self.n_positive,
            "sigma1_vs_identity": self.sigma1_vs_identity,
            "sigma2_vs_identity": self.sigma2_vs_identity,
            "sigma2_vs_sigma1": self.sigma2_vs_sigma1,
            "sum_vs_global": self.sum_vs_global,
            "seed": self.seed,
        }


# ---------------------------------------------------------------------------
# Kernel construction per family
# ---------------------------------------------------------------------------


def _refit(clustering: Clustering, X: np.ndarray) -> Clustering:
    """The same Voronoi cells, with assignments for the rows of ``X``."""
    assignments = assign_many(clustering, X)
    inertia = float(np.sum((X - clustering.centroids[assignments]) ** 2))
    return Clustering(clustering.centroids, assignments, inertia, seed=clustering.seed)


def cluster_model(
    X: np.ndarray, spec: KernelSpec, clustering: Optional[Clustering] = None, jobs: int = 1
) -> KernelModel:
    """Cluster-covariance kernel for ``X``, optionally on a fixed partition.

    ``jobs`` threads run the k-means restarts when no partition is given.
    """
    if clustering is None:
        return build_kernel(X, spec.k, spec.gamma, spec.eps, spec.seed, spec.restarts, jobs=jobs)
    return build_kernel_from_clustering(X, _refit(clustering, X), spec.gamma, spec.eps)


def make_kernel(
    spec: KernelSpec, X: np.ndarray, clustering: Optional[Clustering] = None, jobs: int = 1
) -> Kernel:
    """Build the kernel of ``spec.family`` from the feature matrix ``X``.

    Raises:
        ValueError: For the ``mkrbf`` family, which is a set of kernels
    """
    if spec.family == "rbf":
        return RbfKernel(spec.gamma)
    if spec.family == "mrbf":
        return mahalanobis_rbf_kernel(X, spec.gamma, spec.eps)
    if spec.family == "ckrbf":
        return cluster_model(X, spec, clustering, jobs)
    if spec.family == "ckrbf-radial":
        return radial_variant(cluster_model(X, spec, clustering, jobs))
    raise ValueError("the per-cluster baseline has no single kernel")


# ---------------------------------------------------------------------------
# Fold preparation
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class _GramFold:
    fit: GramParts
    cross: GramParts
    labels: np.ndarray

    def predict(self, C: float, gamma: float, spec: KernelSpec) -> np.ndarray:
        problem = SvmProblem(self.fit.at(gamma), self.labels, C, spec.tol, spec.max_iter)
        return predict(train_svc(problem), self.cross.at(gamma))


@dataclass(frozen=True, eq=False)
class _ConstantFold:
    label: int
    size: int

    def predict(self, C: float, gamma: float, spec: KernelSpec) -> np.ndarray:
        return np.full(self.size, self.label, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class _PartitionedFold:
    size: int
    cells: Tuple[Tuple[np.ndarray, Union[_GramFold, _ConstantFold]], ...]

    def predict(self, C: float, gamma: float, spec: KernelSpec) -> np.ndarray:
        out = np.empty(self.size, dtype=np.int64)
        for positions, predictor in self.cells:
            out[positions] = predictor.predict(C, gamma, spec)
        return out


Predictor = Union[_GramFold, _ConstantFold, _PartitionedFold]


@dataclass(frozen=True, eq=False)
class _Fold:
    index: int
    test_labels: np.ndarray
    predictor: Optional[Predictor]


def _majority(labels: np.ndarray) -> int:
    return 1 if np.sum(labels == 1) >= np.sum(labels == -1) else -1


def _per_cluster_fold(
    model: KernelModel, X_train: np.ndarray, y_train: np.ndarray, X_test: np.ndarray
) -> _PartitionedFold:
    train_cells = assign_many(model.clustering, X_train)
    test_cells = assign_many(model.clustering, X_test)
    cells = []
    for c in np.unique(test_cells):
        positions = np.flatnonzero(test_cells == c)
        members = np.flatnonzero(train_cells == c)
        predictor: Union[_GramFold, _ConstantFold]
        if members.size == 0:
            fallback = _majority(y_train)
            logger.warning(
                "Cluster %d has no training points; predicting the training majority %+d",
                c,
                fallback,
            )
            predictor = _ConstantFold(fallback, positions.size)
        elif np.unique(y_train[members]).size == 1:
            predictor = _ConstantFold(int(y_train[members][0]), positions.size)
        else:
            kernel = MahalanobisRbfKernel(model.sigmas[c], 1.0)
            predictor = _GramFold(
                fit=kernel.gram_parts(X_train[members]),
                cross=kernel.gram_parts(X_test[positions], X_train[members]),
                labels=y_train[members],
            )
        cells.append((positions, predictor))
    return _PartitionedFold(X_test.shape[0], tuple(cells))


def _prepare_folds(
    ds: Dataset,
    spec: KernelSpec,
    plan: FoldPlan,
    clustering: Optional[Clustering] = None,
    jobs: int = 1,
) -> List[_Fold]:
    X, y = ds.features, ds.labels
    shared_parts: Optional[GramParts] = None
    shared_model: Optional[KernelModel] = None
    if spec.mode == "transductive":
        if spec.family == "mkrbf":
            shared_model = cluster_model(X, spec, clustering, jobs)
        else:
            shared_parts = make_kernel(spec, X, clustering, jobs).gram_parts(X)

    folds = []
    for index, (train, test) in enumerate(plan):
        if test.size == 0:
            raise ValueError(f"fold {index} has an empty test set")
        y_train = y[train]
        if np.unique(y_train).size < 2:
            logger.warning(
                "%s: fold %d has a single-class training set; skipping it", ds.name, index
            )
            folds.append(_Fold(index, y[test], None))
            continue

        if spec.scaling == "strict":
            scaler = UnitIntervalScaler().fit(X[train])
            X_train, X_test = scaler.transform(X[train]), scaler.transform(X[test])
        else:
            X_train, X_test = X[train], X[test]

        predictor: Predictor
        if spec.family == "mkrbf":
            model = shared_model if shared_model is not None else cluster_model(
                X_train, spec, clustering, jobs
            )
            predictor = _per_cluster_fold(model, X_train, y_train, X_test)
        elif shared_parts is not None:
            predictor = _GramFold(
                shared_parts.take(train, train), shared_parts.take(test, train), y_train
            )
        else:
            kernel = make_kernel(spec, X_train, clustering, jobs)
            predictor = _GramFold(
                kernel.gram_parts(X_train), kernel.gram_parts(X_test, X_train), y_train
            )
        folds.append(_Fold(index, y[test], predictor))
    return folds


def _score(
    folds: Sequence[_Fold], C: float, gamma: float, spec: KernelSpec, jobs: int = 1
) -> CvReport:
    def run(fold: _Fold) -> FoldOutcome:
        size = int(fold.test_labels.size)
        if fold.predictor is None:
            return FoldOutcome(fold.index, None, 0, size, skipped=True)
        predicted = fold.predictor.predict(C, gamma, spec)
        correct = int(np.sum(predicted == fold.test_labels))
        return FoldOutcome(fold.index, correct / size, correct, size)

    if jobs > 1 and len(folds) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = tuple(pool.map(run, folds))
    else:
        outcomes = tuple(run(fold) for fold in folds)

    scored = [o.accuracy for o in outcomes if o.accuracy is not None]
    if not scored:
        raise ValueError("every fold was skipped: all training sets are single-class")
    return CvReport(float(np.mean(scored)), outcomes)


# ---------------------------------------------------------------------------
# Cross-validation and grid search
# ---------------------------------------------------------------------------


def cross_validate_detailed(
    ds: Dataset,
    kernel_spec: KernelSpec,
    C: float,
    plan: FoldPlan,
    clustering: Optional[Clustering] = None,
    jobs: int = 1,
) -> CvReport:
    """Per-fold accuracies at (C, kernel_spec.gamma); see :func:`cross_validate`."""
    if C <= 0:
        raise ValueError(f"C must be positive, got {C}")
    folds = _prepare_folds(ds, kernel_spec, plan, clustering, jobs)
    report = _score(folds, C, kernel_spec.gamma, kernel_spec, jobs)
    if report.skipped:
        logger.warning("%s: skipped folds %s", ds.name, report.skipped)
    return report


def cross_validate(
    ds: Dataset,
    kernel_spec: KernelSpec,
    C: float,
    plan: FoldPlan,
    clustering: Optional[Clustering] = None,
    jobs: int = 1,
) -> float:
    """Mean test-fold accuracy of the SVM at (C, kernel_spec.gamma).

    In transductive mode the kernel is built once from all features and only
    the SVM is retrained per fold; in strict mode the kernel is rebuilt from
    each training part. Folds whose training part is single-class are skipped
    with a warning.

    Raises:
        ValueError: If every fold is skipped
    """
    return cross_validate_detailed(ds, kernel_spec, C, plan, clustering, jobs).accuracy


def grid_search(
    ds: Dataset,
    kernel_spec: KernelSpec,
    spec: GridSpec,
    plan: FoldPlan,
    jobs: int = 1,
    seed: Optional[int] = None,
    clustering: Optional[Clustering] = None,
    progress: Optional[ProgressCallback] = None,
) -> GridResult:
    """Cross-validated accuracy for every (C, γ) cell of ``spec``.

    The kernel (and, for clustered families, the clustering) is built once
    per dataset or per fold and reused across γ through its γ-independent
    factors. ``kernel_spec.gamma`` is ignored.

    Args:
        ds: dataset to evaluate
        kernel_spec: kernel family and construction parameters
        spec: grid of C and γ values
        plan: cross-validation folds
        jobs: worker threads evaluating cells concurrently and running the
            k-means restarts
        seed: seed recorded in the result (defaults to ``kernel_spec.seed``)
        clustering: fixed partition for the clustered families
        progress: called as ``progress(done, total)`` after every cell

    Returns:
        GridResult with cells aggregated by index
    """
    folds = _prepare_folds(ds, kernel_spec, plan, clustering, jobs)
    cells = [(i, j) for i in range(spec.shape[0]) for j in range(spec.shape[1])]
    scores = np.empty(spec.shape)
    total = len(cells)
    done = 0

    def run(cell: Tuple[int, int]) -> CvReport:
        i, j = cell
        return _score(folds, spec.c_values[i], spec.gamma_values[j], kernel_spec)

    def record(cell: Tuple[int, int], report: CvReport) -> None:
        nonlocal done
        scores[cell] = report.accuracy
        done += 1
        logger.debug(
            "%s %s C=%g gamma=%g: %.4f",
            ds.name,
            kernel_spec.label,
            spec.c_values[cell[0]],
            spec.gamma_values[cell[1]],
            report.accuracy,
        )
        if progress is not None:
            progress(done, total)

    skipped: Tuple[int, ...] = tuple(f.index for f in folds if f.predictor is None)
    if jobs > 1 and total > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for cell, report in zip(cells, pool.map(run, cells)):
                record(cell, report)
    else:
        for cell in cells:
            record(cell, run(cell))

    if skipped:
        logger.warning("%s: skipped folds %s", ds.name, list(skipped))
    logger.info("%s %s: grid of %d cells done", ds.name, kernel_spec.label, total)
    return GridResult(
        scores=scores,
        spec=spec,
        kernel_id=kernel_spec.label,
        dataset_id=ds.name,
        folds=plan.fold_count,
        seed=kernel_spec.seed if seed is None else seed,
        skipped_folds=skipped,
    )


def fixed_c_best(
    ds: Dataset,
    kernel_spec: KernelSpec,
    gamma_values: Sequence[float],
    plan: FoldPlan,
    C: float = 1.0,
    jobs: int = 1,
) -> Tuple[float, float]:
    """Best CV accuracy over a γ sweep with C held fixed.

    Returns:
        (best accuracy, γ achieving it)
    """
    result = grid_search(ds, kernel_spec, GridSpec((C,), tuple(gamma_values)), plan, jobs=jobs)
    score, _, gamma = result.best()
    return score, gamma


def mk_rbf_baseline(
    ds: Dataset,
    k: int,
    C: float,
    gamma: float,
    plan: FoldPlan,
    eps: float = DEFAULT_EPSILON,
    seed: int = 0,
    restarts: int = DEFAULT_RESTARTS,
    mode: str = "transductive",
    clustering: Optional[Clustering] = None,
) -> float:
    """Mean CV accuracy of one Mahalanobis-RBF SVM per k-means cluster.

    Each cluster's SVM uses that cluster's regularised covariance and is
    trained on the fold's training points inside the cluster. Test points go
    to the SVM of their cluster; single-class clusters predict their class
    and clusters without training points predict the training majority.

    Raises:
        ValueError: If k < 2
    """
    if k < 2:
        raise ValueError(f"the per-cluster baseline needs k >= 2, got {k}")
    spec = KernelSpec(
        family="mkrbf", k=k, gamma=gamma, eps=eps, mode=mode, seed=seed, restarts=restarts
    )
    return cross_validate(ds, spec, C, plan, clustering=clustering)


# ---------------------------------------------------------------------------
# Stability index
# ---------------------------------------------------------------------------


def pf_curve_from_scores(scores: np.ndarray) -> PfCurve:
    """P̂_f(α) = #{cells with score >= α} / #cells at every distinct score."""
    flat = np.sort(np.asarray(scores, dtype=np.float64).ravel())
    if flat.size == 0:
        raise ValueError("cannot build a P_f curve from no scores")
    thresholds = np.unique(flat)
    at_least = flat.size - np.searchsorted(flat, thresholds, side="left")
    return PfCurve(thresholds, at_least / flat.size, cells=int(flat.size))


def pf_curve(r: GridResult) -> PfCurve:
    """Empirical P_f curve of a grid result."""
    return pf_curve_from_scores(r.scores)


def _step_area(curve: PfCurve, alpha_min: float) -> float:
    t, p = curve.thresholds, curve.probabilities
    # P̂ is 1 up to the curve's own minimum and p[k+1] on (t[k], t[k+1]]
    area = t[0] - alpha_min
    if t.size > 1:
        area += float(np.sum(p[1:] * np.diff(t)))
    return float(area)


def pf_auc(curves: Sequence[PfCurve]) -> List[float]:
    """Area under every curve over the shared [α_min, α_max] interval.

    α_min is the lowest and α_max the highest threshold over all curves;
    a curve contributes nothing beyond its own highest threshold.

    Raises:
        ValueError: If ``curves`` is empty
    """
    if not curves:
        raise ValueError("pf_auc needs at least one curve")
    alpha_min = min(float(c.thresholds[0]) for c in curves)
    return [_step_area(c, alpha_min) for c in curves]


# ---------------------------------------------------------------------------
# Diagnostics and comparisons
# ---------------------------------------------------------------------------


def _relative_gap(a: np.ndarray, b: np.ndarray) -> float:
    denominator = np.linalg.norm(a, "fro") + np.linalg.norm(b, "fro")
    if denominator == 0:
        return 0.0
    return float(np.linalg.norm(a - b, "fro") / denominator)


def dataset_diagnostics(
    ds: Dataset, seed: int = 0, restarts: int = DEFAULT_RESTARTS, jobs: int = 1
) -> DatasetDiagnostics:
    """Split ``ds`` with 2-means and compare the cluster covariances.

    The ratios are ‖Σ1−I‖/(‖Σ1‖+‖I‖), ‖Σ2−I‖/(‖Σ2‖+‖I‖), ‖Σ2−Σ1‖/(‖Σ2‖+‖Σ1‖)
    and ‖(Σ1+Σ2)−Σ‖/(‖Σ1+Σ2‖+‖Σ‖) in the Frobenius norm, with Σ the
    covariance of the whole dataset.
    """
    X = ds.features
    clustering = kmeans_fit(X, 2, restarts=restarts, seed=seed, jobs=jobs)
    sigma1 = covariance(X[clustering.members(0)])
    sigma2 = covariance(X[clustering.members(1)])
    sigma = covariance(X)
    identity = np.eye(ds.d)
    return DatasetDiagnostics(
        name=ds.name,
        d=ds.d,
        n_negative=ds.n_negative,
        n_positive=ds.n_positive,
        sigma1_vs_identity=_relative_gap(sigma1, identity),
        sigma2_vs_identity=_relative_gap(sigma2, identity),
        sigma2_vs_sigma1=_relative_gap(sigma2, sigma1),
        sum_vs_global=_relative_gap(sigma1 + sigma2, sigma),
        seed=seed,
    )


def win_percentage(
    results_a: Sequence[GridResult], results_b: Sequence[GridResult]
) -> float:
    """Share of paired cells where A's best score strictly beats B's.

    Raises:
        ValueError: If the inputs are empty or not paired by dataset and grid
    """
    if not results_a or len(results_a) != len(results_b):
        raise ValueError(
            f"results must be non-empty and paired, got {len(results_a)} and {len(results_b)}"
        )
    wins = 0
    for a, b in zip(results_a, results_b):
        if a.dataset_id != b.dataset_id or a.spec != b.spec:
            raise ValueError(
                f"unpaired results: {a.dataset_id}/{a.spec} vs {b.dataset_id}/{b.spec}"
            )
        if float(a.scores.max()) > float(b.scores.max()):
            wins += 1
    return wins / len(results_a)


@dataclass(frozen=True)
class ComparisonTable:
    """AUCs and pairwise win percentages of several kernel families on one dataset."""

    dataset_id: str
    auc: Dict[str, float] = field(default_factory=dict)
    wins: Dict[Tuple[str, str], float] = field(default_factory=dict)

    def auc_rows(self) -> List[Tuple[str, float]]:
        return sorted(self.auc.items())

    def win_rows(self) -> List[Tuple[str, str, float]]:
        return [(a, b, w) for (a, b), w in sorted(self.wins.items())]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dataset": self.dataset_id,
            "auc": dict(self.auc_rows()),
            "wins": [
                {"challenger": a, "baseline": b, "win_percentage": w}
                for a, b, w in self.win_rows()
            ],
        }


def compare_kernels(
    ds: Dataset,
    kernel_specs: Sequence[KernelSpec],
    grid: GridSpec,
    plan: FoldPlan,
    baselines: Sequence[str] = ("rbf", "mrbf"),
    jobs: int = 1,
    progress: Optional[ProgressCallback] = None,
) -> Tuple[ComparisonTable, Dict[str, GridResult]]:
    """Full-grid AUCs and limited-search win percentages for several families.

    Every spec is searched on ``grid`` for the P_f AUC comparison and on the
    six three-value γ windows of :func:`limited_search_specs`. Each
    non-baseline family is then scored against every family listed in
    ``baselines``.

    Returns:
        (comparison table, full-grid result per kernel label)
    """
    labels = [s.label for s in kernel_specs]
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate kernel specs: {labels}")

    windows = limited_search_specs()
    full: Dict[str, GridResult] = {}
    limited: Dict[str, List[GridResult]] = {}
    for kspec in kernel_specs:
        full[kspec.label] = grid_search(ds, kspec, grid, plan, jobs=jobs, progress=progress)
        limited[kspec.label] = [grid_search(ds, kspec, w, plan, jobs=jobs) for w in windows]

    aucs = pf_auc([pf_curve(full[label]) for label in labels])
    wins: Dict[Tuple[str, str], float] = {}
    for kspec in kernel_specs:
        if kspec.family in baselines:
            continue
        for base in kernel_specs:
            if base.family in baselines:
                wins[(kspec.label, base.label)] = win_percentage(
                    limited[kspec.label], limited[base.label]
                )
    return ComparisonTable(ds.name, dict(zip(labels, aucs)), wins), full
