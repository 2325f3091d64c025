"""Binary soft-margin SVM trained in the dual on a precomputed Gram matrix.

The solver is a sequential minimal optimisation loop with maximal violating
pair selection. It reads the kernel diagonal from the Gram matrix, so kernels
whose self-similarity is not 1 are handled like any other.

Dual problem (maximised):

    W(α) = Σ αᵢ - ½ Σᵢ Σⱼ αᵢ αⱼ yᵢ yⱼ Kᵢⱼ,   0 ≤ αᵢ ≤ C,   Σ αᵢ yᵢ = 0
"""

import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional

import numpy as np

from ckrbf.exceptions import ConvergenceError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-3
DEFAULT_MAX_ITER = 10_000_000
SYMMETRY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SvmProblem:
    """Training problem: Gram matrix, ±1 labels, box constraint and tolerance."""

    gram: np.ndarray
    labels: np.ndarray
    C: float = 1.0
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self) -> None:
        gram = np.asarray(self.gram, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.float64)
        if gram.ndim != 2 or gram.shape[0] != gram.shape[1]:
            raise ValueError(f"gram must be square, got shape {gram.shape}")
        if labels.shape != (gram.shape[0],):
            raise ValueError(f"labels must have shape ({gram.shape[0]},), got {labels.shape}")
        if np.max(np.abs(gram - gram.T), initial=0.0) > SYMMETRY_TOL:
            raise ValueError("gram matrix is not symmetric")
        if not np.all(np.isin(labels, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")
        if self.C <= 0:
            raise ValueError(f"C must be positive, got {self.C}")
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        object.__setattr__(self, "gram", gram)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return int(self.labels.shape[0])


@dataclass(frozen=True, eq=False)
class SvmModel:
    """Trained dual SVM.

    Attributes:
        dual_coef: αᵢ yᵢ for every training point (zero off the support)
        bias: intercept b of the decision function
        support_indices: indices with αᵢ > 0
        objective: final dual objective W(α)
        C: box constraint the model was trained with
        iterations: pair updates performed
    """

    dual_coef: np.ndarray
    bias: float
    support_indices: np.ndarray
    objective: float
    C: float = 1.0
    iterations: int = 0

    @property
    def alphas(self) -> np.ndarray:
        return np.abs(self.dual_coef)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dual_coef": self.dual_coef.tolist(),
            "bias": float(self.bias),
            "support_indices": self.support_indices.tolist(),
            "objective": float(self.objective),
            "C": self.C,
            "iterations": self.iterations,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SvmModel":
        return cls(
            dual_coef=np.asarray(data["dual_coef"], dtype=np.float64),
            bias=float(data["bias"]),
            support_indices=np.asarray(data["support_indices"], dtype=np.int64),
            objective=float(data["objective"]),
            C=data.get("C", 1.0),
            iterations=data.get("iterations", 0),
        )


def dual_objective(alpha: np.ndarray, problem: SvmProblem) -> float:
    """W(α) for the given problem."""
    v = alpha * problem.labels
    return float(np.sum(alpha) - 0.5 * v @ problem.gram @ v)


def _violating_sets(alpha: np.ndarray, y: np.ndarray, C: float):
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
    return up, low


def _bias(alpha: np.ndarray, y: np.ndarray, minus_yG: np.ndarray, C: float) -> float:
    free = (alpha > 0) & (alpha < C)
    if np.any(free):
        return float(np.mean(minus_yG[free]))
    lower = ((y > 0) & (alpha == 0)) | ((y < 0) & (alpha == C))
    upper = ((y > 0) & (alpha == C)) | ((y < 0) & (alpha == 0))
    lo = np.max(minus_yG[lower]) if np.any(lower) else None
    hi = np.min(minus_yG[upper]) if np.any(upper) else None
    if lo is None and hi is None:
        return 0.0
    if lo is None:
        return float(hi)
    if hi is None:
        return float(lo)
    return float((lo + hi) / 2.0)


def _model(alpha: np.ndarray, problem: SvmProblem, G: np.ndarray, iterations: int) -> SvmModel:
    y = problem.labels
    minus_yG = -y * G
    dual_coef = alpha * y
    dual_coef.setflags(write=False)
    support = np.flatnonzero(alpha > 0)
    # W(α) = -(½ αᵀ(G - e)) since G = Qα - e
    objective = float(-0.5 * alpha @ (G - 1.0))
    return SvmModel(
        dual_coef=dual_coef,
        bias=_bias(alpha, y, minus_yG, problem.C),
        support_indices=support,
        objective=objective,
        C=problem.C,
        iterations=iterations,
    )


def kkt_violation(model: SvmModel, problem: SvmProblem) -> float:
    """Maximal violating-pair gap of ``model`` on ``problem`` (<= tol at convergence)."""
    y = problem.labels
    alpha = model.alphas
    G = y * (problem.gram @ model.dual_coef) - 1.0
    minus_yG = -y * G
    up, low = _violating_sets(alpha, y, problem.C)
    if not np.any(up) or not np.any(low):
        return 0.0
    return float(max(0.0, np.max(minus_yG[up]) - np.min(minus_yG[low])))


def train_svc(
    p: SvmProblem, callback: Optional[Callable[[int, float], None]] = None
) -> SvmModel:
    """Solve the dual by pairwise updates until the KKT gap is at most ``p.tol``.

    Args:
        p: training problem
        callback: called as ``callback(iteration, dual_objective)`` after
            every pair update

    Returns:
        Trained SvmModel

    Raises:
        ConvergenceError: If ``p.max_iter`` pair updates are exhausted; the
            error carries the last iterate
    """
    K, y, C = p.gram, p.labels, p.C
    n = p.n
    alpha = np.zeros(n)
    G = -np.ones(n)
    diag = np.diag(K)

    for iteration in range(p.max_iter):
        minus_yG = -y * G
        up, low = _violating_sets(alpha, y, C)
        if not np.any(up) or not np.any(low):
            return _model(alpha, p, G, iteration)
        i = int(np.argmax(np.where(up, minus_yG, -np.inf)))
        j = int(np.argmin(np.where(low, minus_yG, np.inf)))
        gap = minus_yG[i] - minus_yG[j]
        if gap <= p.tol:
            logger.debug("SMO converged after %d updates (gap %.3g)", iteration, gap)
            return _model(alpha, p, G, iteration)

        eta = diag[i] + diag[j] - 2.0 * K[i, j]
        step = gap / eta if eta > 0 else np.inf
        room_i = C - alpha[i] if y[i] > 0 else alpha[i]
        room_j = alpha[j] if y[j] > 0 else C - alpha[j]
        step = min(step, room_i, room_j)

        alpha[i] += y[i] * step
        alpha[j] -= y[j] * step
        if step == room_i:
            alpha[i] = C if y[i] > 0 else 0.0
        if step == room_j:
            alpha[j] = 0.0 if y[j] > 0 else C
        G += step * y * (K[:, i] - K[:, j])

        if callback is not None:
            callback(iteration, float(-0.5 * alpha @ (G - 1.0)))

    model = _model(alpha, p, G, p.max_iter)
    raise ConvergenceError(
        f"SMO did not reach tol={p.tol:g} within {p.max_iter} pair updates", model=model
    )


def decision_values(m: SvmModel, gram_rows: np.ndarray) -> np.ndarray:
    """Σᵢ dual_coef[i] · K(x, xᵢ) + bias for every row of ``gram_rows``."""
    gram_rows = np.atleast_2d(np.asarray(gram_rows, dtype=np.float64))
    if gram_rows.shape[1] != m.dual_coef.shape[0]:
        raise ValueError(
            f"gram rows must have {m.dual_coef.shape[0]} columns, got {gram_rows.shape[1]}"
        )
    return gram_rows @ m.dual_coef + m.bias


def decision_function(m: SvmModel, gram_row: np.ndarray) -> float:
    """Decision value for one point given its kernel values against the training set."""
    gram_row = np.asarray(gram_row, dtype=np.float64)
    if gram_row.shape != m.dual_coef.shape:
        raise ValueError(
            f"gram row must have length {m.dual_coef.shape[0]}, got shape {gram_row.shape}"
        )
    return float(np.dot(m.dual_coef, gram_row) + m.bias)


def predict(m: SvmModel, gram_rows: np.ndarray) -> np.ndarray:
    """Labels in {-1, +1}; a decision value of exactly 0 maps to +1."""
    values = decision_values(m, gram_rows)
    return np.where(values >= 0, 1, -1).astype(np.int64)
