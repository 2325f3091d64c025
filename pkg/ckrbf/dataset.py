"""Benchmark dataset loading, scaling and cross-validation folding."""

import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Optional, Tuple, Union

import numpy as np
from sklearn.model_selection import KFold, StratifiedKFold

from ckrbf.exceptions import DatasetError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Dataset:
    """Dense binary classification data.

    Attributes:
        features: n x d matrix of finite reals
        labels: length-n vector with entries in {-1, +1}
        name: identifier used in reports and artifacts
    """

    features: np.ndarray
    labels: np.ndarray
    name: str = "dataset"

    def __post_init__(self) -> None:
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels)
        if features.ndim != 2:
            raise DatasetError(f"features must be a 2-D matrix, got shape {features.shape}")
        n, d = features.shape
        if n < 2 or d < 1:
            raise DatasetError(f"dataset needs n >= 2 and d >= 1, got n={n}, d={d}")
        if labels.shape != (n,):
            raise DatasetError(f"labels must have shape ({n},), got {labels.shape}")
        if not np.all(np.isfinite(features)):
            raise DatasetError("features contain non-finite values")
        if not np.all(np.isin(labels, (-1, 1))):
            raise DatasetError("labels must be -1 or +1")
        if not (np.any(labels == -1) and np.any(labels == 1)):
            raise DatasetError("both classes must be present")
        object.__setattr__(self, "features", _frozen(features))
        object.__setattr__(self, "labels", _frozen(labels.astype(np.int64)))

    @property
    def n(self) -> int:
        return int(self.features.shape[0])

    @property
    def d(self) -> int:
        return int(self.features.shape[1])

    @property
    def n_negative(self) -> int:
        return int(np.sum(self.labels == -1))

    @property
    def n_positive(self) -> int:
        return int(np.sum(self.labels == 1))

    def subset(self, indices: np.ndarray, name: Optional[str] = None) -> "Dataset":
        """Return the rows selected by ``indices`` as a new dataset."""
        return Dataset(self.features[indices], self.labels[indices], name or self.name)

    def with_features(self, features: np.ndarray) -> "Dataset":
        return Dataset(features, self.labels, self.name)


@dataclass(frozen=True, eq=False)
class FoldPlan:
    """Cross-validation plan as (train indices, test indices) pairs."""

    folds: Tuple[Tuple[np.ndarray, np.ndarray], ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        frozen = tuple((_frozen(np.sort(tr)), _frozen(np.sort(te))) for tr, te in self.folds)
        if not frozen:
            raise ValueError("a fold plan needs at least one fold")
        object.__setattr__(self, "folds", frozen)

    @property
    def fold_count(self) -> int:
        return len(self.folds)

    def __iter__(self) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
        return iter(self.folds)

    def is_partition(self, n: int) -> bool:
        """Check that test sets partition range(n) and trains are their complements."""
        seen = np.zeros(n, dtype=np.int64)
        everything = np.arange(n)
        for train, test in self.folds:
            seen[test] += 1
            if not np.array_equal(np.sort(np.concatenate([train, test])), everything):
                return False
            if np.intersect1d(train, test).size:
                return False
        return bool(np.all(seen == 1))


# ---------------------------------------------------------------------------
# Loading and writing
# ---------------------------------------------------------------------------


def _map_labels(raw: List[float], source: str) -> np.ndarray:
    distinct = sorted(set(raw))
    if len(distinct) > 2:
        raise DatasetError(
            f"{source}: unsupported multiclass data ({len(distinct)} distinct labels)"
        )
    if len(distinct) < 2:
        raise DatasetError(f"{source}: only one class present")
    low = distinct[0]
    return np.array([-1 if value == low else 1 for value in raw], dtype=np.int64)


def load_libsvm(path: PathLike, n_features: Optional[int] = None) -> Dataset:
    """Load a binary dataset in libsvm sparse text format.

    Each line is ``<label> <idx>:<val> ...`` with 1-based strictly increasing
    indices; everything after ``#`` is a comment. Absent indices are zero.
    The smaller of the two raw labels becomes -1.

    Args:
        path: Path to the libsvm file
        n_features: Force the matrix width (must cover the largest index)

    Returns:
        Dataset named after the file stem

    Raises:
        DatasetError: On malformed lines (with line number), empty input or
            more than two distinct labels
    """
    path = Path(path)
    raw_labels: List[float] = []
    rows: List[List[Tuple[int, float]]] = []
    width = 0

    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            content = line.split("#", 1)[0].strip()
            if not content:
                continue
            parts = content.split()
            try:
                label = float(parts[0])
            except ValueError:
                raise DatasetError(f"{path}:{line_no}: invalid label {parts[0]!r}") from None
            entries: List[Tuple[int, float]] = []
            previous = 0
            for token in parts[1:]:
                idx_text, sep, val_text = token.partition(":")
                if not sep:
                    raise DatasetError(f"{path}:{line_no}: expected <index>:<value>, got {token!r}")
                try:
                    idx = int(idx_text)
                    value = float(val_text)
                except ValueError:
                    raise DatasetError(f"{path}:{line_no}: invalid feature {token!r}") from None
                if idx <= previous:
                    raise DatasetError(
                        f"{path}:{line_no}: feature indices must be 1-based and strictly "
                        f"increasing (got {idx} after {previous})"
                    )
                if not np.isfinite(value):
                    raise DatasetError(f"{path}:{line_no}: non-finite value {token!r}")
                entries.append((idx, value))
                previous = idx
            width = max(width, previous)
            raw_labels.append(label)
            rows.append(entries)

    if not rows:
        raise DatasetError(f"{path}: no samples")
    if n_features is not None:
        if n_features < width:
            raise DatasetError(f"{path}: n_features={n_features} but index {width} present")
        width = n_features

    features = np.zeros((len(rows), width), dtype=np.float64)
    for r, entries in enumerate(rows):
        for idx, value in entries:
            features[r, idx - 1] = value

    labels = _map_labels(raw_labels, str(path))
    logger.debug("Loaded %s: n=%d d=%d", path, features.shape[0], width)
    return Dataset(features, labels, path.stem)


def load_csv(path: PathLike) -> Dataset:
    """Load a CSV file whose first column is the label; a header row is optional."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as f:
        first = f.readline()
    if not first.strip():
        raise DatasetError(f"{path}: no samples")
    try:
        [float(cell) for cell in first.strip().split(",")]
        skip = 0
    except ValueError:
        skip = 1

    try:
        table = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2, encoding="utf-8")
    except ValueError as e:
        raise DatasetError(f"{path}: {e}") from None
    if table.size == 0:
        raise DatasetError(f"{path}: no samples")
    if table.shape[1] < 2:
        raise DatasetError(f"{path}: need a label column and at least one feature")

    labels = _map_labels(table[:, 0].tolist(), str(path))
    return Dataset(table[:, 1:], labels, path.stem)


def load_dataset(path: PathLike) -> Dataset:
    """Load by extension: ``.csv`` as CSV, anything else as libsvm."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return load_csv(path)
    return load_libsvm(path)


def write_libsvm(ds: Dataset, path: PathLike) -> None:
    """Write ``ds`` in libsvm format with round-trip decimal precision.

    Zero entries are omitted except the last column, which is always written
    so reloading reproduces the matrix width.
    """
    d = ds.d
    with open(path, "w", encoding="utf-8") as f:
        for row, label in zip(ds.features, ds.labels):
            cells = [
                f"{j + 1}:{float(value)!r}"
                for j, value in enumerate(row)
                if value != 0.0 or j == d - 1
            ]
            f.write(" ".join(["+1" if label > 0 else "-1"] + cells) + "\n")


# ---------------------------------------------------------------------------
# Scaling
# ---------------------------------------------------------------------------


class UnitIntervalScaler:
    """Per-feature affine map onto [0, 1]; constant features map to 0."""

    def __init__(self) -> None:
        self.minimum: Optional[np.ndarray] = None
        self.span: Optional[np.ndarray] = None

    def fit(self, features: np.ndarray) -> "UnitIntervalScaler":
        features = np.asarray(features, dtype=np.float64)
        self.minimum = features.min(axis=0)
        span = features.max(axis=0) - self.minimum
        self.span = np.where(span > 0, span, 1.0)
        return self

    def transform(self, features: np.ndarray) -> np.ndarray:
        if self.minimum is None or self.span is None:
            raise ValueError("scaler is not fitted")
        return (np.asarray(features, dtype=np.float64) - self.minimum) / self.span

    def fit_transform(self, features: np.ndarray) -> np.ndarray:
        return self.fit(features).transform(features)


def scale_unit_interval(ds: Dataset) -> Dataset:
    """Scale every feature linearly to [0, 1] using statistics of the whole dataset."""
    return ds.with_features(UnitIntervalScaler().fit_transform(ds.features))


# ---------------------------------------------------------------------------
# Folding
# ---------------------------------------------------------------------------


def stratified_kfold(ds: Dataset, folds: int, seed: int) -> FoldPlan:
    """Stratified, shuffled k-fold plan, deterministic given ``seed``.

    When ``folds`` exceeds both class counts no stratified split exists and
    the plan falls back to shuffled, unstratified k-fold.

    Raises:
        ValueError: If ``folds < 2`` or ``folds`` exceeds the number of samples
    """
    if folds < 2:
        raise ValueError(f"folds must be >= 2, got {folds}")
    if folds > ds.n:
        raise ValueError(f"folds={folds} exceeds the number of samples {ds.n}")
    minority = min(ds.n_negative, ds.n_positive)
    if folds > max(ds.n_negative, ds.n_positive):
        logger.warning(
            "%s: folds=%d exceeds the size of both classes; using unstratified folds",
            ds.name,
            folds,
        )
        splitter = KFold(n_splits=folds, shuffle=True, random_state=seed)
        return FoldPlan(tuple(splitter.split(ds.features)))
    if folds > minority:
        logger.warning(
            "%s: folds=%d exceeds the minority class size %d; some test folds "
            "will lack that class",
            ds.name,
            folds,
            minority,
        )

    splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        pairs = tuple(splitter.split(ds.features, ds.labels))
    return FoldPlan(pairs)


def resubstitution_plan(n: int) -> FoldPlan:
    """Single degenerate fold that trains and tests on every sample."""
    everything = np.arange(n)
    return FoldPlan(((everything, everything),))
