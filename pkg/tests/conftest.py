"""Pytest configuration and shared fixtures."""

import os
from pathlib import Path

import numpy as np
import pytest

from ckrbf.dataset import Dataset, write_libsvm


def make_blobs(
    centers, sizes, labels, spread: float = 0.5, seed: int = 0, name: str = "blobs"
) -> Dataset:
    """Gaussian blobs around ``centers``, one label per blob."""
    rng = np.random.default_rng(seed)
    features, targets = [], []
    for center, size, label in zip(centers, sizes, labels):
        center = np.asarray(center, dtype=np.float64)
        features.append(center + spread * rng.standard_normal((size, center.size)))
        targets.append(np.full(size, label))
    return Dataset(np.vstack(features), np.concatenate(targets), name)


@pytest.fixture
def blob_factory():
    """Factory building blob datasets, see :func:`make_blobs`."""
    return make_blobs


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator for reproducible random inputs."""
    return np.random.default_rng(12345)


@pytest.fixture
def two_blobs() -> Dataset:
    """Linearly separable 2-D data: 20 points around (0, 0) and 20 around (5, 5)."""
    return make_blobs([(0.0, 0.0), (5.0, 5.0)], [20, 20], [-1, 1], seed=7, name="two-blobs")


@pytest.fixture
def four_points() -> np.ndarray:
    """Two obvious pairs for k = 2."""
    return np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]])


@pytest.fixture
def blobs_file(tmp_path: Path, two_blobs: Dataset) -> Path:
    """The two-blob dataset written in libsvm format.

    Returns:
        Path to the file
    """
    path = tmp_path / "blobs.libsvm"
    write_libsvm(two_blobs, path)
    return path


@pytest.fixture
def libsvm_file(tmp_path: Path) -> Path:
    """Small libsvm file with a comment, a blank line and sparse rows."""
    path = tmp_path / "small.libsvm"
    path.write_text(
        "# header comment\n"
        "+1 1:0.5 3:1.0\n"
        "-1 2:2.0  # trailing comment\n"
        "\n"
        "+1 1:1\n"
    )
    return path


@pytest.fixture
def csv_file(tmp_path: Path) -> Path:
    """CSV file with a header row, label in the first column."""
    path = tmp_path / "small.csv"
    path.write_text("label,x1,x2\n1,0.1,0.2\n0,0.3,0.4\n1,0.5,0.6\n")
    return path


@pytest.fixture
def isolated_env(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Path:
    """Run in an empty working directory without ckrbf environment variables."""
    workdir = tmp_path / "work"
    workdir.mkdir()
    monkeypatch.chdir(workdir)
    for name in ("CKRBF_OUTPUT_DIR", "CKRBF_JOBS"):
        monkeypatch.delenv(name, raising=False)
    return workdir


@pytest.fixture
def data_dir() -> Path:
    """Directory of the benchmark datasets, from $CKRBF_DATA_DIR.

    Skips the test when the variable is unset.
    """
    value = os.environ.get("CKRBF_DATA_DIR")
    if not value:
        pytest.skip("CKRBF_DATA_DIR not set")
    path = Path(value)
    if not path.is_dir():
        pytest.skip(f"CKRBF_DATA_DIR={value} is not a directory")
    return path
