"""Deterministic JSON/CSV artifacts and the run manifest."""

import csv
import hashlib
import io
import json
import logging
import os
import platform
import tempfile
import threading
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np
import scipy
import sklearn

from ckrbf import __version__

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def dumps_json(data: Any) -> str:
    """Sorted keys, two-space indent, shortest round-trip floats."""
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def csv_text(header: Optional[Sequence[str]], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    if header is not None:
        writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buffer.getvalue()


def file_digest(path: Path) -> str:
    """SHA-256 hex digest of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def package_versions() -> Dict[str, str]:
    return {
        "ckrbf": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "scikit-learn": sklearn.__version__,
        "python": platform.python_version(),
    }


class ArtifactWriter:
    """Writes run outputs atomically into one directory.

    Each file is written to a temporary name and renamed into place. Used as
    a context manager, every file written so far is removed again when the
    block raises, so a failed run leaves no partial artifacts behind.
    """

    def __init__(self, directory: Path):
        self.directory = Path(directory)
        self.written: List[Path] = []
        self._lock = threading.Lock()

    def __enter__(self) -> "ArtifactWriter":
        self.directory.mkdir(parents=True, exist_ok=True)
        return self

    def __exit__(self, exc_type: Any, exc: Any, tb: Any) -> None:
        if exc_type is not None:
            self.discard()

    def write_text(self, name: str, text: str) -> Path:
        target = self.directory / name
        with self._lock:
            self.directory.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=f".{name}.", suffix=".tmp")
            try:
                with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
                    f.write(text)
                os.replace(tmp, target)
            except BaseException:
                if os.path.exists(tmp):
                    os.unlink(tmp)
                raise
            if target not in self.written:
                self.written.append(target)
        logger.debug("Wrote %s", target)
        return target

    def write_json(self, name: str, data: Any) -> Path:
        return self.write_text(name, dumps_json(data))

    def write_csv(
        self, name: str, header: Optional[Sequence[str]], rows: Iterable[Sequence[Any]]
    ) -> Path:
        return self.write_text(name, csv_text(header, rows))

    def write_matrix(self, name: str, matrix: np.ndarray) -> Path:
        """Plain numeric CSV, one matrix row per line."""
        return self.write_csv(name, None, np.atleast_2d(matrix).tolist())

    def write_manifest(
        self, command: str, config: Dict[str, Any], datasets: Sequence[Path]
    ) -> Path:
        """Record what was run and on which inputs, with digests of every artifact."""
        artifacts = {
            path.name: file_digest(path) for path in self.written if path.name != MANIFEST_NAME
        }
        manifest = {
            "command": command,
            "config": config,
            "seeds": {"cv": config.get("seed"), "kmeans": config.get("seed")},
            "datasets": [
                {"path": str(path), "sha256": file_digest(path)} for path in datasets
            ],
            "artifacts": artifacts,
            "versions": package_versions(),
        }
        return self.write_json(MANIFEST_NAME, manifest)

    def discard(self) -> None:
        """Remove every file written through this writer."""
        with self._lock:
            for path in self.written:
                try:
                    path.unlink()
                except FileNotFoundError:
                    pass
            if self.written:
                logger.warning("Removed %d partial artifact(s)", len(self.written))
            self.written = []
