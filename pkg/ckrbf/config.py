"""Run configuration: built-in defaults, ``.ckrbf.yaml``, ``.env`` and CLI flags.

Precedence is flags > YAML > defaults. ``CKRBF_OUTPUT_DIR`` and ``CKRBF_JOBS``
replace the built-in output directory and worker count.
"""

import copy
import logging
import os
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator, model_validator

from ckrbf.evaluation import GridSpec, KernelSpec, default_grid

logger = logging.getLogger(__name__)

CONFIG_FILENAME = ".ckrbf.yaml"

_GRID = default_grid()

DEFAULT_CONFIG: Dict[str, Any] = {
    "kernel": {
        "family": "ckrbf",
        "gamma": 1.0,
        "epsilon": 1e-10,
        "mode": "transductive",
        "restarts": 10,
        "scaling": "global",
    },
    "grid": {
        "c_values": list(_GRID.c_values),
        "gamma_values": list(_GRID.gamma_values),
    },
    "cv": {"folds": 10, "seed": 0},
    "solver": {"C": 1.0, "tol": 1e-3, "max_iter": 10_000_000},
    "output": {"dir": "ckrbf-output", "format": "json"},
    "jobs": 1,
}


class Command(str, Enum):
    DIAGNOSE = "diagnose"
    TRAIN = "train"
    GRID = "grid"
    PF = "pf"
    COMPARE = "compare"


# Cluster counts used when neither --k nor kernel.k is given.
DEFAULT_K: Dict[str, List[int]] = {Command.COMPARE.value: [2, 3, 4]}


class Family(str, Enum):
    RBF = "rbf"
    MRBF = "mrbf"
    CKRBF = "ckrbf"
    CKRBF_RADIAL = "ckrbf-radial"
    MKRBF = "mkrbf"


class Mode(str, Enum):
    TRANSDUCTIVE = "transductive"
    STRICT = "strict"


class Scaling(str, Enum):
    NONE = "none"
    GLOBAL = "global"
    STRICT = "strict"


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"


def _deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def find_config(start: Optional[Path] = None) -> Optional[Path]:
    """Nearest ``.ckrbf.yaml`` in ``start`` or one of its parents."""
    current = (start or Path.cwd()).resolve()
    while True:
        candidate = current / CONFIG_FILENAME
        if candidate.exists():
            return candidate
        if current == current.parent:
            return None
        current = current.parent


def load_environment(directory: Optional[Path] = None) -> None:
    """Load ``.env`` from ``directory`` (the working directory by default)."""
    env_path = (directory or Path.cwd()) / ".env"
    if env_path.exists():
        load_dotenv(env_path)
        logger.debug("Loaded environment from %s", env_path)


def load_config(config_path: Optional[Path] = None) -> Dict[str, Any]:
    """Load configuration from a ``.ckrbf.yaml`` file merged over the defaults.

    Args:
        config_path: Explicit config file; discovered from the working
            directory upwards when omitted

    Returns:
        Configuration dictionary

    Raises:
        ValueError: If an explicitly given file cannot be parsed
    """
    settings = copy.deepcopy(DEFAULT_CONFIG)
    if os.environ.get("CKRBF_OUTPUT_DIR"):
        settings["output"]["dir"] = os.environ["CKRBF_OUTPUT_DIR"]
    if os.environ.get("CKRBF_JOBS"):
        try:
            settings["jobs"] = int(os.environ["CKRBF_JOBS"])
        except ValueError:
            raise ValueError(f"CKRBF_JOBS must be an integer, got {os.environ['CKRBF_JOBS']!r}")

    explicit = config_path is not None
    path = config_path if explicit else find_config()
    if path is None:
        return settings

    try:
        with open(path, "r", encoding="utf-8") as f:
            user_config = yaml.safe_load(f) or {}
        if not isinstance(user_config, dict):
            raise ValueError("top level must be a mapping")
    except (OSError, yaml.YAMLError, ValueError) as e:
        if explicit:
            raise ValueError(f"Could not load config file {path}: {e}") from e
        logger.warning("Could not load config file %s: %s", path, e)
        return settings

    logger.debug("Using config file %s", path)
    return _deep_merge(settings, user_config)


class RunConfig(BaseModel):
    """Validated settings of one CLI run."""

    command: Command
    datasets: List[Path] = Field(min_length=1)
    families: List[Family] = Field(default_factory=lambda: [Family.CKRBF], min_length=1)
    k: List[int] = Field(default_factory=lambda: [2], min_length=1)
    gamma: float = Field(default=1.0, gt=0)
    C: float = Field(default=1.0, gt=0)
    epsilon: float = Field(default=1e-10, gt=0, lt=1)
    mode: Mode = Mode.TRANSDUCTIVE
    scaling: Scaling = Scaling.GLOBAL
    restarts: int = Field(default=10, ge=1)
    c_values: List[float] = Field(default_factory=lambda: list(_GRID.c_values), min_length=1)
    gamma_values: List[float] = Field(
        default_factory=lambda: list(_GRID.gamma_values), min_length=1
    )
    folds: int = Field(default=10, ge=2)
    seed: int = Field(default=0, ge=0)
    tol: float = Field(default=1e-3, gt=0)
    max_iter: int = Field(default=10_000_000, ge=1)
    output_dir: Path = Path("ckrbf-output")
    output_format: OutputFormat = OutputFormat.JSON
    jobs: int = Field(default=1, ge=1)
    export_gram: bool = False

    @field_validator("datasets")
    @classmethod
    def _datasets_exist(cls, paths: List[Path]) -> List[Path]:
        for path in paths:
            if not path.is_file():
                raise ValueError(f"dataset file not found: {path}")
        return paths

    @field_validator("k")
    @classmethod
    def _k_positive(cls, values: List[int]) -> List[int]:
        if any(k < 1 for k in values):
            raise ValueError("k must be >= 1")
        return sorted(set(values))

    @field_validator("c_values", "gamma_values")
    @classmethod
    def _grid_axis(cls, values: List[float]) -> List[float]:
        if any(v <= 0 for v in values):
            raise ValueError("grid values must be positive")
        return sorted(set(values))

    @model_validator(mode="after")
    def _family_needs(self) -> "RunConfig":
        if Family.MKRBF in self.families and min(self.k) < 2:
            raise ValueError("the mkrbf family needs k >= 2")
        return self

    def kernel_spec(self, family: Optional[str] = None, k: Optional[int] = None) -> KernelSpec:
        """KernelSpec for ``family``/``k`` (the configured ones by default)."""
        scaling = "strict" if self.scaling == Scaling.STRICT else "none"
        return KernelSpec(
            family=family or self.families[0].value,
            k=k if k is not None else self.k[0],
            gamma=self.gamma,
            eps=self.epsilon,
            mode=Mode.STRICT.value if scaling == "strict" else self.mode.value,
            seed=self.seed,
            restarts=self.restarts,
            scaling=scaling,
            tol=self.tol,
            max_iter=self.max_iter,
        )

    def kernel_specs(self) -> List[KernelSpec]:
        """One spec per non-clustered family and one per (clustered family, k)."""
        specs: List[KernelSpec] = []
        for family in dict.fromkeys(self.families):
            if family in (Family.CKRBF, Family.CKRBF_RADIAL, Family.MKRBF):
                specs.extend(self.kernel_spec(family.value, k) for k in self.k)
            else:
                specs.append(self.kernel_spec(family.value))
        return specs

    def grid_spec(self) -> GridSpec:
        return GridSpec(tuple(self.c_values), tuple(self.gamma_values))

    def echo(self) -> Dict[str, Any]:
        """JSON-ready copy of the settings for the run manifest."""
        data = self.model_dump(mode="json", exclude={"output_dir"})
        data["datasets"] = [str(p) for p in self.datasets]
        return data


def build_run_config(
    command: str, datasets: List[Path], settings: Dict[str, Any], overrides: Dict[str, Any]
) -> RunConfig:
    """Combine loaded settings with CLI flags; ``None`` flags keep the settings value.

    Raises:
        pydantic.ValidationError: If the combination is invalid
    """
    kernel = settings.get("kernel", {})
    k = kernel.get("k", DEFAULT_K.get(command, [2]))
    family = kernel.get("family", "ckrbf")
    values: Dict[str, Any] = {
        "command": command,
        "datasets": datasets,
        "families": family if isinstance(family, list) else [family],
        "k": k if isinstance(k, list) else [k],
        "gamma": kernel.get("gamma"),
        "epsilon": kernel.get("epsilon"),
        "mode": kernel.get("mode"),
        "scaling": kernel.get("scaling"),
        "restarts": kernel.get("restarts"),
        "c_values": settings.get("grid", {}).get("c_values"),
        "gamma_values": settings.get("grid", {}).get("gamma_values"),
        "folds": settings.get("cv", {}).get("folds"),
        "seed": settings.get("cv", {}).get("seed"),
        "C": settings.get("solver", {}).get("C"),
        "tol": settings.get("solver", {}).get("tol"),
        "max_iter": settings.get("solver", {}).get("max_iter"),
        "output_dir": settings.get("output", {}).get("dir"),
        "output_format": settings.get("output", {}).get("format"),
        "jobs": settings.get("jobs"),
    }
    for key, value in overrides.items():
        if value is None or value == ():
            continue
        values[key] = list(value) if isinstance(value, tuple) else value
    return RunConfig(**{key: value for key, value in values.items() if value is not None})
