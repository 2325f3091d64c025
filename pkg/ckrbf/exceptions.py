"""Exception types raised by ckrbf and the CLI exit codes they map to."""

from typing import TYPE_CHECKING, Optional

import numpy as np

if TYPE_CHECKING:
    from ckrbf.solver import SvmModel


class CkrbfError(Exception):
    """Base class for all ckrbf errors."""

    exit_code = 1


class DatasetError(CkrbfError, ValueError):
    """Raised for unreadable, malformed or unsupported data."""

    exit_code = 2


class EmptyClusterError(CkrbfError, ValueError):
    """Raised when a statistic is requested for a cluster with no members."""

    exit_code = 2


class IllConditionedCovarianceError(CkrbfError, np.linalg.LinAlgError):
    """Raised when a covariance cannot be made positive definite."""

    exit_code = 2


class ConvergenceError(CkrbfError, RuntimeError):
    """Raised when the SVM solver hits its iteration cap.

    The best iterate reached so far is kept on ``model``.
    """

    exit_code = 3

    def __init__(self, message: str, model: Optional["SvmModel"] = None):
        super().__init__(message)
        self.model = model
