"""ckrbf - cluster-covariance RBF kernels for SVMs, with stability benchmarking."""

__version__ = "0.1.0"
__author__ = "ckrbf contributors"
__email__ = ""

from ckrbf.clustering import Clustering, kmeans_fit
from ckrbf.dataset import Dataset, FoldPlan, load_dataset, stratified_kfold
from ckrbf.evaluation import GridResult, GridSpec, KernelSpec, PfCurve, grid_search, pf_auc
from ckrbf.kernel import KernelModel, build_kernel, gram
from ckrbf.solver import SvmModel, SvmProblem, train_svc

__all__ = [
    "Clustering",
    "Dataset",
    "FoldPlan",
    "GridResult",
    "GridSpec",
    "KernelModel",
    "KernelSpec",
    "PfCurve",
    "SvmModel",
    "SvmProblem",
    "build_kernel",
    "gram",
    "grid_search",
    "kmeans_fit",
    "load_dataset",
    "pf_auc",
    "stratified_kfold",
    "train_svc",
]
