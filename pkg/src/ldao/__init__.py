"""Local distribution-based adaptive oversampling (LDAO) for imbalanced regression.

Cluster the joint feature-target space with k-means, fit a Gaussian KDE
per cluster and draw synthetic rows from each cluster's density.
"""
from .augment import AugmentationPlan, AugmentedDataset, make_plan, run_ldao
from .cluster import ClusterModel, ElbowTrace, kmeans_fit, select_k, sse_curve
from .core import Dataset, LdaoError, RunConfig, StandardizationParams, ValidationError, standardize, to_joint
from .density import ClusterKde, CholeskyFailure, density, sample, select_bandwidth
from .harness import CvPlan, EvaluationReport, knn_regress, run_experiment
from .ingest import CsvSchema, read_csv, write_csv
from .kernels import BACKEND
from .metrics import RelevanceFunction, build_relevance, mae, rmse, sera, wilcoxon_signed_rank

__version__ = "0.1.0"

__all__ = [
    "AugmentationPlan", "AugmentedDataset", "BACKEND", "CholeskyFailure", "ClusterKde",
    "ClusterModel", "CsvSchema", "CvPlan", "Dataset", "ElbowTrace", "EvaluationReport",
    "LdaoError", "RelevanceFunction", "RunConfig", "StandardizationParams", "ValidationError",
    "build_relevance", "density", "kmeans_fit", "knn_regress", "mae", "make_plan", "read_csv",
    "rmse", "run_experiment", "run_ldao", "sample", "select_bandwidth", "select_k", "sera",
    "sse_curve", "standardize", "to_joint", "wilcoxon_signed_rank", "write_csv",
]
