"""Per-cluster Gaussian KDE with a full bandwidth matrix."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .core import DimensionMismatch, NumericalError, ValidationError
from .kernels import kde_log_sums

_LOG_2PI = math.log(2.0 * math.pi)
CHOLESKY_RETRIES = 3


class CholeskyFailure(NumericalError):
    """The bandwidth matrix stayed non-positive-definite after regularization."""

    def __init__(self, message, cluster=None):
        super().__init__(message if cluster is None else f"cluster {cluster}: {message}")
        self.cluster = cluster


@dataclass(frozen=True)
class ClusterKde:
    """Gaussian KDE over the members of one cluster.

    Attributes
    ----------
    points : ndarray, shape (n_k, D)
    bandwidth_chol : ndarray, shape (D, D)
        Lower-triangular ``L`` with ``H = L @ L.T``.
    log_norm_const : float
        ``log((2 pi)^(D/2) |H|^(1/2))``.
    regularization : float
        Ridge ``lambda`` actually added to the covariance.
    """

    points: np.ndarray
    bandwidth_chol: np.ndarray
    log_norm_const: float
    regularization: float

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def bandwidth(self) -> np.ndarray:
        L = self.bandwidth_chol
        return L @ L.T

    @property
    def log_det(self) -> float:
        return 2.0 * float(np.log(np.diag(self.bandwidth_chol)).sum())

    def whiten(self, Z) -> np.ndarray:
        """``L^{-1} z`` for every row of ``Z``."""
        return solve_triangular(self.bandwidth_chol, np.asarray(Z, dtype=np.float64).T,
                                lower=True, check_finite=False).T


def scott_factor(n: int, dim: int) -> float:
    """Rule-of-thumb factor ``n^(-1/(dim+4))``."""
    return float(n) ** (-1.0 / (dim + 4))


def select_bandwidth(points, scale: float = 1.0, lambda_floor: float = 1e-8) -> ClusterKde:
    """Fit ``H = (scale * s)^2 (Sigma + lambda I)`` for one cluster.

    ``Sigma`` is the sample covariance (zero for a single point),
    ``s = n^(-1/(D+4))`` and ``lambda = max(lambda_floor, 1e-6 tr(Sigma)/D)``.
    If Cholesky fails, lambda is multiplied by 10 up to three times.
    """
    P = np.array(points, dtype=np.float64, ndmin=2)
    if P.shape[0] < 1:
        raise ValidationError("cluster has no points")
    if not scale > 0:
        raise ValidationError("bandwidth scale must be > 0")
    n, dim = P.shape
    cov = np.cov(P, rowvar=False, ddof=1).reshape(dim, dim) if n > 1 else np.zeros((dim, dim))
    lam = max(lambda_floor, 1e-6 * float(np.trace(cov)) / dim)
    factor = (scale * scott_factor(n, dim)) ** 2
    eye = np.eye(dim)
    for attempt in range(CHOLESKY_RETRIES + 1):
        H = factor * (cov + lam * eye)
        try:
            L = np.linalg.cholesky(H)
        except np.linalg.LinAlgError:
            L = None
        if L is not None and np.all(np.diag(L) > 0) and np.all(np.isfinite(L)):
            break
        if attempt == CHOLESKY_RETRIES:
            raise CholeskyFailure(f"bandwidth not positive definite with lambda={lam:g}")
        lam *= 10.0
    P.setflags(write=False)
    L.setflags(write=False)
    lnc = 0.5 * dim * _LOG_2PI + float(np.log(np.diag(L)).sum())
    return ClusterKde(points=P, bandwidth_chol=L, log_norm_const=lnc, regularization=lam)


def _queries(kde, z):
    Z = np.array(z, dtype=np.float64, ndmin=2)
    if Z.shape[-1] != kde.dim:
        raise DimensionMismatch(f"query has dimension {Z.shape[-1]}, KDE has {kde.dim}")
    if not np.isfinite(Z).all():
        raise ValidationError("query must be finite")
    return Z


def log_density(kde: ClusterKde, z) -> np.ndarray | float:
    """Log of the KDE density at one point (float) or at each row of a matrix."""
    single = np.ndim(z) == 1
    Z = _queries(kde, z)
    vals = kde_log_sums(kde.whiten(Z), kde.whiten(kde.points)) - math.log(kde.n) - kde.log_norm_const
    return float(vals[0]) if single else vals


def density(kde: ClusterKde, z) -> np.ndarray | float:
    """KDE density ``(1/n) sum_j N(z; z_j, H)``, via triangular solves on ``L``."""
    single = np.ndim(z) == 1
    vals = np.exp(log_density(kde, np.array(z, ndmin=2)))
    return float(vals[0]) if single else vals


def mixture_density(kdes, weights, z) -> np.ndarray | float:
    """``sum_k weights[k] * density(kdes[k], z)``."""
    single = np.ndim(z) == 1
    Z = np.array(z, dtype=np.float64, ndmin=2)
    total = np.zeros(Z.shape[0])
    for kde, w in zip(kdes, weights):
        total += w * density(kde, Z)
    return float(total[0]) if single else total


def sample(kde: ClusterKde, count: int, rng) -> np.ndarray:
    """Draw ``count`` points ``z_j + L eps`` with ``j`` uniform over members and
    ``eps ~ N(0, I)``.

    ``rng`` needs ``integers`` and ``standard_normal`` (a numpy Generator).
    """
    if count < 0:
        raise ValidationError("count must be >= 0")
    if count == 0:
        return np.empty((0, kde.dim))
    j = np.asarray(rng.integers(0, kde.n, size=count))
    eps = np.asarray(rng.standard_normal((count, kde.dim)), dtype=np.float64)
    return kde.points[j] + eps @ kde.bandwidth_chol.T
