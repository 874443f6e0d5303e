"""Shared domain types: datasets, standardization, joint-space views, run config."""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_SEED = 42


class LdaoError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(LdaoError, ValueError):
    """Input violates a documented precondition."""


class NumericalError(LdaoError, ArithmeticError):
    """A numerical routine could not complete."""


class TooFewPoints(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Feature matrix plus target vector.

    Arrays are copied on construction and made read-only, so a ``Dataset``
    can be shared between worker threads.

    Parameters
    ----------
    features : array_like, shape (N, d)
    target : array_like, shape (N,)
    feature_names : sequence of str, length d
    target_name : str
    synthetic_mask : array_like of bool, shape (N,), optional
        True for generated rows. Defaults to all False.
    """

    features: np.ndarray
    target: np.ndarray
    feature_names: tuple[str, ...]
    target_name: str = "y"
    synthetic_mask: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.target, dtype=np.float64)
        if X.ndim != 2:
            raise ValidationError(f"features must be 2-D, got shape {X.shape}")
        n, d = X.shape
        if n < 1:
            raise ValidationError("dataset has no rows")
        if d < 1:
            raise ValidationError("dataset needs at least one feature column")
        if y.shape != (n,):
            raise ValidationError(f"target shape {y.shape} does not match {n} rows")
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise ValidationError("NaN or infinite values are not allowed")
        names = tuple(str(s) for s in self.feature_names)
        if len(names) != d:
            raise ValidationError(f"{len(names)} feature names for {d} columns")
        if len(set(names)) != d:
            raise ValidationError("feature names must be unique")
        if self.target_name in names:
            raise ValidationError(f"target name {self.target_name!r} clashes with a feature")
        if self.synthetic_mask is None:
            mask = np.zeros(n, dtype=bool)
        else:
            mask = np.array(self.synthetic_mask, dtype=bool, copy=True)
            if mask.shape != (n,):
                raise ValidationError("synthetic_mask length must equal N")
        mask.setflags(write=False)
        object.__setattr__(self, "features", _frozen(X))
        object.__setattr__(self, "target", _frozen(y))
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "synthetic_mask", mask)

    @classmethod
    def from_arrays(cls, X, y, feature_names: Sequence[str] | None = None,
                    target_name: str = "y") -> "Dataset":
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if feature_names is None:
            feature_names = [f"x{j}" for j in range(X.shape[1])]
        return cls(X, y, tuple(feature_names), target_name)

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def take(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(self.features[rows], self.target[rows], self.feature_names,
                       self.target_name, self.synthetic_mask[rows])


@dataclass(frozen=True)
class StandardizationParams:
    """Per-column z-score parameters for the d+1 joint columns.

    Degenerate (constant) columns are stored with mean 0 and std 1 so the
    transform leaves them untouched.
    """

    means: np.ndarray
    stds: np.ndarray
    degenerate: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.degenerate is None:
            object.__setattr__(self, "degenerate", np.zeros(len(self.means), dtype=bool))

    @classmethod
    def fit(cls, Z: np.ndarray) -> "StandardizationParams":
        Z = np.asarray(Z, dtype=np.float64)
        means = Z.mean(axis=0)
        stds = Z.std(axis=0)  # population std
        degenerate = np.ptp(Z, axis=0) == 0
        means = np.where(degenerate, 0.0, means)
        stds = np.where(degenerate, 1.0, stds)
        # round-off can leave a non-constant column with std 0
        stds = np.where(stds > 0, stds, 1.0)
        for arr in (means, stds, degenerate):
            arr.setflags(write=False)
        return cls(means, stds, degenerate)

    def forward(self, Z: np.ndarray) -> np.ndarray:
        return (np.asarray(Z, dtype=np.float64) - self.means) / self.stds

    def inverse(self, Z: np.ndarray) -> np.ndarray:
        return np.asarray(Z, dtype=np.float64) * self.stds + self.means


def to_joint(dataset: Dataset) -> np.ndarray:
    """Return the (N, d+1) matrix of joint points ``z_i = (x_i, y_i)``."""
    return np.column_stack([dataset.features, dataset.target])


def standardize(dataset: Dataset) -> tuple[Dataset, StandardizationParams]:
    """Z-score every joint column (features and target) with population std."""
    params = StandardizationParams.fit(to_joint(dataset))
    Z = params.forward(to_joint(dataset))
    out = Dataset(Z[:, :-1], Z[:, -1], dataset.feature_names, dataset.target_name,
                  dataset.synthetic_mask)
    return out, params


@dataclass(frozen=True)
class RunConfig:
    """Hyperparameters of one oversampling run.

    ``alpha`` applies in uniform mode; ``alpha_max`` and ``gamma`` in
    adaptive mode, where cluster k gets ``min(alpha_max, (n_max/n_k)**gamma)``.
    ``bandwidth_scale`` multiplies the rule-of-thumb bandwidth factor.
    """

    k_min: int = 2
    k_max: int = 6
    elbow_threshold: float = 0.10
    alpha_mode: str = "uniform"
    alpha: float = 2.0
    alpha_max: float = 3.0
    gamma: float = 0.5
    bandwidth_scale: float = 1.0
    seed: int = DEFAULT_SEED
    restarts: int = 10
    max_iterations: int = 300
    tolerance: float = 1e-6
    lambda_floor: float = 1e-8
    clip_to_range: bool = False

    def __post_init__(self):
        if int(self.k_min) != self.k_min or self.k_min < 1:
            raise ValidationError("k_min must be an integer >= 1")
        if int(self.k_max) != self.k_max or self.k_max < self.k_min:
            raise ValidationError("k_max must be an integer >= k_min")
        if not 0 < self.elbow_threshold < 1:
            raise ValidationError("elbow_threshold must lie in (0, 1)")
        if self.alpha_mode not in ("uniform", "adaptive"):
            raise ValidationError(f"unknown alpha_mode {self.alpha_mode!r}")
        if not self.alpha >= 1:
            raise ValidationError("alpha must be >= 1")
        if not self.alpha_max >= 1:
            raise ValidationError("alpha_max must be >= 1")
        if not self.gamma >= 0:
            raise ValidationError("gamma must be >= 0")
        if not self.bandwidth_scale > 0:
            raise ValidationError("bandwidth_scale must be > 0")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError("seed must be an unsigned 64-bit integer")
        if self.restarts < 1 or self.max_iterations < 1:
            raise ValidationError("restarts and max_iterations must be >= 1")
        if not self.tolerance > 0:
            raise ValidationError("tolerance must be > 0")
        if not self.lambda_floor > 0:
            raise ValidationError("lambda_floor must be > 0")

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    def range_warnings(self) -> list[str]:
        """Settings outside the usual tuning ranges (K in [2, 6], multiplier
        in [1, 3], bandwidth scale in [0.1, 2]). Accepted, but reported."""
        out = []
        if self.k_min < 2 or self.k_max > 6:
            out.append(f"k range [{self.k_min}, {self.k_max}] outside [2, 6]")
        mult = self.alpha if self.alpha_mode == "uniform" else self.alpha_max
        if not 1.0 <= mult <= 3.0:
            out.append(f"multiplier {mult} outside [1.0, 3.0]")
        if not 0.1 <= self.bandwidth_scale <= 2.0:
            out.append(f"bandwidth_scale {self.bandwidth_scale} outside [0.1, 2.0]")
        for msg in out:
            logger.warning(msg)
        return out


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for the work unit identified by ``keys``.

    Streams depend only on (seed, keys), never on scheduling order.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def worker_count(workers: int | None = None) -> int:
    """Resolve a worker count; ``None`` reads ``LDAO_THREADS`` (0 = auto)."""
    if workers is None:
        raw = os.environ.get("LDAO_THREADS", "0").strip() or "0"
        try:
            workers = int(raw)
        except ValueError:
            raise ValidationError(f"LDAO_THREADS must be an integer, got {raw!r}")
    if workers < 0:
        raise ValidationError("worker count must be >= 0")
    if workers == 0:
        workers = os.cpu_count() or 1
    return workers
