"""Seeded synthetic datasets for tests, benchmarks and demos."""
from __future__ import annotations

import numpy as np

from .core import Dataset


def gaussian_blobs(seed: int, n_per_blob: int = 30, n_blobs: int = 3, n_features: int = 5,
                   separation: float = 10.0, sigma: float = 1.0) -> Dataset:
    """Isotropic blobs in the joint (features, target) space.

    Column ``j`` displaces blob ``j % n_blobs`` only, so every column (the
    target included) has the same spread and blobs stay isotropic after
    per-column standardization. Each pair of centres is exactly
    ``separation * sigma`` apart when ``n_blobs`` divides ``n_features + 1``.
    """
    rng = np.random.default_rng(seed)
    dim = n_features + 1
    if n_blobs > dim:
        raise ValueError("need n_features + 1 >= n_blobs")
    centres = np.zeros((n_blobs, dim))
    cols = np.arange(dim)
    per_blob = np.bincount(cols % n_blobs, minlength=n_blobs).min()
    centres[cols % n_blobs, cols] = separation * sigma / np.sqrt(2.0 * per_blob)
    Z = np.vstack([c + sigma * rng.standard_normal((n_per_blob, dim)) for c in centres])
    Z = Z[rng.permutation(len(Z))]
    return Dataset.from_arrays(Z[:, :-1], Z[:, -1])


def rare_regime(seed: int, n: int = 500, rare_fraction: float = 0.05, noise: float = 0.3) -> Dataset:
    """Regression data with a small, disjoint regime of extreme targets.

    Frequent rows: ``x ~ N(0, I_3)``, ``y = sum(x) + noise``. Rare rows sit
    around ``x = 3.5`` with ``y = 15 + 4 sin(2 x_0) - 2 x_1 + noise``.
    """
    rng = np.random.default_rng(seed)
    n_rare = int(round(n * rare_fraction))
    n_freq = n - n_rare
    Xf = rng.normal(0.0, 1.0, (n_freq, 3))
    yf = Xf.sum(axis=1) + rng.normal(0.0, noise, n_freq)
    Xr = rng.normal(3.5, 0.6, (n_rare, 3))
    yr = 15.0 + 4.0 * np.sin(2.0 * Xr[:, 0]) - 2.0 * Xr[:, 1] + rng.normal(0.0, noise, n_rare)
    X = np.vstack([Xf, Xr])
    y = np.concatenate([yf, yr])
    order = rng.permutation(n)
    return Dataset.from_arrays(X[order], y[order])


def random_dataset(seed: int, n: int, d: int) -> Dataset:
    """Correlated Gaussian features with a noisy nonlinear target."""
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(d, d))
    X = rng.standard_normal((n, d)) @ A * rng.uniform(0.1, 10) + rng.normal(0, 5, d)
    y = np.tanh(X[:, 0]) * 3 + rng.standard_exponential(n) ** 2
    return Dataset.from_arrays(X, y)
