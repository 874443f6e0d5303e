import math

import numpy as np
import pytest

from ldao.core import DimensionMismatch
from ldao.density import (CholeskyFailure, ClusterKde, density, log_density, mixture_density,
                          sample, scott_factor, select_bandwidth)

from oracles import naive_density


def identity_kde(points):
    P = np.array(points, dtype=float, ndmin=2)
    D = P.shape[1]
    return ClusterKde(P, np.eye(D), 0.5 * D * math.log(2 * math.pi), 0.0)


class ZeroNoise:
    """Generator stand-in with real member choice and zero perturbation."""

    def __init__(self, seed=0):
        self._rng = np.random.default_rng(seed)

    def integers(self, low, high, size):
        return self._rng.integers(low, high, size)

    def standard_normal(self, shape):
        return np.zeros(shape)


def test_single_point_bandwidth_is_isotropic_floor():
    kde = select_bandwidth([[1.0, 2.0, 3.0]], scale=0.5, lambda_floor=1e-8)
    np.testing.assert_allclose(kde.bandwidth, 0.25 * 1e-8 * np.eye(3), rtol=1e-12)
    assert kde.regularization == 1e-8


def test_scott_factor_value():
    assert scott_factor(100, 3) == pytest.approx(0.51795, abs=5e-6)
    assert scott_factor(100, 3) == pytest.approx(100 ** (-1 / 7), rel=1e-15)


def test_bandwidth_two_ways(rng):
    P = rng.normal(size=(50, 4)) @ rng.normal(size=(4, 4))
    kde = select_bandwidth(P, scale=0.7)
    cov = np.cov(P.T, ddof=1)
    lam = max(1e-8, 1e-6 * np.trace(cov) / 4)
    H = (0.7 * 50 ** (-1 / 8)) ** 2 * (cov + lam * np.eye(4))
    np.testing.assert_allclose(kde.bandwidth, H, rtol=1e-10, atol=1e-14)
    assert kde.regularization == pytest.approx(lam, rel=1e-12)


def test_log_det_matches_slogdet(rng):
    kde = select_bandwidth(rng.normal(size=(30, 5)))
    sign, logdet = np.linalg.slogdet(kde.bandwidth)
    assert sign > 0
    assert kde.log_det == pytest.approx(logdet, abs=1e-9)
    assert np.all(np.diag(kde.bandwidth_chol) > 0)


def test_rank_deficient_cluster_is_regularized():
    P = np.array([[1.0, 2.0, 3.0]] * 5 + [[2.0, 4.0, 6.0]] * 5)  # rank-1 covariance
    kde = select_bandwidth(P)
    assert np.all(np.linalg.eigvalsh(kde.bandwidth) > 0)


def test_cholesky_retries_then_fails(monkeypatch):
    calls = []

    def broken(H):
        calls.append(H)
        raise np.linalg.LinAlgError("not PD")

    monkeypatch.setattr(np.linalg, "cholesky", broken)
    with pytest.raises(CholeskyFailure):
        select_bandwidth(np.eye(3))
    assert len(calls) == 4


def test_cholesky_retry_raises_lambda(monkeypatch):
    real = np.linalg.cholesky
    seen = []

    def flaky(H):
        seen.append(H)
        if len(seen) == 1:
            raise np.linalg.LinAlgError("not PD")
        return real(H)

    monkeypatch.setattr(np.linalg, "cholesky", flaky)
    kde = select_bandwidth(np.array([[0.0, 0.0]]), lambda_floor=1e-8)
    assert kde.regularization == pytest.approx(1e-7)


def test_density_at_kernel_centre():
    kde = identity_kde([[0.3, -1.2]])
    assert density(kde, np.array([0.3, -1.2])) == pytest.approx(1 / (2 * math.pi), rel=1e-14)


def test_density_matches_naive_oracle(rng):
    P = rng.normal(size=(10, 3))
    kde = select_bandwidth(P, scale=1.3)
    for z in rng.normal(size=(25, 3)):
        assert density(kde, z) == pytest.approx(naive_density(P, kde.bandwidth, z), rel=1e-10)


def test_density_vectorized_equals_pointwise(rng):
    kde = select_bandwidth(rng.normal(size=(20, 2)))
    Q = rng.normal(size=(7, 2))
    np.testing.assert_allclose(density(kde, Q), [density(kde, q) for q in Q], rtol=1e-14)


def test_density_dimension_mismatch():
    kde = identity_kde([[0.0, 0.0]])
    with pytest.raises(DimensionMismatch):
        density(kde, np.zeros(3))


def _mc_integral(fn, lo, hi, dim, n, seed):
    U = np.random.default_rng(seed).uniform(lo, hi, size=(n, dim))
    return float(fn(U).mean()) * (hi - lo) ** dim


def test_density_integrates_to_one(rng):
    P = rng.normal(size=(15, 2))
    kde = select_bandwidth(P)
    total = _mc_integral(lambda U: density(kde, U), -6, 6, 2, 10**6, seed=5)
    assert total == pytest.approx(1.0, abs=0.02)


def test_mixture_integrates_to_one(rng):
    A = rng.normal(size=(12, 2)) * 0.5 - 2
    B = rng.normal(size=(36, 2)) * 0.7 + 2
    kdes = [select_bandwidth(A), select_bandwidth(B)]
    w = [12 / 48, 36 / 48]
    total = _mc_integral(lambda U: mixture_density(kdes, w, U), -7, 7, 2, 10**6, seed=6)
    assert total == pytest.approx(1.0, abs=0.02)


def test_single_member_density_is_unimodal():
    kde = select_bandwidth([[1.0, -1.0, 0.5]], scale=1.0, lambda_floor=0.04)
    centre = kde.points[0]
    r = 10 * math.sqrt(np.diag(kde.bandwidth).max())
    peak = density(kde, centre)
    assert peak >= 0
    for axis in range(3):
        for sign in (-1, 1):
            off = centre.copy()
            off[axis] += sign * r
            assert peak >= density(kde, off) >= 0


def test_log_density_is_finite_far_away():
    kde = identity_kde([[0.0]])
    assert log_density(kde, np.array([100.0])) == pytest.approx(-0.5 * 100**2 - 0.5 * math.log(2 * math.pi))


def test_sample_zero_count(rng):
    kde = select_bandwidth(rng.normal(size=(5, 2)))
    assert sample(kde, 0, rng).shape == (0, 2)


def test_sample_without_noise_returns_members(rng):
    P = rng.normal(size=(8, 3))
    out = sample(select_bandwidth(P), 50, ZeroNoise())
    for row in out:
        assert any(np.array_equal(row, p) for p in P)


def test_sample_is_deterministic(rng):
    kde = select_bandwidth(rng.normal(size=(20, 3)))
    a = sample(kde, 100, np.random.default_rng(1))
    b = sample(kde, 100, np.random.default_rng(1))
    assert a.tobytes() == b.tobytes()


def test_single_point_sampling_moments():
    z = np.array([2.0, -1.0, 0.5])
    kde = select_bandwidth([z], scale=1.0, lambda_floor=0.09)
    H = kde.bandwidth
    n = 100_000
    S = sample(kde, n, np.random.default_rng(12))
    assert np.all(np.abs(S.mean(axis=0) - z) <= 4 * np.sqrt(np.diag(H) / n))
    C = np.cov(S.T)
    assert np.linalg.norm(C - H) / np.linalg.norm(H) < 0.05


def test_cluster_sampling_moment_law(rng):
    P = rng.normal(size=(25, 3)) @ np.array([[1.0, 0.4, 0.0], [0.0, 0.8, 0.3], [0.0, 0.0, 0.5]])
    kde = select_bandwidth(P)
    n = 100_000
    S = sample(kde, n, np.random.default_rng(13))
    expected_cov = np.cov(P.T, ddof=1) * (24 / 25) + kde.bandwidth
    np.testing.assert_allclose(S.mean(axis=0), P.mean(axis=0),
                               atol=0.05 * np.sqrt(np.trace(expected_cov)))
    assert np.linalg.norm(np.cov(S.T) - expected_cov) / np.linalg.norm(expected_cov) < 0.05
