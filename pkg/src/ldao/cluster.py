"""k-means in the joint feature-target space and elbow selection of K."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import TooFewPoints, ValidationError, derive_rng, worker_count
from .kernels import nearest_centroid

logger = logging.getLogger(__name__)

# relative slack for the per-iteration monotonicity check
_SSE_SLACK = 1e-9


@dataclass(frozen=True)
class ClusterModel:
    """Result of one k-means fit.

    ``sse_history`` holds the objective after every assignment step of the
    winning restart; it is non-increasing.
    """

    k: int
    centroids: np.ndarray
    assignments: np.ndarray
    sse: float
    weights: np.ndarray
    n_iter: int = 0
    sse_history: tuple[float, ...] = ()

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k)

    def recompute_sse(self, points: np.ndarray) -> float:
        diff = np.asarray(points) - self.centroids[self.assignments]
        return float(np.einsum("ij,ij->", diff, diff))


@dataclass
class ElbowTrace:
    """SSE(K) over a K range, the relative improvements and the chosen K."""

    sse_by_k: dict[int, float]
    deltas: dict[int, float] = field(default_factory=dict)
    k_star: int | None = None
    models: dict[int, ClusterModel] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.deltas:
            self.deltas = relative_improvements(self.sse_by_k)

    @property
    def k_min(self) -> int:
        return min(self.sse_by_k)

    @property
    def k_max(self) -> int:
        return max(self.sse_by_k)


def relative_improvements(sse_by_k: dict[int, float]) -> dict[int, float]:
    """Delta(K) = (SSE(K-1) - SSE(K)) / SSE(K-1); 0 when SSE(K-1) is 0."""
    out = {}
    for k in sorted(sse_by_k)[1:]:
        prev = sse_by_k[k - 1]
        out[k] = (prev - sse_by_k[k]) / prev if prev > 0 else 0.0
    return out


def _kmeanspp(points, k, rng):
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    _, d2 = nearest_centroid(points, centers[:1])
    for c in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        else:
            idx = int(rng.integers(n))
        centers[c] = points[idx]
        _, d2 = nearest_centroid(points, centers[:c + 1])
    return centers


def _repair_empty(points, labels, d2, centroids):
    """Give every empty cluster the point farthest from its own centroid.

    Donor points come only from clusters with more than one member, so the
    repair never empties another cluster. Returns True if anything moved.
    """
    k = centroids.shape[0]
    counts = np.bincount(labels, minlength=k)
    moved = False
    for j in np.flatnonzero(counts == 0):
        eligible = counts[labels] > 1
        cand = np.where(eligible, d2, -1.0)
        i = int(np.argmax(cand))
        counts[labels[i]] -= 1
        labels[i] = j
        counts[j] = 1
        centroids[j] = points[i]
        d2[i] = 0.0
        moved = True
    return moved


def _update_centroids(points, labels, k):
    counts = np.bincount(labels, minlength=k).astype(np.float64)
    sums = np.column_stack([np.bincount(labels, weights=points[:, j], minlength=k)
                            for j in range(points.shape[1])])
    return sums / counts[:, None]


def _lloyd(points, k, rng, max_iterations, tolerance):
    centroids = _kmeanspp(points, k, rng)
    labels, d2 = nearest_centroid(points, centroids)
    _repair_empty(points, labels, d2, centroids)
    history = [float(d2.sum())]
    n_iter = 0
    for n_iter in range(1, max_iterations + 1):
        new_centroids = _update_centroids(points, labels, k)
        shift = float(np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max())
        centroids = new_centroids
        new_labels, d2 = nearest_centroid(points, centroids)
        _repair_empty(points, new_labels, d2, centroids)
        sse = float(d2.sum())
        if sse > history[-1] * (1 + _SSE_SLACK) + 1e-300:
            raise AssertionError(f"k-means objective rose: {history[-1]!r} -> {sse!r}")
        history.append(sse)
        unchanged = np.array_equal(new_labels, labels)
        labels = new_labels
        if unchanged or shift < tolerance:
            break
    return centroids, labels, history, n_iter


def kmeans_fit(points, k: int, seed: int = 0, restarts: int = 10,
               max_iterations: int = 300, tolerance: float = 1e-6,
               stream: tuple[int, ...] = ()) -> ClusterModel:
    """Lloyd's k-means with k-means++ seeding, best of ``restarts`` by SSE.

    Parameters
    ----------
    points : ndarray, shape (N, D)
    k : int
        Number of clusters, ``1 <= k <= N``.
    seed : int
        Root seed; restart ``r`` draws from the stream ``(*stream, r)``.
    restarts, max_iterations, tolerance
        Iteration stops when assignments are unchanged or no centroid moves
        more than ``tolerance``.

    Returns
    -------
    ClusterModel
        Every cluster is non-empty. Ties in both assignment and restart
        selection go to the lowest index, so results are reproducible.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValidationError("points must be a 2-D array")
    n = points.shape[0]
    if k < 1:
        raise ValidationError("k must be >= 1")
    if n < k:
        raise TooFewPoints(f"{n} points cannot form {k} clusters")
    if restarts < 1:
        raise ValidationError("restarts must be >= 1")

    best = None
    for r in range(restarts):
        rng = derive_rng(seed, *stream, r)
        centroids, labels, history, n_iter = _lloyd(points, k, rng, max_iterations, tolerance)
        if best is None or history[-1] < best[2][-1]:
            best = (centroids, labels, history, n_iter)
    centroids, labels, history, n_iter = best
    counts = np.bincount(labels, minlength=k)
    centroids = np.array(centroids)
    labels = np.array(labels)
    for a in (centroids, labels):
        a.setflags(write=False)
    return ClusterModel(k=k, centroids=centroids, assignments=labels, sse=history[-1],
                        weights=counts / n, n_iter=n_iter, sse_history=tuple(history))


def sse_curve(points, k_min: int, k_max: int, seed: int = 0, restarts: int = 10,
              max_iterations: int = 300, tolerance: float = 1e-6,
              workers: int | None = 1) -> ElbowTrace:
    """Fit k-means for every K in ``[k_min, k_max]`` and record SSE(K).

    Fits for different K run concurrently when ``workers > 1``; each K has
    its own random stream, so the trace does not depend on scheduling.
    """
    points = np.asarray(points, dtype=np.float64)
    if k_min < 1 or k_max < k_min:
        raise ValidationError(f"bad K range [{k_min}, {k_max}]")
    if k_max > points.shape[0]:
        raise TooFewPoints(f"k_max={k_max} exceeds {points.shape[0]} points")

    def fit(k):
        return kmeans_fit(points, k, seed, restarts, max_iterations, tolerance, stream=(k,))

    ks = list(range(k_min, k_max + 1))
    nw = min(worker_count(workers), len(ks))
    if nw > 1:
        with ThreadPoolExecutor(nw) as ex:
            models = list(ex.map(fit, ks))
    else:
        models = [fit(k) for k in ks]
    by_k = dict(zip(ks, models))
    sse = {k: m.sse for k, m in by_k.items()}
    for k in ks[1:]:
        if sse[k] > sse[k - 1]:
            logger.info("SSE rose from K=%d to K=%d (%g -> %g); local optimum",
                        k - 1, k, sse[k - 1], sse[k])
    return ElbowTrace(sse_by_k=sse, models=by_k)


def select_k(trace: ElbowTrace, threshold: float = 0.10) -> int:
    """Smallest K in ``[k_min, k_max - 1]`` with ``Delta(K+1) < threshold``;
    ``k_max`` when the improvement never falls below the threshold."""
    if not trace.sse_by_k:
        raise ValidationError("empty elbow trace")
    lo, hi = trace.k_min, trace.k_max
    for k in range(lo, hi):
        if trace.deltas[k + 1] < threshold:
            return k
    return hi
