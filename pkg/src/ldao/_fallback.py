"""Pure-numpy versions of the hot kernels.

Squared distances are accumulated one coordinate at a time, in the same
order as the compiled kernels, so both backends return bit-identical
distances, labels and neighbour lists.
"""
import numpy as np

_CHUNK = 2048


def _sq_dists(A, B):
    out = np.zeros((A.shape[0], B.shape[0]))
    for j in range(A.shape[1]):
        diff = A[:, j, None] - B[None, :, j]
        out += diff * diff
    return out


def nearest_centroid(points, centroids):
    """Index of the nearest centroid per point (lowest index on ties) and
    the squared distance to it."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    centroids = np.ascontiguousarray(centroids, dtype=np.float64)
    labels = np.empty(points.shape[0], dtype=np.intp)
    best = np.empty(points.shape[0])
    for s in range(0, points.shape[0], _CHUNK):
        d2 = _sq_dists(points[s:s + _CHUNK], centroids)
        lab = d2.argmin(axis=1)
        labels[s:s + _CHUNK] = lab
        best[s:s + _CHUNK] = d2[np.arange(len(lab)), lab]
    return labels, best


def knn_indices(train, queries, k):
    """Rows of ``train`` nearest to each query, ordered by (distance, row)."""
    train = np.ascontiguousarray(train, dtype=np.float64)
    queries = np.ascontiguousarray(queries, dtype=np.float64)
    out = np.empty((queries.shape[0], k), dtype=np.intp)
    for s in range(0, queries.shape[0], _CHUNK):
        d2 = _sq_dists(queries[s:s + _CHUNK], train)
        out[s:s + _CHUNK] = np.argsort(d2, axis=1, kind="stable")[:, :k]
    return out


def kde_log_sums(wq, wp):
    """``log(sum_j exp(-|wq_i - wp_j|^2 / 2))`` for each whitened query."""
    wq = np.ascontiguousarray(wq, dtype=np.float64)
    wp = np.ascontiguousarray(wp, dtype=np.float64)
    out = np.empty(wq.shape[0])
    for s in range(0, wq.shape[0], _CHUNK):
        d2 = _sq_dists(wq[s:s + _CHUNK], wp)
        m = d2.min(axis=1)
        out[s:s + _CHUNK] = -0.5 * m + np.log(np.exp(-0.5 * (d2 - m[:, None])).sum(axis=1))
    return out
