# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: nearest centroid, k nearest rows, KDE kernel sums."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()


def nearest_centroid(points, centroids):
    cdef const double[:, ::1] P = np.ascontiguousarray(points, dtype=np.float64)
    cdef const double[:, ::1] C = np.ascontiguousarray(centroids, dtype=np.float64)
    cdef Py_ssize_t n = P.shape[0], k = C.shape[0], dim = P.shape[1]
    labels_arr = np.empty(n, dtype=np.intp)
    best_arr = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t[::1] labels = labels_arr
    cdef double[::1] best = best_arr
    cdef Py_ssize_t i, c, j, arg
    cdef double s, t, m
    with nogil:
        for i in range(n):
            arg = 0
            m = 0.0
            for c in range(k):
                s = 0.0
                for j in range(dim):
                    t = P[i, j] - C[c, j]
                    s = s + t * t
                if c == 0 or s < m:
                    m = s
                    arg = c
            labels[i] = arg
            best[i] = m
    return labels_arr, best_arr


def knn_indices(train, queries, Py_ssize_t k):
    cdef const double[:, ::1] T = np.ascontiguousarray(train, dtype=np.float64)
    cdef const double[:, ::1] Q = np.ascontiguousarray(queries, dtype=np.float64)
    cdef Py_ssize_t n = T.shape[0], m = Q.shape[0], dim = T.shape[1]
    out_arr = np.empty((m, k), dtype=np.intp)
    cdef Py_ssize_t[:, ::1] out = out_arr
    cdef double[::1] bd = np.empty(k, dtype=np.float64)
    cdef Py_ssize_t[::1] bi = np.empty(k, dtype=np.intp)
    cdef Py_ssize_t q, r, j, filled, pos
    cdef double s, t
    with nogil:
        for q in range(m):
            filled = 0
            for r in range(n):
                s = 0.0
                for j in range(dim):
                    t = Q[q, j] - T[r, j]
                    s = s + t * t
                if filled == k and not s < bd[k - 1]:
                    continue
                # ties keep the earlier row first
                pos = filled if filled < k else k - 1
                while pos > 0 and bd[pos - 1] > s:
                    if pos < k:
                        bd[pos] = bd[pos - 1]
                        bi[pos] = bi[pos - 1]
                    pos -= 1
                bd[pos] = s
                bi[pos] = r
                if filled < k:
                    filled += 1
            for j in range(k):
                out[q, j] = bi[j]
    return out_arr


def kde_log_sums(wq, wp):
    cdef const double[:, ::1] A = np.ascontiguousarray(wq, dtype=np.float64)
    cdef const double[:, ::1] B = np.ascontiguousarray(wp, dtype=np.float64)
    cdef Py_ssize_t m = A.shape[0], n = B.shape[0], dim = A.shape[1]
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double[::1] d2 = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t q, r, j
    cdef double s, t, lo, acc
    with nogil:
        for q in range(m):
            lo = 0.0
            for r in range(n):
                s = 0.0
                for j in range(dim):
                    t = A[q, j] - B[r, j]
                    s = s + t * t
                d2[r] = s
                if r == 0 or s < lo:
                    lo = s
            acc = 0.0
            for r in range(n):
                acc = acc + exp(-0.5 * (d2[r] - lo))
            out[q] = -0.5 * lo + log(acc)
    return out_arr
