# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled implementations of the hot kernels: pairwise Euclidean distances,
deterministic k-nearest-neighbor selection, and the uncertainty accumulation."""

import numpy as np

from libc.math cimport sqrt


def pairwise_euclidean(x):
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.zeros((x.shape[0], x.shape[0]), dtype=np.float64)
    _pairwise_euclidean(x, out)
    return out


cdef void _pairwise_euclidean(double[:, ::1] x, double[:, ::1] out) noexcept:
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef Py_ssize_t i, j, t
    cdef double acc, diff
    for i in range(n):
        for j in range(i + 1, n):
            acc = 0.0
            for t in range(d):
                diff = x[i, t] - x[j, t]
                acc += diff * diff
            acc = sqrt(acc)
            out[i, j] = acc
            out[j, i] = acc


def knn_from_table(dist, tie_rank, size):
    dist = np.ascontiguousarray(dist, dtype=np.float64)
    tie_rank = np.ascontiguousarray(tie_rank, dtype=np.int64)
    cdef Py_ssize_t n = dist.shape[0]
    cdef Py_ssize_t s = min(size, n - 1)
    out = np.empty((n, s), dtype=np.int64)
    if s > 0:
        _knn_from_table(dist, tie_rank, out)
    return out


cdef void _knn_from_table(double[:, ::1] dist, long long[::1] tie_rank,
                          long long[:, ::1] out) noexcept:
    # insertion selection into a sorted buffer of size s; comparator is
    # (distance, tie_rank) ascending, self excluded
    cdef Py_ssize_t n = dist.shape[0]
    cdef Py_ssize_t s = out.shape[1]
    cdef Py_ssize_t i, j, pos, filled, t
    cdef double dij
    cdef long long rj
    best_d_arr = np.empty(s, dtype=np.float64)
    best_r_arr = np.empty(s, dtype=np.int64)
    best_j_arr = np.empty(s, dtype=np.int64)
    cdef double[::1] best_d = best_d_arr
    cdef long long[::1] best_r = best_r_arr
    cdef long long[::1] best_j = best_j_arr
    for i in range(n):
        filled = 0
        for j in range(n):
            if j == i:
                continue
            dij = dist[i, j]
            rj = tie_rank[j]
            if filled == s and (dij > best_d[s - 1] or
                                (dij == best_d[s - 1] and rj >= best_r[s - 1])):
                continue
            pos = filled if filled < s else s - 1
            while pos > 0 and (dij < best_d[pos - 1] or
                               (dij == best_d[pos - 1] and rj < best_r[pos - 1])):
                best_d[pos] = best_d[pos - 1]
                best_r[pos] = best_r[pos - 1]
                best_j[pos] = best_j[pos - 1]
                pos -= 1
            best_d[pos] = dij
            best_r[pos] = rj
            best_j[pos] = j
            if filled < s:
                filled += 1
        for t in range(s):
            out[i, t] = best_j[t]


def uncertainty_from_table(dist, neighbors, group_ids):
    dist = np.ascontiguousarray(dist, dtype=np.float64)
    neighbors = np.ascontiguousarray(neighbors, dtype=np.int64)
    group_ids = np.ascontiguousarray(group_ids, dtype=np.int64)
    scores = np.zeros(dist.shape[0], dtype=np.float64)
    if neighbors.shape[1] > 0:
        _uncertainty_from_table(dist, neighbors, group_ids, scores)
    return scores


cdef void _uncertainty_from_table(double[:, ::1] dist, long long[:, ::1] neighbors,
                                  long long[::1] group_ids, double[::1] scores) noexcept:
    cdef Py_ssize_t n = dist.shape[0]
    cdef Py_ssize_t s = neighbors.shape[1]
    cdef Py_ssize_t i, t
    cdef long long j
    cdef double total
    for i in range(n):
        total = 0.0
        for t in range(s):
            j = neighbors[i, t]
            if group_ids[j] != group_ids[i]:
                total += 1.0 / (1.0 + dist[i, j])
        scores[i] = -total
