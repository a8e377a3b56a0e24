"""Pure numpy implementation of the hot kernels.

Selected automatically when the compiled extension is unavailable (or when
REFINE_FORCE_FALLBACK is set). Results agree with the native kernels to
within 1e-12; within a single backend results are fully deterministic.
"""
from __future__ import annotations

import numpy as np


def pairwise_euclidean(x: np.ndarray) -> np.ndarray:
    """Full symmetric Euclidean distance table with zero diagonal.

    Row-at-a-time differences (never the expanded a^2+b^2-2ab form, which
    loses precision near zero).
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = x.shape[0]
    out = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        diff = x[i + 1 :] - x[i]
        row = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        out[i, i + 1 :] = row
        out[i + 1 :, i] = row
    return out


def knn_from_table(dist: np.ndarray, tie_rank: np.ndarray, size: int) -> np.ndarray:
    """Indices of the ``size`` nearest neighbors per row, self excluded.

    Ordering key is (distance, tie_rank); output columns are in that order.
    """
    n = dist.shape[0]
    size = min(size, n - 1)
    out = np.empty((n, size), dtype=np.int64)
    if size == 0:
        return out
    tie_rank = np.asarray(tie_rank, dtype=np.int64)
    for i in range(n):
        order = np.lexsort((tie_rank, dist[i]))
        order = order[order != i]
        out[i] = order[:size]
    return out


def uncertainty_from_table(
    dist: np.ndarray, neighbors: np.ndarray, group_ids: np.ndarray
) -> np.ndarray:
    """Negated sum of 1/(1+d) over neighbors from other groups.

    Accumulates in neighbor-column order so both backends sum identically.
    """
    n = dist.shape[0]
    group_ids = np.asarray(group_ids, dtype=np.int64)
    scores = np.zeros(n, dtype=np.float64)
    for i in range(n):
        total = 0.0
        for j in neighbors[i]:
            if group_ids[j] != group_ids[i]:
                total += 1.0 / (1.0 + dist[i, j])
        scores[i] = -total
    return scores
