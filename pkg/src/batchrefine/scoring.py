"""The three raw candidate scores.

Semantic stability: negative distance from a candidate's embedding to the
multiplicity-weighted mean embedding of its sample (the weighted candidate
mean equals the plain mean over raw predictions, because duplicates share
one embedding). Entailment: average directed entailment probability toward
the sample's other raw predictions, divided by the raw count, plus a length
penalty. Inter-sample uncertainty: penalty for candidates whose nearest
neighbors in embedding space belong to different samples.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .core import Candidate, CandidateGroup
from .errors import MissingEmbedding, ZeroVector
from .providers import EntailmentProvider

log = logging.getLogger(__name__)


class DistanceMetric(str, Enum):
    EUCLIDEAN = "euclidean"
    COSINE = "cosine"


@dataclass(frozen=True)
class LengthPenaltyConfig:
    """Length penalty 1 - (1 + q*len)^p with len in whitespace tokens.

    q = 0 disables the penalty (the default); the exponent p sharpens it.
    """

    q: float = 0.0
    p: float = 2.0

    def __post_init__(self):
        if not 0.0 <= self.q < 1.0:
            raise ValueError(f"q must lie in [0, 1), got {self.q}")
        if not self.p > 1.0:
            raise ValueError(f"p must be > 1, got {self.p}")


@dataclass(frozen=True)
class UncertaintyConfig:
    neighborhood_size: int = 5
    batch_limit: int = 1000

    def __post_init__(self):
        if self.neighborhood_size < 1:
            raise ValueError("neighborhood_size must be >= 1")
        if self.batch_limit < 1:
            raise ValueError("batch_limit must be >= 1")


def embedding_matrix(candidates: Sequence[Candidate]) -> np.ndarray:
    """Stack candidate embeddings into an (n, d) float64 matrix."""
    rows = []
    for cand in candidates:
        if cand.embedding is None:
            raise MissingEmbedding(f"candidate {cand.candidate_id} has no embedding attached")
        rows.append(np.asarray(cand.embedding, dtype=np.float64))
    return np.stack(rows)


def _cosine_distance(vec: np.ndarray, ref: np.ndarray, label: str) -> float:
    vn = float(np.linalg.norm(vec))
    rn = float(np.linalg.norm(ref))
    if vn == 0.0:
        raise ZeroVector(f"cosine distance undefined for zero-norm {label}")
    if rn == 0.0:
        raise ZeroVector("cosine distance undefined for zero-norm reference point")
    return 1.0 - float(np.dot(vec, ref)) / (vn * rn)


def stability_scores(
    group: CandidateGroup, metric: DistanceMetric = DistanceMetric.EUCLIDEAN
) -> np.ndarray:
    """Per-candidate stability: negative distance to the sample's mean embedding."""
    embs = embedding_matrix(group.candidates)
    mult = np.array([c.multiplicity for c in group.candidates], dtype=np.float64)
    reference = embs.T @ mult / group.k_raw
    if metric == DistanceMetric.EUCLIDEAN:
        diff = embs - reference
        dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    else:
        dist = np.array(
            [
                _cosine_distance(embs[i], reference, f"candidate {c.candidate_id}")
                for i, c in enumerate(group.candidates)
            ]
        )
    return -dist


def length_penalty(text: str, cfg: LengthPenaltyConfig) -> float:
    tokens = len(text.split())
    return 1.0 - (1.0 + cfg.q * tokens) ** cfg.p


def entailment_scores(
    group: CandidateGroup,
    provider: EntailmentProvider,
    cfg: LengthPenaltyConfig = LengthPenaltyConfig(),
) -> np.ndarray:
    """Per-candidate entailment score.

    For each raw prediction, the directed entailment probabilities toward
    every other raw prediction are summed and divided by the raw count
    (duplicate copies of a candidate receive identical values, so each
    candidate carries its value once); the candidate's length penalty is
    added. Only unique text pairs are sent to the provider.
    """
    cands = group.candidates
    pairs: list[tuple[str, str]] = []
    for a in cands:
        if a.multiplicity > 1:
            pairs.append((a.text, a.text))
        for b in cands:
            if b is not a:
                pairs.append((a.text, b.text))
    values = provider.entail_pairs(pairs) if pairs else []
    lookup = dict(zip(pairs, values))

    out = np.empty(len(cands), dtype=np.float64)
    for idx, a in enumerate(cands):
        total = 0.0
        if a.multiplicity > 1:
            total += (a.multiplicity - 1) * lookup[(a.text, a.text)]
        for b in cands:
            if b is not a:
                total += b.multiplicity * lookup[(a.text, b.text)]
        out[idx] = total / group.k_raw + length_penalty(a.text, cfg)
    return out


def pairwise_distances(
    embeddings: np.ndarray, metric: DistanceMetric = DistanceMetric.EUCLIDEAN
) -> np.ndarray:
    """Symmetric zero-diagonal distance table over all rows of ``embeddings``."""
    x = np.ascontiguousarray(embeddings, dtype=np.float64)
    if metric == DistanceMetric.EUCLIDEAN:
        return kernels.pairwise_euclidean(x)
    norms = np.sqrt(np.einsum("ij,ij->i", x, x))
    if np.any(norms == 0.0):
        bad = int(np.argmax(norms == 0.0))
        raise ZeroVector(f"cosine distance undefined for zero-norm row {bad}")
    unit = x / norms[:, None]
    table = 1.0 - unit @ unit.T
    # exact symmetry and a clean diagonal despite rounding
    table = np.triu(table, 1)
    table = np.maximum(table, 0.0)
    return table + table.T


def _tie_ranks(tie_keys: Sequence | None, n: int) -> np.ndarray:
    if tie_keys is None:
        return np.arange(n, dtype=np.int64)
    if len(tie_keys) != n:
        raise ValueError("tie_keys must have one entry per table row")
    order = sorted(range(n), key=lambda idx: tie_keys[idx])
    ranks = np.empty(n, dtype=np.int64)
    for rank, idx in enumerate(order):
        ranks[idx] = rank
    return ranks


def _clamped_size(size: int, n: int) -> int:
    if size > n - 1:
        log.warning("neighborhood size %d clamped to %d (batch has %d rows)", size, n - 1, n)
        return n - 1
    return size


def knn(index: int, table: np.ndarray, size: int, tie_keys: Sequence | None = None) -> list[int]:
    """Nearest neighbors of one row, ordered by (distance, tie key)."""
    n = table.shape[0]
    size = _clamped_size(size, n)
    tie_rank = _tie_ranks(tie_keys, n)
    order = np.lexsort((tie_rank, table[index]))
    return [int(j) for j in order if j != index][:size]


def knn_all(table: np.ndarray, size: int, tie_keys: Sequence | None = None) -> np.ndarray:
    """Nearest neighbors for every row at once (kernel-backed)."""
    n = table.shape[0]
    size = _clamped_size(size, n)
    tie_rank = _tie_ranks(tie_keys, n)
    return kernels.knn_from_table(np.ascontiguousarray(table), tie_rank, size)


def _batches(groups: Sequence[CandidateGroup], limit: int):
    for start in range(0, len(groups), limit):
        yield groups[start : start + limit]


def uncertainty_scores(
    batch: Sequence[CandidateGroup],
    metric: DistanceMetric = DistanceMetric.EUCLIDEAN,
    cfg: UncertaintyConfig = UncertaintyConfig(),
) -> dict[tuple[str, int], float]:
    """Inter-sample uncertainty per candidate, keyed by (sample_id, candidate_id).

    Each consecutive chunk of at most ``batch_limit`` groups is processed
    independently: the pairwise distance table is computed once per chunk
    and reused for neighbor construction. Neighbors from the same sample
    contribute nothing; every score lies in [-neighborhood_size, 0].
    """
    results: dict[tuple[str, int], float] = {}
    for chunk in _batches(batch, cfg.batch_limit):
        flat: list[tuple[int, CandidateGroup, Candidate]] = [
            (g_idx, group, cand)
            for g_idx, group in enumerate(chunk)
            for cand in group.candidates
        ]
        if not flat:
            continue
        if len(flat) == 1:
            _, group, cand = flat[0]
            results[(group.sample_id, cand.candidate_id)] = 0.0
            continue
        matrix = embedding_matrix([cand for _, _, cand in flat])
        table = pairwise_distances(matrix, metric)
        tie_keys = [(group.sample_id, cand.candidate_id) for _, group, cand in flat]
        neighbors = knn_all(table, cfg.neighborhood_size, tie_keys)
        group_ids = np.array([g_idx for g_idx, _, _ in flat], dtype=np.int64)
        scores = kernels.uncertainty_from_table(table, neighbors, group_ids)
        for (g_idx, group, cand), score in zip(flat, scores):
            results[(group.sample_id, cand.candidate_id)] = float(score)
    return results
