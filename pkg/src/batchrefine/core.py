"""Domain types shared by the whole pipeline, plus deduplication and answer handling.

Raw predictions are the sampled generations for one input, identified by
(sample_id, rank). Deduplication collapses textually identical predictions
into candidates carrying a multiplicity, which downstream scoring treats as
a frequency signal.
"""
from __future__ import annotations

import string
import unicodedata
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyCandidateSet

QA = "qa"
SUMMARIZATION = "summarization"
TASK_KINDS = (QA, SUMMARIZATION)


@dataclass(frozen=True)
class RawPrediction:
    """One sampled LLM output for one input."""

    sample_id: str
    rank: int
    text: str

    def __post_init__(self):
        if self.rank < 0:
            raise ValueError(f"rank must be >= 0, got {self.rank}")


@dataclass(frozen=True)
class Candidate:
    """A deduplicated prediction: one text class with its raw occurrences.

    ``text`` is the verbatim text of the lowest-rank member of the duplicate
    class; ``source_ranks`` lists every raw rank that collapsed into it.
    """

    candidate_id: int
    text: str
    multiplicity: int
    source_ranks: tuple[int, ...]
    embedding: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.multiplicity != len(self.source_ranks):
            raise ValueError("multiplicity must equal len(source_ranks)")
        if self.multiplicity < 1:
            raise ValueError("multiplicity must be >= 1")

    @property
    def min_rank(self) -> int:
        return min(self.source_ranks)

    def with_embedding(self, vector: np.ndarray) -> "Candidate":
        vec = np.asarray(vector, dtype=np.float64)
        vec.flags.writeable = False
        return replace(self, embedding=vec)


@dataclass(frozen=True)
class CandidateGroup:
    """Per-input deduplicated candidates; multiplicities sum to the raw count."""

    sample_id: str
    candidates: tuple[Candidate, ...]
    k_raw: int

    def __post_init__(self):
        if sum(c.multiplicity for c in self.candidates) != self.k_raw:
            raise ValueError("candidate multiplicities must sum to k_raw")

    def raw_items(self) -> list[tuple[int, Candidate]]:
        """(rank, owning candidate) for every raw prediction, rank ascending."""
        items = [(r, c) for c in self.candidates for r in c.source_ranks]
        items.sort(key=lambda it: it[0])
        return items

    def candidate_by_id(self, candidate_id: int) -> Candidate:
        return self.candidates[candidate_id]


@dataclass(frozen=True)
class ReferenceRecord:
    """Gold answers for one sample. QA may carry alternatives; summaries carry one."""

    sample_id: str
    task_kind: str
    answers: tuple[str, ...]

    def __post_init__(self):
        if self.task_kind not in TASK_KINDS:
            raise ValueError(f"unknown task kind {self.task_kind!r}")
        if not self.answers:
            raise ValueError("answers must be non-empty")
        if self.task_kind == SUMMARIZATION and len(self.answers) != 1:
            raise ValueError("summarization records carry exactly one reference")


@dataclass(frozen=True)
class ScoreVector:
    """Raw and sigmoid-scaled scores for one candidate plus the fused final score."""

    s_sta: float
    s_ent: float
    s_unc: float
    s_sta_scaled: float
    s_ent_scaled: float
    s_unc_scaled: float
    final: float

    def raw(self) -> tuple[float, float, float]:
        return (self.s_sta, self.s_ent, self.s_unc)

    def scaled(self) -> tuple[float, float, float]:
        return (self.s_sta_scaled, self.s_ent_scaled, self.s_unc_scaled)


def canonical_text(text: str) -> str:
    """Canonical form used for duplicate detection.

    Unicode NFC, leading/trailing whitespace trimmed, internal whitespace
    runs collapsed to single spaces. Case-preserving: case-distinct outputs
    are never merged.
    """
    return " ".join(unicodedata.normalize("NFC", text).split())


def dedup(raw: Sequence[RawPrediction]) -> CandidateGroup:
    """Merge duplicate predictions of one sample into a CandidateGroup.

    Candidates are ordered by their minimum original rank; each keeps the
    verbatim text of its lowest-rank member.
    """
    if not raw:
        raise EmptyCandidateSet("cannot deduplicate an empty prediction set")
    sample_ids = {p.sample_id for p in raw}
    if len(sample_ids) != 1:
        raise ValueError(f"dedup expects one sample, got ids {sorted(sample_ids)}")
    ranks = [p.rank for p in raw]
    if len(set(ranks)) != len(ranks):
        raise ValueError(f"duplicate ranks within sample {raw[0].sample_id!r}")

    classes: dict[str, list[RawPrediction]] = {}
    for pred in sorted(raw, key=lambda p: p.rank):
        classes.setdefault(canonical_text(pred.text), []).append(pred)

    candidates = tuple(
        Candidate(
            candidate_id=cid,
            text=members[0].text,
            multiplicity=len(members),
            source_ranks=tuple(p.rank for p in members),
        )
        # insertion order == first-appearance order == min-rank order
        for cid, members in enumerate(classes.values())
    )
    return CandidateGroup(sample_id=raw[0].sample_id, candidates=candidates, k_raw=len(raw))


def expand_group(group: CandidateGroup) -> list[RawPrediction]:
    """Inverse-ish of dedup: one RawPrediction per source rank, class text."""
    return [
        RawPrediction(group.sample_id, rank, cand.text)
        for rank, cand in group.raw_items()
    ]


def normalize_answer(text: str) -> str:
    """Normalize an answer string for exact-match comparison.

    Lowercase, NFC, surrounding whitespace and ASCII punctuation stripped,
    internal whitespace collapsed. Idempotent.
    """
    text = unicodedata.normalize("NFC", text)
    text = text.lower()
    text = text.strip()
    text = text.strip(string.punctuation)
    return " ".join(text.split())


WHOLE_TEXT = "whole_text"
PREFIX_MARKER = "prefix_marker"


@dataclass(frozen=True)
class ExtractionRule:
    """How to isolate the answer span from a generated text."""

    kind: str
    marker: str | None = None

    def __post_init__(self):
        if self.kind not in (WHOLE_TEXT, PREFIX_MARKER):
            raise ValueError(f"unknown extraction kind {self.kind!r}")
        if self.kind == PREFIX_MARKER and not self.marker:
            raise ValueError("prefix_marker rule requires a marker")

    @classmethod
    def whole_text(cls) -> "ExtractionRule":
        return cls(WHOLE_TEXT)

    @classmethod
    def prefix_marker(cls, marker: str) -> "ExtractionRule":
        return cls(PREFIX_MARKER, marker)


def extract_answer(text: str, rule: ExtractionRule) -> str:
    """Extract the answer span from ``text`` according to ``rule``.

    prefix_marker takes the substring after the first case-insensitive
    occurrence of the marker, up to the first period or end of string.
    A missing marker falls back to the whole trimmed text; never errors.
    """
    if rule.kind == WHOLE_TEXT:
        return text.strip()
    idx = text.lower().find(rule.marker.lower())
    if idx < 0:
        return text.strip()
    start = idx + len(rule.marker)
    end = text.find(".", start)
    span = text[start:] if end < 0 else text[start:end]
    return span.strip()


def group_predictions(predictions: Iterable[RawPrediction]) -> list[list[RawPrediction]]:
    """Bucket a prediction stream by sample_id, preserving first-appearance order."""
    buckets: dict[str, list[RawPrediction]] = {}
    for pred in predictions:
        buckets.setdefault(pred.sample_id, []).append(pred)
    return list(buckets.values())
