"""Metrics and reference baselines for comparing refinement methods.

Hit rate scores exact answer matches (optionally normalized); Rouge-1/2/L
score n-gram and longest-common-subsequence F1 on a percent scale. The
baselines are rank-0 passthrough, majority vote over extracted answers,
and the per-sample metric upper bound over the candidate set.
"""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

from .core import (
    Candidate,
    CandidateGroup,
    ExtractionRule,
    ReferenceRecord,
    extract_answer,
    normalize_answer,
)
from .errors import MissingSample, RefineError

METHOD_CERET = "ceret"
METHOD_NO_REFINEMENT = "no_refinement"
METHOD_SELF_CONSISTENCY = "self_consistency"
METHOD_ORACLE = "oracle"
METHODS = (METHOD_CERET, METHOD_NO_REFINEMENT, METHOD_SELF_CONSISTENCY, METHOD_ORACLE)

HIT_RATE = "hit_rate"
ROUGE_1 = "rouge1"
ROUGE_2 = "rouge2"
ROUGE_L = "rougeL"
METRIC_NAMES = (HIT_RATE, ROUGE_1, ROUGE_2, ROUGE_L)

# unicode word characters minus underscore; lowercased before matching
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _f1(overlap: float, pred_count: int, ref_count: int) -> float:
    if pred_count == 0 or ref_count == 0 or overlap == 0:
        return 0.0
    precision = overlap / pred_count
    recall = overlap / ref_count
    return 2.0 * precision * recall / (precision + recall)


def rouge_n(prediction: str, reference: str, n: int) -> float:
    """N-gram overlap F1 on a 0..100 scale, clipped multiset intersection."""
    if n not in (1, 2):
        raise ValueError(f"n must be 1 or 2, got {n}")
    pred = _ngrams(tokenize(prediction), n)
    ref = _ngrams(tokenize(reference), n)
    overlap = sum(min(count, ref[gram]) for gram, count in pred.items())
    return 100.0 * _f1(overlap, sum(pred.values()), sum(ref.values()))


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Longest common subsequence length, O(len(a) * len(b)) dynamic program."""
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for token_a in a:
        current = [0]
        for j, token_b in enumerate(b):
            if token_a == token_b:
                current.append(previous[j] + 1)
            else:
                current.append(max(previous[j + 1], current[j]))
        previous = current
    return previous[-1]


def rouge_l(prediction: str, reference: str) -> float:
    """Token-level LCS F1 on a 0..100 scale."""
    pred = tokenize(prediction)
    ref = tokenize(reference)
    return 100.0 * _f1(lcs_length(pred, ref), len(pred), len(ref))


def hit_rate(prediction: str, answers: Sequence[str], normalize: bool = True) -> int:
    """1 iff the prediction matches one of the accepted answers, else 0."""
    if not answers:
        raise ValueError("answers must be non-empty")
    if normalize:
        pred = normalize_answer(prediction)
        return int(any(pred == normalize_answer(a) for a in answers))
    return int(any(prediction == a for a in answers))


@dataclass(frozen=True)
class MetricSpec:
    """Per-sample metric: answer extraction followed by hit rate or Rouge.

    Hit-rate sample values are 0/1 and aggregate on a x100 scale; Rouge
    sample values are already percentages and aggregate by plain mean.
    """

    name: str
    extraction: ExtractionRule = ExtractionRule.whole_text()
    normalize: bool = True

    def __post_init__(self):
        if self.name not in METRIC_NAMES:
            raise ValueError(f"unknown metric {self.name!r}")

    @property
    def aggregate_scale(self) -> float:
        return 100.0 if self.name == HIT_RATE else 1.0

    def sample_value(self, prediction: str, reference: ReferenceRecord) -> float:
        answer = extract_answer(prediction, self.extraction)
        if self.name == HIT_RATE:
            return float(hit_rate(answer, reference.answers, self.normalize))
        if self.name == ROUGE_1:
            return max(rouge_n(answer, ref, 1) for ref in reference.answers)
        if self.name == ROUGE_2:
            return max(rouge_n(answer, ref, 2) for ref in reference.answers)
        return max(rouge_l(answer, ref) for ref in reference.answers)


def no_refinement(group: CandidateGroup) -> Candidate:
    """The candidate that contains the top-ranked raw prediction."""
    return min(group.candidates, key=lambda c: c.min_rank)


class ConsensusChoice(NamedTuple):
    text: str
    candidate: Candidate


def self_consistency(group: CandidateGroup, rule: ExtractionRule) -> ConsensusChoice:
    """Majority vote over extracted answers of all raw predictions.

    Votes are counted on normalized answers; ties resolve to the class seen
    at the earliest rank. Returns the extracted answer text of that class's
    earliest member together with the owning candidate.
    """
    votes: dict[str, list] = {}
    for rank, cand in group.raw_items():
        extracted = extract_answer(cand.text, rule)
        key = normalize_answer(extracted)
        votes.setdefault(key, []).append((rank, extracted, cand))
    best = None
    for members in votes.values():
        first_rank = members[0][0]
        key = (-len(members), first_rank)
        if best is None or key < best[0]:
            best = (key, members[0])
    _, (_, extracted, cand) = best
    return ConsensusChoice(text=extracted, candidate=cand)


def oracle(
    group: CandidateGroup, reference: ReferenceRecord, metric: MetricSpec
) -> tuple[float, Candidate]:
    """Best achievable per-sample metric value over the candidate set."""
    best_value = None
    best_cand = None
    for cand in group.candidates:
        value = metric.sample_value(cand.text, reference)
        if best_value is None or value > best_value:
            best_value = value
            best_cand = cand
    return best_value, best_cand


@dataclass(frozen=True)
class EvalRecord:
    sample_id: str
    method: str
    selected_text: str
    metric_name: str
    metric_value: float


@dataclass(frozen=True)
class MethodAggregate:
    aggregate: float
    n: int


@dataclass(frozen=True)
class EvalReport:
    metric_name: str
    methods: dict[str, MethodAggregate]
    records: list[EvalRecord]


def evaluate_run(
    selections: Mapping[str, Mapping[str, str]],
    references: Mapping[str, ReferenceRecord],
    metric: MetricSpec,
) -> EvalReport:
    """Score every method's selections against the references.

    Every method must cover every referenced sample. Aggregates are means
    on the percent scale, full precision; the oracle, when present, must
    dominate every other method and a violation raises.
    """
    methods: dict[str, MethodAggregate] = {}
    records: list[EvalRecord] = []
    for method, selected in selections.items():
        missing = [sid for sid in references if sid not in selected]
        if missing:
            raise MissingSample(method, missing)
        total = 0.0
        for sample_id, reference in references.items():
            value = metric.sample_value(selected[sample_id], reference)
            total += value
            records.append(
                EvalRecord(sample_id, method, selected[sample_id], metric.name, value)
            )
        n = len(references)
        aggregate = metric.aggregate_scale * total / n if n else 0.0
        methods[method] = MethodAggregate(aggregate=aggregate, n=n)
    if METHOD_ORACLE in methods:
        ceiling = methods[METHOD_ORACLE].aggregate
        for method, agg in methods.items():
            if agg.aggregate > ceiling + 1e-9:
                raise RefineError(
                    f"oracle dominance violated: {method} scored {agg.aggregate} "
                    f"over oracle {ceiling}; selections and evaluation must use "
                    "the same metric"
                )
    return EvalReport(metric_name=metric.name, methods=methods, records=records)
