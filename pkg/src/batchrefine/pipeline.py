"""Stage orchestration: validate, score, tune, select, evaluate.

Stages communicate through explicit artifacts on disk (scores.jsonl,
fusion.json/best.json, selected.jsonl, report.json) so that the grid search
can re-fuse cached raw scores cheaply and any stage can be rerun in
isolation. All stages are deterministic: reruns over unchanged inputs
produce byte-identical artifacts regardless of worker count.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

from . import evaluation, fusion, scoring, tuning
from .config import AUTO, FileBackend, HttpBackend, RunConfig
from .core import (
    QA,
    SUMMARIZATION,
    CandidateGroup,
    ExtractionRule,
    RawPrediction,
    ReferenceRecord,
    dedup,
    group_predictions,
)
from .errors import ConfigError, DataError, ParseError
from .evaluation import (
    METHOD_CERET,
    METHOD_NO_REFINEMENT,
    METHOD_ORACLE,
    METHOD_SELF_CONSISTENCY,
    METHODS,
    MetricSpec,
)
from .providers import (
    FileEmbeddingProvider,
    FileEntailmentProvider,
    HttpEmbeddingProvider,
    HttpEntailmentProvider,
    _parse_jsonl,
    load_embedding_file,
    load_nli_file,
)

log = logging.getLogger(__name__)

SCORES_FILE = "scores.jsonl"
BEST_FILE = "best.json"
SWEEP_FILE = "sweep.csv"
GRID_FILE = "grid.csv"
FUSION_FILE = "fusion.json"
SELECTED_FILE = "selected.jsonl"
REPORT_FILE = "report.json"
EVAL_FILE = "eval.jsonl"

DEFAULT_QA_MARKER = "Answer:"


# ---------------------------------------------------------------- loading

def load_candidates(path: Path) -> list[RawPrediction]:
    """Strictly parse candidates.jsonl; (sample_id, rank) must be unique."""
    predictions: list[RawPrediction] = []
    seen: set[tuple[str, int]] = set()
    for lineno, row in _parse_jsonl(path):
        if set(row) != {"sample_id", "rank", "text"}:
            raise ParseError(path, lineno, f"expected keys sample_id/rank/text, got {sorted(row)}")
        if not isinstance(row["sample_id"], str) or not isinstance(row["text"], str):
            raise ParseError(path, lineno, "sample_id and text must be strings")
        if not isinstance(row["rank"], int) or isinstance(row["rank"], bool) or row["rank"] < 0:
            raise ParseError(path, lineno, "rank must be a non-negative integer")
        key = (row["sample_id"], row["rank"])
        if key in seen:
            raise ParseError(path, lineno, f"duplicate (sample_id, rank) {key}")
        seen.add(key)
        predictions.append(RawPrediction(row["sample_id"], row["rank"], row["text"]))
    return predictions


def load_references(path: Path) -> dict[str, ReferenceRecord]:
    records: dict[str, ReferenceRecord] = {}
    for lineno, row in _parse_jsonl(path):
        if set(row) != {"sample_id", "task", "answers"}:
            raise ParseError(path, lineno, f"expected keys sample_id/task/answers, got {sorted(row)}")
        sample_id = row["sample_id"]
        if not isinstance(sample_id, str):
            raise ParseError(path, lineno, "sample_id must be a string")
        if sample_id in records:
            raise ParseError(path, lineno, f"duplicate reference for sample {sample_id!r}")
        answers = row["answers"]
        if not isinstance(answers, list) or not all(isinstance(a, str) for a in answers):
            raise ParseError(path, lineno, "answers must be an array of strings")
        try:
            records[sample_id] = ReferenceRecord(sample_id, row["task"], tuple(answers))
        except ValueError as exc:
            raise ParseError(path, lineno, str(exc)) from exc
    return records


def build_groups(predictions: Sequence[RawPrediction]) -> list[CandidateGroup]:
    return [dedup(bucket) for bucket in group_predictions(predictions)]


def make_providers(cfg: RunConfig, predictions: Sequence[RawPrediction]):
    cache = cfg.cache_dir()
    if isinstance(cfg.embeddings, FileBackend):
        emb = FileEmbeddingProvider(cfg.embeddings.path, predictions)
    else:
        emb = HttpEmbeddingProvider(
            cfg.embeddings.base_url,
            timeout=cfg.embeddings.timeout,
            max_batch=cfg.embeddings.max_batch,
            cache_path=cache / "embeddings.cache.jsonl",
        )
    if isinstance(cfg.nli, FileBackend):
        ent = FileEntailmentProvider(cfg.nli.path, predictions)
    else:
        ent = HttpEntailmentProvider(
            cfg.nli.base_url,
            timeout=cfg.nli.timeout,
            max_batch=cfg.nli.max_batch,
            cache_path=cache / "nli.cache.jsonl",
        )
    return emb, ent


# ------------------------------------------------------------- validation

@dataclass
class Diagnostics:
    errors: list[str]
    warnings: list[str]

    @property
    def clean(self) -> bool:
        return not self.errors

    def lines(self) -> list[str]:
        return [f"error: {e}" for e in self.errors] + [f"warning: {w}" for w in self.warnings]


def _tolerant_rows(path: Path, errors: list[str]):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except ValueError as exc:
                errors.append(f"{path}:{lineno}: invalid JSON: {exc}")
                continue
            if not isinstance(row, dict):
                errors.append(f"{path}:{lineno}: expected a JSON object")
                continue
            yield lineno, row


def cmd_validate(cfg: RunConfig) -> Diagnostics:
    """Schema and coverage checks over every configured input file."""
    errors: list[str] = []
    warnings: list[str] = []

    keys: list[tuple[str, int]] = []
    seen: set[tuple[str, int]] = set()
    per_sample: dict[str, int] = {}
    for lineno, row in _tolerant_rows(cfg.candidates, errors):
        if set(row) != {"sample_id", "rank", "text"}:
            errors.append(
                f"{cfg.candidates}:{lineno}: expected keys sample_id/rank/text, got {sorted(row)}"
            )
            continue
        sid, rank, text = row["sample_id"], row["rank"], row["text"]
        if not isinstance(sid, str) or not isinstance(text, str):
            errors.append(f"{cfg.candidates}:{lineno}: sample_id and text must be strings")
            continue
        if not isinstance(rank, int) or isinstance(rank, bool) or rank < 0:
            errors.append(f"{cfg.candidates}:{lineno}: rank must be a non-negative integer")
            continue
        if (sid, rank) in seen:
            errors.append(f"{cfg.candidates}:{lineno}: duplicate (sample_id, rank) ({sid!r}, {rank})")
            continue
        seen.add((sid, rank))
        keys.append((sid, rank))
        per_sample[sid] = per_sample.get(sid, 0) + 1
        if rank >= cfg.k_max:
            warnings.append(
                f"{cfg.candidates}:{lineno}: rank {rank} >= declared k_max {cfg.k_max} "
                f"for sample {sid!r}"
            )
    for sid, count in per_sample.items():
        if count > cfg.k_max:
            warnings.append(
                f"{cfg.candidates}: sample {sid!r} has {count} predictions, k_max is {cfg.k_max}"
            )

    if cfg.references is not None:
        ref_ids: set[str] = set()
        for lineno, row in _tolerant_rows(cfg.references, errors):
            if set(row) != {"sample_id", "task", "answers"}:
                errors.append(
                    f"{cfg.references}:{lineno}: expected keys sample_id/task/answers, "
                    f"got {sorted(row)}"
                )
                continue
            sid = row["sample_id"]
            if not isinstance(sid, str):
                errors.append(f"{cfg.references}:{lineno}: sample_id must be a string")
                continue
            if sid in ref_ids:
                errors.append(f"{cfg.references}:{lineno}: duplicate reference for {sid!r}")
                continue
            ref_ids.add(sid)
            answers = row["answers"]
            if not isinstance(answers, list) or not all(isinstance(a, str) for a in answers):
                errors.append(f"{cfg.references}:{lineno}: answers must be an array of strings")
                continue
            try:
                ReferenceRecord(sid, row["task"], tuple(answers))
            except ValueError as exc:
                errors.append(f"{cfg.references}:{lineno}: {exc}")
        for sid in per_sample:
            if sid not in ref_ids:
                warnings.append(f"{cfg.references}: no reference for sample {sid!r}")
        for sid in sorted(ref_ids - set(per_sample)):
            warnings.append(f"{cfg.references}: reference {sid!r} has no candidates")

    if isinstance(cfg.embeddings, FileBackend):
        try:
            mapping, duplicates = load_embedding_file(cfg.embeddings.path)
        except Exception as exc:  # noqa: BLE001 - report, don't abort validation
            errors.append(str(exc))
        else:
            if duplicates:
                warnings.append(
                    f"{cfg.embeddings.path}: {duplicates} duplicate embedding keys (last wins)"
                )
            for key in keys:
                if key not in mapping:
                    errors.append(f"{cfg.embeddings.path}: missing embedding for {key}")

    if isinstance(cfg.nli, FileBackend):
        try:
            nli_mapping, duplicates = load_nli_file(cfg.nli.path)
        except Exception as exc:  # noqa: BLE001
            errors.append(str(exc))
        else:
            if duplicates:
                warnings.append(f"{cfg.nli.path}: {duplicates} duplicate nli keys (last wins)")
            ranks_of: dict[str, list[int]] = {}
            for sid, rank in keys:
                ranks_of.setdefault(sid, []).append(rank)
            for sid, ranks in ranks_of.items():
                for i in ranks:
                    for j in ranks:
                        if i != j and (sid, i, j) not in nli_mapping:
                            errors.append(
                                f"{cfg.nli.path}: missing entailment for "
                                f"({sid!r}, premise_rank={i}, hypothesis_rank={j})"
                            )
            known = set(keys)
            stale = sum(
                1
                for sid, i, j in nli_mapping
                if (sid, i) not in known or (sid, j) not in known
            )
            if stale:
                warnings.append(f"{cfg.nli.path}: {stale} rows reference unknown predictions")

    return Diagnostics(errors=errors, warnings=warnings)


# ---------------------------------------------------------------- scoring

def _write_atomic(path: Path, data: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(data, encoding="utf-8")
    os.replace(tmp, path)


def _write_jsonl(path: Path, rows: Sequence[dict]) -> None:
    body = "".join(json.dumps(row, ensure_ascii=False) + "\n" for row in rows)
    _write_atomic(path, body)


def _attach_embeddings(groups: list[CandidateGroup], provider) -> list[CandidateGroup]:
    texts = [cand.text for group in groups for cand in group.candidates]
    if not texts:
        return groups
    vectors = provider.embed_batch(texts)
    out = []
    cursor = 0
    for group in groups:
        cands = tuple(
            cand.with_embedding(vectors[cursor + i])
            for i, cand in enumerate(group.candidates)
        )
        cursor += len(group.candidates)
        out.append(replace(group, candidates=cands))
    return out


def _entailment_pairs(group: CandidateGroup) -> list[tuple[str, str]]:
    pairs = []
    for a in group.candidates:
        if a.multiplicity > 1:
            pairs.append((a.text, a.text))
        for b in group.candidates:
            if b is not a:
                pairs.append((a.text, b.text))
    return pairs


def cmd_score(cfg: RunConfig, workers: int = 1, force: bool = False) -> Path:
    """Run dedup, stability, entailment and uncertainty; write scores.jsonl."""
    diagnostics = cmd_validate(cfg)
    if not diagnostics.clean and not force:
        raise DataError(
            f"validation found {len(diagnostics.errors)} errors "
            "(run `refine validate` for details, or pass --force)"
        )

    predictions = load_candidates(cfg.candidates)
    groups = build_groups(predictions)
    emb_provider, ent_provider = make_providers(cfg, predictions)
    groups = _attach_embeddings(groups, emb_provider)

    # warm the entailment cache in one deterministic pass so worker threads
    # only read; partial progress lands in the disk cache before any abort
    all_pairs = [pair for group in groups for pair in _entailment_pairs(group)]
    if all_pairs:
        ent_provider.entail_pairs(all_pairs)

    def score_group(group: CandidateGroup):
        stability = scoring.stability_scores(group, cfg.stability_metric)
        entailment = scoring.entailment_scores(group, ent_provider, cfg.length_penalty)
        return stability, entailment

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_group = list(pool.map(score_group, groups))
    else:
        per_group = [score_group(group) for group in groups]

    unc = scoring.uncertainty_scores(groups, scoring.DistanceMetric.EUCLIDEAN, cfg.uncertainty)

    rows = []
    for group, (stability, entailment) in zip(groups, per_group):
        for idx, cand in enumerate(group.candidates):
            rows.append(
                {
                    "sample_id": group.sample_id,
                    "candidate_id": cand.candidate_id,
                    "text": cand.text,
                    "multiplicity": cand.multiplicity,
                    "s_sta": float(stability[idx]),
                    "s_ent": float(entailment[idx]),
                    "s_unc": unc[(group.sample_id, cand.candidate_id)],
                }
            )
    out_path = cfg.artifact(SCORES_FILE)
    _write_jsonl(out_path, rows)
    return out_path


# ------------------------------------------------------- scored artifacts

@dataclass
class ScoredGroup:
    group: CandidateGroup
    triples: list[tuple[float, float, float]]  # per candidate, raw scores


def _load_scored_groups(cfg: RunConfig) -> list[ScoredGroup]:
    scores_path = cfg.artifact(SCORES_FILE)
    if not scores_path.exists():
        raise DataError(f"{scores_path} not found: run `refine score` first")
    by_key: dict[tuple[str, int], tuple] = {}
    for lineno, row in _parse_jsonl(scores_path):
        try:
            key = (str(row["sample_id"]), int(row["candidate_id"]))
            entry = (
                (float(row["s_sta"]), float(row["s_ent"]), float(row["s_unc"])),
                str(row["text"]),
                int(row["multiplicity"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(scores_path, lineno, f"bad score row: {exc}") from exc
        by_key[key] = entry

    groups = build_groups(load_candidates(cfg.candidates))
    scored = []
    for group in groups:
        triples = []
        for cand in group.candidates:
            key = (group.sample_id, cand.candidate_id)
            if key not in by_key:
                raise DataError(
                    f"{scores_path} has no scores for {key}; re-run `refine score`"
                )
            triple, text, multiplicity = by_key[key]
            if text != cand.text or multiplicity != cand.multiplicity:
                raise DataError(
                    f"{scores_path} is stale for {key} (candidates changed since "
                    "scoring); re-run `refine score`"
                )
            triples.append(triple)
        scored.append(ScoredGroup(group=group, triples=triples))
    return scored


def _scores_run_id(cfg: RunConfig) -> str:
    digest = hashlib.sha256(cfg.artifact(SCORES_FILE).read_bytes()).hexdigest()
    return digest[:12]


def _resolve_task_kind(references: Mapping[str, ReferenceRecord]) -> str:
    kinds = {ref.task_kind for ref in references.values()}
    if not kinds:
        raise ConfigError(
            "references file is empty; cannot infer the task, set `metric` and "
            "`extraction` explicitly"
        )
    if len(kinds) != 1:
        raise ConfigError(
            "dataset mixes qa and summarization samples: set `metric` and "
            "`extraction` explicitly in the config"
        )
    return next(iter(kinds))


def resolve_extraction(
    cfg: RunConfig, references: Mapping[str, ReferenceRecord] | None
) -> ExtractionRule:
    if cfg.extraction != AUTO:
        return cfg.extraction
    if not references:
        raise ConfigError(
            "extraction is 'auto' but no references are configured to infer the task; "
            "set `extraction` explicitly"
        )
    kind = _resolve_task_kind(references)
    if kind == QA:
        return ExtractionRule.prefix_marker(DEFAULT_QA_MARKER)
    return ExtractionRule.whole_text()


def resolve_metric(cfg: RunConfig, references: Mapping[str, ReferenceRecord]) -> MetricSpec:
    extraction = resolve_extraction(cfg, references)
    if cfg.metric != AUTO:
        name = cfg.metric
    else:
        kind = _resolve_task_kind(references)
        name = evaluation.HIT_RATE if kind == QA else evaluation.ROUGE_1
    return MetricSpec(name=name, extraction=extraction, normalize=cfg.normalize_answers)


def _require_references(cfg: RunConfig, purpose: str) -> dict[str, ReferenceRecord]:
    if cfg.references is None:
        raise ConfigError(f"{purpose} requires a `references` path in the config")
    return load_references(cfg.references)


def _fit_or_fixed_scaling(cfg: RunConfig, scored: Sequence[ScoredGroup]) -> fusion.ScalingFactors:
    if cfg.scaling is not None:
        return cfg.scaling
    triples = [t for sg in scored for t in sg.triples]
    factors = fusion.fit_scaling(triples, run_id=_scores_run_id(cfg))
    if factors.degenerate:
        log.warning("degenerate score dimensions during scaling fit: %s", factors.degenerate)
    return factors


def _scaled_matrix(sg: ScoredGroup, scaling: fusion.ScalingFactors) -> list[tuple[float, float, float]]:
    us = scaling.as_tuple()
    return [
        tuple(fusion.sigmoid_scale(raw, u) for raw, u in zip(triple, us))
        for triple in sg.triples
    ]


def _select_with(
    sg: ScoredGroup,
    scaled: Sequence[tuple[float, float, float]],
    coefficients: fusion.Coefficients,
) -> tuple[int, float]:
    finals = [fusion.fuse(s, coefficients) for s in scaled]
    cid = fusion.select(sg.group.candidates, finals)
    return cid, finals[cid]


# ------------------------------------------------------------------ tune

def cmd_tune(cfg: RunConfig) -> tuple[Path, Path]:
    """Fit scaling, grid-search the coefficients, emit the sensitivity sweeps."""
    if cfg.coefficients is not None:
        raise ConfigError(
            "coefficients are fixed in the config; set \"coefficients\": \"tune\" "
            "to run the grid search"
        )
    references = _require_references(cfg, "tune")
    metric = resolve_metric(cfg, references)
    scored = _load_scored_groups(cfg)
    missing = [sg.group.sample_id for sg in scored if sg.group.sample_id not in references]
    if missing:
        raise DataError(
            f"{cfg.references} lacks references for scored samples: {sorted(missing)[:5]}"
        )
    scaling = _fit_or_fixed_scaling(cfg, scored)
    run_id = _scores_run_id(cfg)

    # candidate metric values and scaled triples never change across grid
    # points; only fusion and selection are re-run per point
    prepared = []
    for sg in scored:
        reference = references[sg.group.sample_id]
        values = [metric.sample_value(c.text, reference) for c in sg.group.candidates]
        prepared.append((sg, _scaled_matrix(sg, scaling), values))

    def evaluate(coefficients: fusion.Coefficients) -> float:
        total = 0.0
        for sg, scaled, values in prepared:
            cid, _ = _select_with(sg, scaled, coefficients)
            total += values[cid]
        return metric.aggregate_scale * total / len(prepared) if prepared else 0.0

    best, table = tuning.grid_search(evaluate, cfg.grid_step, metric.name)
    sweeps = [
        row
        for axis in tuning.AXES
        for row in tuning.sensitivity_sweep(evaluate, axis, cfg.grid_step, metric.name)
    ]

    best_path = cfg.artifact(BEST_FILE)
    _write_atomic(
        best_path,
        json.dumps(
            {
                "alpha": best.coefficients.alpha,
                "beta": best.coefficients.beta,
                "gamma": best.coefficients.gamma,
                "metric_name": best.metric_name,
                "metric_value": best.metric_value,
                "validation_run_id": run_id,
                "grid_step": cfg.grid_step,
            },
            indent=2,
        )
        + "\n",
    )
    _write_atomic(
        cfg.artifact(FUSION_FILE),
        json.dumps(
            {
                "u_sta": scaling.u_sta,
                "u_ent": scaling.u_ent,
                "u_unc": scaling.u_unc,
                "alpha": best.coefficients.alpha,
                "beta": best.coefficients.beta,
                "gamma": best.coefficients.gamma,
            },
            indent=2,
        )
        + "\n",
    )

    sweep_path = cfg.artifact(SWEEP_FILE)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["axis", "x", "alpha", "beta", "gamma", "metric_name", "metric_value"])
    for row in sweeps:
        writer.writerow(
            [
                row.axis,
                repr(row.x),
                repr(row.coefficients.alpha),
                repr(row.coefficients.beta),
                repr(row.coefficients.gamma),
                row.metric_name,
                repr(row.metric_value),
            ]
        )
    _write_atomic(sweep_path, buffer.getvalue())

    grid_buffer = io.StringIO()
    writer = csv.writer(grid_buffer, lineterminator="\n")
    writer.writerow(["alpha", "beta", "gamma", "metric_name", "metric_value"])
    for point in table:
        writer.writerow(
            [
                repr(point.coefficients.alpha),
                repr(point.coefficients.beta),
                repr(point.coefficients.gamma),
                point.metric_name,
                repr(point.metric_value),
            ]
        )
    _write_atomic(cfg.artifact(GRID_FILE), grid_buffer.getvalue())
    return best_path, sweep_path


# ---------------------------------------------------------------- select

def _resolve_fusion_params(
    cfg: RunConfig, scored: Sequence[ScoredGroup]
) -> tuple[fusion.Coefficients, fusion.ScalingFactors]:
    coefficients = cfg.coefficients
    scaling = cfg.scaling
    fusion_path = cfg.artifact(FUSION_FILE)
    if (coefficients is None or scaling is None) and fusion_path.exists():
        stored = json.loads(fusion_path.read_text(encoding="utf-8"))
        if coefficients is None:
            coefficients = fusion.Coefficients(
                float(stored["alpha"]), float(stored["beta"]), float(stored["gamma"])
            )
        if scaling is None:
            scaling = fusion.ScalingFactors(
                float(stored["u_sta"]),
                float(stored["u_ent"]),
                float(stored["u_unc"]),
                fit_source=f"loaded:{fusion_path.name}",
            )
    if coefficients is None:
        raise DataError(
            "no fusion coefficients available: run `refine tune` first or set "
            "fixed coefficients in the config"
        )
    if scaling is None:
        scaling = _fit_or_fixed_scaling(cfg, scored)
    return coefficients, scaling


def parse_methods(value: str | Sequence[str] | None) -> tuple[str, ...]:
    if value is None:
        return (METHOD_CERET,)
    if isinstance(value, str):
        parts = [part.strip() for part in value.split(",") if part.strip()]
    else:
        parts = list(value)
    if parts == ["all"]:
        return METHODS
    unknown = [p for p in parts if p not in METHODS]
    if unknown:
        raise ConfigError(f"unknown methods {unknown}; choose from {list(METHODS)} or 'all'")
    # canonical order, duplicates dropped
    return tuple(m for m in METHODS if m in parts)


def cmd_select(cfg: RunConfig, methods: Sequence[str] = (METHOD_CERET,)) -> Path:
    """Write one selection row per sample per requested method."""
    methods = parse_methods(list(methods))
    scored = _load_scored_groups(cfg)

    references: dict[str, ReferenceRecord] | None = None
    metric: MetricSpec | None = None
    extraction: ExtractionRule | None = None
    if METHOD_ORACLE in methods:
        references = _require_references(cfg, "the oracle baseline")
        metric = resolve_metric(cfg, references)
    if METHOD_SELF_CONSISTENCY in methods:
        if cfg.extraction == AUTO and references is None and cfg.references is not None:
            references = load_references(cfg.references)
        extraction = resolve_extraction(cfg, references)
        if references is not None and _resolve_task_kind(references) != QA:
            log.warning("self_consistency is a fixed-answer baseline; dataset is not qa")

    coefficients = scaling = None
    if METHOD_CERET in methods:
        coefficients, scaling = _resolve_fusion_params(cfg, scored)

    rows = []
    for sg in scored:
        group = sg.group
        scaled = _scaled_matrix(sg, scaling) if scaling is not None else None
        for method in methods:
            if method == METHOD_CERET:
                cid, final = _select_with(sg, scaled, coefficients)
                cand = group.candidate_by_id(cid)
                rows.append(
                    {
                        "sample_id": group.sample_id,
                        "method": method,
                        "candidate_id": cid,
                        "text": cand.text,
                        "final": final,
                    }
                )
            elif method == METHOD_NO_REFINEMENT:
                cand = evaluation.no_refinement(group)
                rows.append(
                    {
                        "sample_id": group.sample_id,
                        "method": method,
                        "candidate_id": cand.candidate_id,
                        "text": cand.text,
                        "final": None,
                    }
                )
            elif method == METHOD_SELF_CONSISTENCY:
                choice = evaluation.self_consistency(group, extraction)
                rows.append(
                    {
                        "sample_id": group.sample_id,
                        "method": method,
                        "candidate_id": choice.candidate.candidate_id,
                        "text": choice.text,
                        "final": None,
                    }
                )
            else:  # oracle
                if group.sample_id not in references:
                    raise DataError(
                        f"{cfg.references} lacks a reference for sample {group.sample_id!r}"
                    )
                _, cand = evaluation.oracle(group, references[group.sample_id], metric)
                rows.append(
                    {
                        "sample_id": group.sample_id,
                        "method": method,
                        "candidate_id": cand.candidate_id,
                        "text": cand.text,
                        "final": None,
                    }
                )
    out_path = cfg.artifact(SELECTED_FILE)
    _write_jsonl(out_path, rows)
    return out_path


# ------------------------------------------------------------------ eval

def cmd_eval(cfg: RunConfig, methods: Sequence[str] | None = None) -> tuple[Path, evaluation.EvalReport]:
    """Score selected.jsonl against the references; write report.json + eval.jsonl."""
    selected_path = cfg.artifact(SELECTED_FILE)
    if not selected_path.exists():
        raise DataError(f"{selected_path} not found: run `refine select` first")
    references = _require_references(cfg, "eval")
    metric = resolve_metric(cfg, references)

    selections: dict[str, dict[str, str]] = {}
    for lineno, row in _parse_jsonl(selected_path):
        try:
            method = str(row["method"])
            sample_id = str(row["sample_id"])
            text = str(row["text"])
        except KeyError as exc:
            raise ParseError(selected_path, lineno, f"bad selection row: {exc}") from exc
        selections.setdefault(method, {})[sample_id] = text
    if methods:
        requested = parse_methods(list(methods))
        missing = [m for m in requested if m not in selections]
        if missing:
            raise DataError(
                f"{selected_path} has no rows for methods {missing}; re-run `refine select`"
            )
        selections = {m: selections[m] for m in requested}
    else:
        selections = {m: selections[m] for m in METHODS if m in selections}

    report = evaluation.evaluate_run(selections, references, metric)

    report_payload = {
        "metric": report.metric_name,
        "methods": {
            name: {"aggregate": agg.aggregate, "n": agg.n}
            for name, agg in report.methods.items()
        },
    }
    report_path = cfg.artifact(REPORT_FILE)
    _write_atomic(report_path, json.dumps(report_payload, indent=2) + "\n")
    _write_jsonl(
        cfg.artifact(EVAL_FILE),
        [
            {
                "sample_id": rec.sample_id,
                "method": rec.method,
                "selected_text": rec.selected_text,
                "metric_name": rec.metric_name,
                "metric_value": rec.metric_value,
            }
            for rec in report.records
        ],
    )
    return report_path, report
