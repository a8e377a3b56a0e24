"""Export embeddings.jsonl and nli.jsonl from a candidates file.

One embedding row per raw prediction; one entailment row per ordered
within-sample rank pair (i != j). Output files conform to the refinement
engine's provider schemas and pass its `refine validate` cleanly.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

from .config import AdapterConfig
from .encoders import EntailmentScorer, TextEncoder


def read_candidates(path: Path) -> list[dict]:
    rows = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            row = json.loads(line)
            if set(row) != {"sample_id", "rank", "text"}:
                raise ValueError(f"{path}:{lineno}: bad candidate row keys {sorted(row)}")
            key = (row["sample_id"], row["rank"])
            if key in seen:
                raise ValueError(f"{path}:{lineno}: duplicate key {key}")
            seen.add(key)
            rows.append(row)
    return rows


def _write_jsonl(path: Path, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def export_embeddings(cfg: AdapterConfig, candidates_path: Path | None = None) -> Path:
    source = candidates_path or cfg.candidates
    if source is None:
        raise ValueError("no candidates path configured")
    encoder = TextEncoder(cfg.encoder, cfg.max_length, cfg.device)
    rows = read_candidates(source)
    out = [
        {
            "sample_id": row["sample_id"],
            "rank": row["rank"],
            "vector": encoder.encode(row["text"]),
        }
        for row in rows
    ]
    target = cfg.output_dir / "embeddings.jsonl"
    _write_jsonl(target, out)
    if encoder.truncated:
        print(
            f"warning: {encoder.truncated} texts exceeded max_length "
            f"{cfg.max_length} and were truncated",
            file=sys.stderr,
        )
    return target


def export_nli(cfg: AdapterConfig, candidates_path: Path | None = None) -> Path:
    source = candidates_path or cfg.candidates
    if source is None:
        raise ValueError("no candidates path configured")
    scorer = EntailmentScorer(cfg.nli, cfg.max_length, cfg.device)
    by_sample: dict[str, list[dict]] = {}
    for row in read_candidates(source):
        by_sample.setdefault(row["sample_id"], []).append(row)

    out = []
    for sample_id, rows in by_sample.items():
        rows = sorted(rows, key=lambda r: r["rank"])
        for premise in rows:
            for hypothesis in rows:
                if premise["rank"] == hypothesis["rank"]:
                    continue
                out.append(
                    {
                        "sample_id": sample_id,
                        "premise_rank": premise["rank"],
                        "hypothesis_rank": hypothesis["rank"],
                        "p_entail": scorer.score(premise["text"], hypothesis["text"]),
                    }
                )
    target = cfg.output_dir / "nli.jsonl"
    _write_jsonl(target, out)
    if scorer.truncated:
        print(
            f"warning: {scorer.truncated} pair encodings exceeded max_length "
            f"{cfg.max_length} and were truncated",
            file=sys.stderr,
        )
    return target
