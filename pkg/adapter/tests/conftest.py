from __future__ import annotations

import json
from pathlib import Path

import pytest

from modeladapter.config import AdapterConfig, ModelSpec


def tiny_config(base: Path, **overrides) -> AdapterConfig:
    defaults = dict(
        encoder=ModelSpec("untrained", hidden_size=16, layers=1, heads=2, seed=3),
        nli=ModelSpec("untrained", hidden_size=16, layers=1, heads=2, seed=3),
        max_length=48,
        max_batch=8,
        candidates=base / "candidates.jsonl",
        output_dir=base,
    )
    defaults.update(overrides)
    return AdapterConfig(**defaults)


def write_corpus(base: Path, n_samples: int = 10, k: int = 5) -> Path:
    """Candidates with in-sample duplicates plus matching qa references."""
    base.mkdir(parents=True, exist_ok=True)
    candidates = []
    references = []
    for i in range(n_samples):
        sid = f"s{i:02d}"
        texts = [
            f"answer {i}",
            f"answer {i}",  # duplicate of rank 0
            f"other idea {i}",
            f"answer {i} with more words",
            f"noise {i}",
        ][:k]
        for rank, text in enumerate(texts):
            candidates.append({"sample_id": sid, "rank": rank, "text": text})
        references.append({"sample_id": sid, "task": "qa", "answers": [f"answer {i}"]})
    with open(base / "candidates.jsonl", "w", encoding="utf-8") as fh:
        for row in candidates:
            fh.write(json.dumps(row) + "\n")
    with open(base / "references.jsonl", "w", encoding="utf-8") as fh:
        for row in references:
            fh.write(json.dumps(row) + "\n")
    return base


@pytest.fixture(scope="session")
def corpus(tmp_path_factory) -> Path:
    return write_corpus(tmp_path_factory.mktemp("corpus"))


@pytest.fixture(scope="session")
def adapter_config(corpus) -> AdapterConfig:
    return tiny_config(corpus)
