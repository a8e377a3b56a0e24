"""Generate a small self-contained demo corpus and run config.

    python scripts/generate_demo.py demo
    refine validate --config demo/config.json
    refine score    --config demo/config.json
    refine tune     --config demo/config.json
    refine select   --config demo/config.json --methods all
    refine eval     --config demo/config.json

The corpus is a toy qa set: per question, five sampled answers where the
correct one repeats and sits in a tight embedding cluster, with file-backed
embedding and entailment providers.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np


def write_jsonl(path: Path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def main() -> int:
    target = Path(sys.argv[1] if len(sys.argv) > 1 else "demo")
    target.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(11)

    n_samples, dim = 40, 8
    candidates, references, embeddings, nli = [], [], [], []
    hub = rng.normal(size=dim) * 40.0
    for i in range(n_samples):
        sid = f"q{i:03d}"
        correct = f"answer {i}"
        texts = (
            [correct, correct, f"guess {i}", correct, f"offtopic {i}"]
            if rng.random() < 0.55
            else [f"guess {i}", correct, correct, f"offtopic {i}", correct]
        )
        center = rng.normal(size=dim) * 20.0
        spot = {
            correct: center,
            f"guess {i}": center + rng.normal(size=dim) * 4.0,
            f"offtopic {i}": hub + rng.normal(size=dim) * 0.2,
        }
        vec_of = {t: v + rng.normal(size=dim) * 0.01 for t, v in spot.items()}
        for rank, text in enumerate(texts):
            candidates.append({"sample_id": sid, "rank": rank, "text": text})
            embeddings.append(
                {"sample_id": sid, "rank": rank, "vector": [float(v) for v in vec_of[text]]}
            )
        references.append({"sample_id": sid, "task": "qa", "answers": [correct]})
        for a in range(5):
            for b in range(5):
                if a != b:
                    agree = texts[a] == texts[b]
                    nli.append(
                        {
                            "sample_id": sid,
                            "premise_rank": a,
                            "hypothesis_rank": b,
                            "p_entail": 0.9 if agree else 0.2,
                        }
                    )

    write_jsonl(target / "candidates.jsonl", candidates)
    write_jsonl(target / "references.jsonl", references)
    write_jsonl(target / "embeddings.jsonl", embeddings)
    write_jsonl(target / "nli.jsonl", nli)
    (target / "config.json").write_text(
        json.dumps(
            {
                "version": 1,
                "candidates": "candidates.jsonl",
                "references": "references.jsonl",
                "embeddings": {"file": "embeddings.jsonl"},
                "nli": {"file": "nli.jsonl"},
                "output_dir": "out",
                "metric": "hit_rate",
                "extraction": "whole_text",
                "k_max": 5,
            },
            indent=2,
        )
        + "\n"
    )
    print(f"demo corpus written to {target}/ ({n_samples} samples)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
