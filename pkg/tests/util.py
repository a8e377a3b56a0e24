"""Shared test helpers: group builders, in-memory providers, corpus writers."""
from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer
from pathlib import Path

import numpy as np

from batchrefine.core import RawPrediction, dedup


def build_planted_fixture(
    root: Path,
    n_samples: int = 500,
    seed: int = 20240501,
    rank0_correct_fraction: float = 0.6,
    dim: int = 8,
    name: str = "planted",
) -> Path:
    """Synthetic qa corpus with a recoverable signal.

    Every sample has 5 predictions: the correct answer repeated three times
    (a tight embedding cluster around the sample's own center) and two
    distractors, one offset from the center and one parked in a shared
    distractor hub where it collides with other samples' distractors.
    rank0 is the correct answer for the given fraction of samples, so the
    rank-0 baseline lands near that fraction while the planted structure
    supports near-perfect refinement.
    """
    rng = np.random.default_rng(seed)
    base = root / name
    base.mkdir(parents=True, exist_ok=True)
    hubs = rng.normal(size=(3, dim)) * 30.0 + 60.0

    candidates = []
    references = []
    embeddings = []
    nli = []
    for i in range(n_samples):
        sid = f"q{i:04d}"
        correct = f"ans-{i}"
        d1 = f"offbase-{i}"
        d2 = f"crowd-{i}"
        if rng.random() < rank0_correct_fraction:
            texts = [correct, correct, d1, correct, d2]
        else:
            texts = [d1, correct, correct, d2, correct]

        center = rng.normal(size=dim) * 25.0
        direction = rng.normal(size=dim)
        direction /= np.linalg.norm(direction)
        hub = hubs[int(rng.integers(0, len(hubs)))]
        vectors = {
            correct: center,
            d1: center + 5.0 * direction,
            d2: hub + rng.normal(size=dim) * 0.1,
        }
        for rank, text in enumerate(texts):
            candidates.append({"sample_id": sid, "rank": rank, "text": text})
            vec = vectors[text] + rng.normal(size=dim) * 0.01
            embeddings.append(
                {"sample_id": sid, "rank": rank, "vector": [float(v) for v in vec]}
            )
        references.append({"sample_id": sid, "task": "qa", "answers": [correct]})
        for i_rank in range(5):
            for j_rank in range(5):
                if i_rank == j_rank:
                    continue
                both_correct = texts[i_rank] == correct and texts[j_rank] == correct
                premise_correct = texts[i_rank] == correct
                if both_correct:
                    p = 0.9
                elif premise_correct:
                    p = 0.3
                else:
                    p = 0.15
                nli.append(
                    {
                        "sample_id": sid,
                        "premise_rank": i_rank,
                        "hypothesis_rank": j_rank,
                        "p_entail": p,
                    }
                )

    write_jsonl(base / "candidates.jsonl", candidates)
    write_jsonl(base / "references.jsonl", references)
    write_jsonl(base / "embeddings.jsonl", embeddings)
    write_jsonl(base / "nli.jsonl", nli)
    config = {
        "version": 1,
        "candidates": "candidates.jsonl",
        "references": "references.jsonl",
        "embeddings": {"file": "embeddings.jsonl"},
        "nli": {"file": "nli.jsonl"},
        "output_dir": "out",
        "metric": "hit_rate",
        "extraction": "whole_text",
        "k_max": 5,
    }
    (base / "config.json").write_text(json.dumps(config, indent=2), encoding="utf-8")
    return base


def start_stub_server():
    """Minimal scoring service: embeds by text length, entails constant 0.5.

    Returns a state dict with the base `url`, a `shutdown` callable, and
    knobs: fail_next (count of 500s to serve), dim, entail_value; `requests`
    and `batch_sizes` record traffic.
    """
    state = {
        "fail_next": 0,
        "dim": 3,
        "entail_value": 0.5,
        "requests": [],
        "batch_sizes": [],
    }

    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *args):
            pass

        def do_POST(self):
            body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
            state["requests"].append((self.path, body))
            if state["fail_next"] > 0:
                state["fail_next"] -= 1
                self._reply(500, {"error": "transient"})
                return
            if self.path == "/v1/embed":
                texts = body["texts"]
                state["batch_sizes"].append(len(texts))
                dim = state["dim"]
                vectors = [
                    [float(len(t))] + [float(ord(c)) for c in (t + "\0" * dim)[: dim - 1]]
                    for t in texts
                ]
                self._reply(200, {"vectors": vectors, "dim": dim})
            elif self.path == "/v1/entail":
                pairs = body["pairs"]
                state["batch_sizes"].append(len(pairs))
                self._reply(200, {"entail": [state["entail_value"]] * len(pairs)})
            else:
                self._reply(404, {"error": "no such route"})

        def _reply(self, status, payload):
            data = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

    server = HTTPServer(("127.0.0.1", 0), Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    state["url"] = f"http://127.0.0.1:{server.server_address[1]}"
    state["shutdown"] = server.shutdown
    return state


def make_group(texts, sample_id="s0", embeddings=None):
    """Group from a list of texts (rank = position); optionally attach embeddings.

    ``embeddings`` maps candidate index (after dedup) to a vector.
    """
    raw = [RawPrediction(sample_id, rank, text) for rank, text in enumerate(texts)]
    group = dedup(raw)
    if embeddings is not None:
        cands = tuple(
            cand.with_embedding(np.asarray(embeddings[i], dtype=np.float64))
            for i, cand in enumerate(group.candidates)
        )
        group = type(group)(sample_id=group.sample_id, candidates=cands, k_raw=group.k_raw)
    return group


class DictEntailmentProvider:
    """Entailment provider backed by an explicit (premise, hypothesis) table."""

    def __init__(self, table, default=None):
        self.table = dict(table)
        self.default = default
        self.calls = []

    def entail_pairs(self, pairs):
        self.calls.append(list(pairs))
        if self.default is None:
            return [self.table[pair] for pair in pairs]
        return [self.table.get(pair, self.default) for pair in pairs]


class ConstantEntailmentProvider:
    def __init__(self, value):
        self.value = value

    def entail_pairs(self, pairs):
        return [self.value] * len(pairs)


def write_jsonl(path: Path, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    return path


def build_corpus(root: Path, name="run"):
    """A small, fully consistent file-backed corpus plus its run config.

    Two qa samples, three predictions each (one duplicated pair), 2-D
    embeddings, full ordered-pair NLI coverage.
    """
    base = root / name
    base.mkdir(parents=True, exist_ok=True)
    candidates = [
        {"sample_id": "a", "rank": 0, "text": "Answer: red. Reasoning: roses"},
        {"sample_id": "a", "rank": 1, "text": "Answer: blue. Reasoning: sky"},
        {"sample_id": "a", "rank": 2, "text": "Answer: red. Reasoning: roses"},
        {"sample_id": "b", "rank": 0, "text": "Answer: four. Because math"},
        {"sample_id": "b", "rank": 1, "text": "Answer: five. Because guess"},
        {"sample_id": "b", "rank": 2, "text": "Answer: four. Because math"},
    ]
    references = [
        {"sample_id": "a", "task": "qa", "answers": ["red"]},
        {"sample_id": "b", "task": "qa", "answers": ["four", "4"]},
    ]
    vectors = {
        ("a", 0): [0.0, 0.0],
        ("a", 1): [4.0, 0.0],
        ("a", 2): [0.0, 0.0],
        ("b", 0): [10.0, 10.0],
        ("b", 1): [14.0, 10.0],
        ("b", 2): [10.0, 10.0],
    }
    embeddings = [
        {"sample_id": sid, "rank": rank, "vector": vec}
        for (sid, rank), vec in vectors.items()
    ]
    nli = []
    for sid in ("a", "b"):
        for i in range(3):
            for j in range(3):
                if i != j:
                    nli.append(
                        {
                            "sample_id": sid,
                            "premise_rank": i,
                            "hypothesis_rank": j,
                            "p_entail": 0.9 if vectors[(sid, i)] == vectors[(sid, j)] else 0.2,
                        }
                    )
    write_jsonl(base / "candidates.jsonl", candidates)
    write_jsonl(base / "references.jsonl", references)
    write_jsonl(base / "embeddings.jsonl", embeddings)
    write_jsonl(base / "nli.jsonl", nli)
    config = {
        "version": 1,
        "candidates": "candidates.jsonl",
        "references": "references.jsonl",
        "embeddings": {"file": "embeddings.jsonl"},
        "nli": {"file": "nli.jsonl"},
        "output_dir": "out",
        "k_max": 3,
        "uncertainty": {"neighborhood_size": 2, "batch_limit": 1000},
    }
    (base / "config.json").write_text(json.dumps(config, indent=2), encoding="utf-8")
    return base
