"""Uniform access to sentence embeddings and pairwise entailment probabilities.

Two backends per provider kind: precomputed JSONL files keyed by
(sample_id, rank), or a remote scoring service speaking the /v1/embed and
/v1/entail wire contract. Runtime caches are keyed by content hash so that
duplicate texts always resolve to one vector; HTTP results are additionally
cached on disk so an aborted batch run keeps its partial progress.
"""
from __future__ import annotations

import hashlib
import json
import logging
import time
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import requests

from .core import RawPrediction
from .errors import (
    BackendUnavailable,
    DimensionMismatch,
    MissingEmbedding,
    MissingEntailment,
    ParseError,
    RangeViolation,
)

log = logging.getLogger(__name__)


def content_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def pair_key(premise: str, hypothesis: str) -> str:
    # direction matters: (p,h) and (h,p) are distinct keys
    return content_hash(premise) + ":" + content_hash(hypothesis)


def _reject_nonfinite_constant(value):
    raise ValueError(f"non-finite JSON constant {value!r}")


def _parse_jsonl(path: str | Path):
    """Yield (line_number, object) for every non-blank line; strict JSON."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line, parse_constant=_reject_nonfinite_constant)
            except ValueError as exc:
                raise ParseError(path, lineno, f"invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise ParseError(path, lineno, "expected a JSON object")
            yield lineno, obj


def load_embedding_file(path: str | Path) -> tuple[dict[tuple[str, int], np.ndarray], int]:
    """Load embeddings.jsonl into a (sample_id, rank) -> vector mapping.

    Duplicate keys are last-wins; returns the mapping and the duplicate count.
    """
    mapping: dict[tuple[str, int], np.ndarray] = {}
    dimension: int | None = None
    duplicates = 0
    for lineno, row in _parse_jsonl(path):
        try:
            key = (str(row["sample_id"]), int(row["rank"]))
            vector = row["vector"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(path, lineno, f"bad embedding row: {exc}") from exc
        if not isinstance(vector, list) or not vector:
            raise ParseError(path, lineno, "vector must be a non-empty array")
        arr = np.asarray(vector, dtype=np.float64)
        if arr.ndim != 1:
            raise ParseError(path, lineno, "vector must be one-dimensional")
        if not np.all(np.isfinite(arr)):
            raise ParseError(path, lineno, "vector contains non-finite values")
        if dimension is None:
            dimension = arr.shape[0]
        elif arr.shape[0] != dimension:
            raise DimensionMismatch(
                f"{path}:{lineno}: vector length {arr.shape[0]} != {dimension}"
            )
        if key in mapping:
            duplicates += 1
        arr.flags.writeable = False
        mapping[key] = arr
    if duplicates:
        log.warning("%s: %d duplicate embedding keys (last one wins)", path, duplicates)
    return mapping, duplicates


def load_nli_file(path: str | Path) -> tuple[dict[tuple[str, int, int], float], int]:
    """Load nli.jsonl into a (sample_id, premise_rank, hypothesis_rank) -> p mapping."""
    mapping: dict[tuple[str, int, int], float] = {}
    duplicates = 0
    for lineno, row in _parse_jsonl(path):
        try:
            key = (str(row["sample_id"]), int(row["premise_rank"]), int(row["hypothesis_rank"]))
            p = float(row["p_entail"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(path, lineno, f"bad nli row: {exc}") from exc
        if not np.isfinite(p) or not 0.0 <= p <= 1.0:
            raise RangeViolation(f"{path}:{lineno}: p_entail {p} outside [0, 1]")
        if key in mapping:
            duplicates += 1
        mapping[key] = p
    if duplicates:
        log.warning("%s: %d duplicate nli keys (last one wins)", path, duplicates)
    return mapping, duplicates


class DiskCache:
    """Append-only JSONL key/value cache; corrupt lines are skipped on load."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._data: dict[str, object] = {}
        self._load()

    def _load(self):
        if not self.path.exists():
            return
        skipped = 0
        with open(self.path, "r", encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                    self._data[row["key"]] = row["value"]
                except (ValueError, KeyError, TypeError):
                    skipped += 1
        if skipped:
            log.warning("%s: skipped %d corrupt cache lines", self.path, skipped)

    def get(self, key: str):
        return self._data.get(key)

    def __contains__(self, key: str) -> bool:
        return key in self._data

    def put(self, key: str, value) -> None:
        self._data[key] = value
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps({"key": key, "value": value}) + "\n")


class _HttpSession:
    """POST with bounded retries and exponential backoff.

    Any non-200 status, connection failure, or malformed payload counts as
    a failed attempt; after the attempt budget is spent, BackendUnavailable.
    """

    attempts = 3
    backoff_base = 0.25
    backoff_factor = 2.0

    def __init__(self, base_url: str, timeout: float):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._session = requests.Session()

    def post_json(self, route: str, body: dict) -> dict:
        url = self.base_url + route
        last_error = None
        for attempt in range(self.attempts):
            if attempt:
                time.sleep(self.backoff_base * self.backoff_factor ** (attempt - 1))
            try:
                resp = self._session.post(url, json=body, timeout=self.timeout)
            except requests.RequestException as exc:
                last_error = str(exc)
                continue
            if resp.status_code != 200:
                last_error = f"HTTP {resp.status_code}: {resp.text[:200]}"
                continue
            try:
                return resp.json()
            except ValueError as exc:
                last_error = f"malformed JSON response: {exc}"
                continue
        raise BackendUnavailable(f"{url} failed after {self.attempts} attempts: {last_error}")


def _chunks(items: Sequence, size: int):
    for start in range(0, len(items), size):
        yield items[start : start + size]


class EmbeddingProvider:
    """Maps texts to fixed-dimension embedding vectors, order-preserving."""

    dimension: int | None = None

    def embed_batch(self, texts: Sequence[str]) -> list[np.ndarray]:
        raise NotImplementedError

    def _check_dimension(self, arr: np.ndarray, origin: str) -> None:
        if self.dimension is None:
            self.dimension = int(arr.shape[0])
        elif arr.shape[0] != self.dimension:
            raise DimensionMismatch(
                f"{origin}: vector length {arr.shape[0]} != declared dimension {self.dimension}"
            )


class FileEmbeddingProvider(EmbeddingProvider):
    """Embeddings from a precomputed file, joined to texts via the candidates."""

    def __init__(self, path: str | Path, predictions: Iterable[RawPrediction]):
        self.path = Path(path)
        mapping, self.duplicate_keys = load_embedding_file(path)
        self._by_key = mapping
        self._by_text: dict[str, np.ndarray] = {}
        self._keys_for_text: dict[str, list[tuple[str, int]]] = {}
        self.conflicts = 0
        # deterministic join order so text-level conflicts resolve stably
        for pred in sorted(predictions, key=lambda p: (p.sample_id, p.rank)):
            key = (pred.sample_id, pred.rank)
            self._keys_for_text.setdefault(pred.text, []).append(key)
            vec = mapping.get(key)
            if vec is None:
                continue
            known = self._by_text.get(pred.text)
            if known is None:
                self._by_text[pred.text] = vec
                self._check_dimension(vec, f"{self.path} key {key}")
            elif not np.array_equal(known, vec):
                self.conflicts += 1
        if self.conflicts:
            log.warning(
                "%s: %d texts stored with conflicting vectors (first key wins)",
                self.path,
                self.conflicts,
            )

    def embed_batch(self, texts: Sequence[str]) -> list[np.ndarray]:
        out = []
        for text in texts:
            vec = self._by_text.get(text)
            if vec is None:
                keys = self._keys_for_text.get(text)
                if keys:
                    raise MissingEmbedding(
                        f"{self.path} has no vector for keys {keys} (text {text[:60]!r})"
                    )
                raise MissingEmbedding(
                    f"{self.path} has no vector for unknown text {text[:60]!r}"
                )
            out.append(vec)
        return out


class HttpEmbeddingProvider(EmbeddingProvider):
    """Embeddings from the remote /v1/embed endpoint, cached by content hash."""

    def __init__(
        self,
        base_url: str,
        timeout: float = 30.0,
        max_batch: int = 64,
        cache_path: str | Path | None = None,
    ):
        self._http = _HttpSession(base_url, timeout)
        self.max_batch = max_batch
        self._memory: dict[str, np.ndarray] = {}
        self._disk = DiskCache(cache_path) if cache_path else None

    def _cached(self, key: str) -> np.ndarray | None:
        vec = self._memory.get(key)
        if vec is None and self._disk is not None and key in self._disk:
            vec = np.asarray(self._disk.get(key), dtype=np.float64)
            vec.flags.writeable = False
            self._memory[key] = vec
        return vec

    def _store(self, key: str, values: list) -> np.ndarray:
        vec = np.asarray(values, dtype=np.float64)
        if vec.ndim != 1 or not np.all(np.isfinite(vec)):
            raise RangeViolation("embed backend returned a non-finite or non-flat vector")
        self._check_dimension(vec, "/v1/embed response")
        vec.flags.writeable = False
        self._memory[key] = vec
        if self._disk is not None:
            self._disk.put(key, values)
        return vec

    def embed_batch(self, texts: Sequence[str]) -> list[np.ndarray]:
        keys = [content_hash(t) for t in texts]
        missing: dict[str, str] = {}  # key -> text, first appearance order
        for key, text in zip(keys, texts):
            if self._cached(key) is None and key not in missing:
                missing[key] = text
        pending = list(missing.items())
        for chunk in _chunks(pending, self.max_batch):
            body = {"texts": [text for _, text in chunk]}
            payload = self._http.post_json("/v1/embed", body)
            vectors = payload.get("vectors") if isinstance(payload, dict) else None
            if not isinstance(vectors, list) or len(vectors) != len(chunk):
                raise BackendUnavailable(
                    "/v1/embed returned a payload that does not match the request"
                )
            for (key, _), values in zip(chunk, vectors):
                self._store(key, values)
        return [self._cached(key) for key in keys]


class EntailmentProvider:
    """Maps (premise, hypothesis) pairs to directional entailment probabilities."""

    def entail_pairs(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        raise NotImplementedError


class FileEntailmentProvider(EntailmentProvider):
    """Entailment probabilities from a precomputed file, joined via the candidates."""

    def __init__(self, path: str | Path, predictions: Iterable[RawPrediction]):
        self.path = Path(path)
        mapping, self.duplicate_keys = load_nli_file(path)
        text_of: dict[tuple[str, int], str] = {
            (p.sample_id, p.rank): p.text for p in predictions
        }
        self._by_pair: dict[tuple[str, str], float] = {}
        self.conflicts = 0
        self.unmatched_rows = 0
        for key in sorted(mapping):
            sample_id, premise_rank, hypothesis_rank = key
            premise = text_of.get((sample_id, premise_rank))
            hypothesis = text_of.get((sample_id, hypothesis_rank))
            if premise is None or hypothesis is None:
                self.unmatched_rows += 1
                continue
            pair = (premise, hypothesis)
            if pair not in self._by_pair:
                self._by_pair[pair] = mapping[key]
            elif self._by_pair[pair] != mapping[key]:
                self.conflicts += 1
        if self.unmatched_rows:
            log.warning(
                "%s: %d rows reference predictions absent from the candidates file",
                self.path,
                self.unmatched_rows,
            )
        if self.conflicts:
            log.warning(
                "%s: %d text pairs stored with conflicting probabilities (first key wins)",
                self.path,
                self.conflicts,
            )

    def entail_pairs(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        out = []
        for premise, hypothesis in pairs:
            value = self._by_pair.get((premise, hypothesis))
            if value is None:
                raise MissingEntailment(
                    f"{self.path} has no probability for pair "
                    f"({premise[:40]!r}, {hypothesis[:40]!r})"
                )
            out.append(value)
        return out


class HttpEntailmentProvider(EntailmentProvider):
    """Entailment from the remote /v1/entail endpoint, cached per directed pair."""

    def __init__(
        self,
        base_url: str,
        timeout: float = 30.0,
        max_batch: int = 64,
        cache_path: str | Path | None = None,
    ):
        self._http = _HttpSession(base_url, timeout)
        self.max_batch = max_batch
        self._memory: dict[str, float] = {}
        self._disk = DiskCache(cache_path) if cache_path else None

    def _cached(self, key: str) -> float | None:
        value = self._memory.get(key)
        if value is None and self._disk is not None and key in self._disk:
            value = float(self._disk.get(key))
            self._memory[key] = value
        return value

    def _store(self, key: str, value) -> None:
        p = float(value)
        if not np.isfinite(p) or not 0.0 <= p <= 1.0:
            raise RangeViolation(f"entail backend returned {value!r}, outside [0, 1]")
        self._memory[key] = p
        if self._disk is not None:
            self._disk.put(key, p)

    def entail_pairs(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        keys = [pair_key(p, h) for p, h in pairs]
        missing: dict[str, tuple[str, str]] = {}
        for key, pair in zip(keys, pairs):
            if self._cached(key) is None and key not in missing:
                missing[key] = pair
        pending = list(missing.items())
        for chunk in _chunks(pending, self.max_batch):
            body = {
                "pairs": [
                    {"premise": premise, "hypothesis": hypothesis}
                    for _, (premise, hypothesis) in chunk
                ]
            }
            payload = self._http.post_json("/v1/entail", body)
            values = payload.get("entail") if isinstance(payload, dict) else None
            if not isinstance(values, list) or len(values) != len(chunk):
                raise BackendUnavailable(
                    "/v1/entail returned a payload that does not match the request"
                )
            for (key, _), value in zip(chunk, values):
                self._store(key, value)
        return [self._cached(key) for key in keys]
