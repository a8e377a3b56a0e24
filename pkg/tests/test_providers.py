from __future__ import annotations

import numpy as np
import pytest

from batchrefine.core import RawPrediction
from batchrefine.errors import (
    BackendUnavailable,
    DimensionMismatch,
    MissingEmbedding,
    MissingEntailment,
    ParseError,
    RangeViolation,
)
from batchrefine.providers import (
    DiskCache,
    FileEmbeddingProvider,
    FileEntailmentProvider,
    HttpEmbeddingProvider,
    HttpEntailmentProvider,
    load_embedding_file,
    load_nli_file,
)

from util import start_stub_server, write_jsonl


@pytest.fixture
def stub_server():
    state = start_stub_server()
    yield state
    state["shutdown"]()


@pytest.fixture(autouse=True)
def fast_retries(monkeypatch):
    monkeypatch.setattr("batchrefine.providers._HttpSession.backoff_base", 0.001)


def emb_rows():
    return [
        {"sample_id": "a", "rank": 0, "text": "x"},
        {"sample_id": "a", "rank": 1, "text": "y"},
        {"sample_id": "a", "rank": 2, "text": "z"},
    ]


def predictions():
    return [RawPrediction(r["sample_id"], r["rank"], r["text"]) for r in emb_rows()]


class TestLoadEmbeddingFile:
    def test_well_formed(self, tmp_path):
        path = write_jsonl(
            tmp_path / "e.jsonl",
            [
                {"sample_id": "a", "rank": 0, "vector": [1.0, 2.0]},
                {"sample_id": "a", "rank": 1, "vector": [3.0, 4.0]},
            ],
        )
        mapping, dupes = load_embedding_file(path)
        assert len(mapping) == 2
        assert dupes == 0
        assert np.array_equal(mapping[("a", 1)], [3.0, 4.0])

    def test_dimension_mismatch_names_line(self, tmp_path):
        path = write_jsonl(
            tmp_path / "e.jsonl",
            [
                {"sample_id": "a", "rank": 0, "vector": [1.0, 2.0, 3.0, 4.0]},
                {"sample_id": "a", "rank": 1, "vector": [1.0, 2.0, 3.0]},
            ],
        )
        with pytest.raises(DimensionMismatch, match="2"):
            load_embedding_file(path)

    def test_empty_file_is_valid(self, tmp_path):
        path = tmp_path / "e.jsonl"
        path.write_text("")
        mapping, dupes = load_embedding_file(path)
        assert mapping == {}

    def test_duplicate_keys_last_wins_with_counter(self, tmp_path):
        path = write_jsonl(
            tmp_path / "e.jsonl",
            [
                {"sample_id": "a", "rank": 0, "vector": [1.0]},
                {"sample_id": "a", "rank": 0, "vector": [2.0]},
            ],
        )
        mapping, dupes = load_embedding_file(path)
        assert dupes == 1
        assert mapping[("a", 0)][0] == 2.0

    def test_parse_error_carries_line_number(self, tmp_path):
        path = tmp_path / "e.jsonl"
        path.write_text('{"sample_id": "a", "rank": 0, "vector": [1.0]}\nnot json\n')
        with pytest.raises(ParseError) as err:
            load_embedding_file(path)
        assert err.value.line == 2

    def test_non_finite_vector_rejected(self, tmp_path):
        path = tmp_path / "e.jsonl"
        path.write_text('{"sample_id": "a", "rank": 0, "vector": [1.0, NaN]}\n')
        with pytest.raises(ParseError):
            load_embedding_file(path)


class TestFileEmbeddingProvider:
    def test_lookup_in_request_order(self, tmp_path):
        path = write_jsonl(
            tmp_path / "e.jsonl",
            [
                {"sample_id": "a", "rank": 0, "vector": [1.0, 0.0]},
                {"sample_id": "a", "rank": 1, "vector": [2.0, 0.0]},
                {"sample_id": "a", "rank": 2, "vector": [3.0, 0.0]},
            ],
        )
        provider = FileEmbeddingProvider(path, predictions())
        out = provider.embed_batch(["z", "x", "y"])
        assert [v[0] for v in out] == [3.0, 1.0, 2.0]
        assert provider.dimension == 2

    def test_identical_texts_identical_vectors(self, tmp_path):
        path = write_jsonl(
            tmp_path / "e.jsonl",
            [{"sample_id": "a", "rank": r, "vector": [float(r), 1.0]} for r in range(3)],
        )
        provider = FileEmbeddingProvider(path, predictions())
        first = provider.embed_batch(["x"])[0]
        second = provider.embed_batch(["x"])[0]
        assert first.tobytes() == second.tobytes()

    def test_missing_embedding_names_key(self, tmp_path):
        path = write_jsonl(
            tmp_path / "e.jsonl",
            [{"sample_id": "a", "rank": 0, "vector": [1.0]}],
        )
        provider = FileEmbeddingProvider(path, predictions())
        with pytest.raises(MissingEmbedding, match=r"\('a', 1\)"):
            provider.embed_batch(["y"])

    def test_unknown_text_named_in_error(self, tmp_path):
        path = write_jsonl(
            tmp_path / "e.jsonl", [{"sample_id": "a", "rank": 0, "vector": [1.0]}]
        )
        provider = FileEmbeddingProvider(path, predictions())
        with pytest.raises(MissingEmbedding, match="never-seen"):
            provider.embed_batch(["never-seen"])


class TestFileEntailmentProvider:
    def test_lookup(self, tmp_path):
        path = write_jsonl(
            tmp_path / "n.jsonl",
            [
                {"sample_id": "a", "premise_rank": 0, "hypothesis_rank": 1, "p_entail": 0.8},
                {"sample_id": "a", "premise_rank": 1, "hypothesis_rank": 0, "p_entail": 0.4},
            ],
        )
        provider = FileEntailmentProvider(path, predictions())
        assert provider.entail_pairs([("x", "y"), ("y", "x")]) == [0.8, 0.4]

    def test_direction_matters(self, tmp_path):
        path = write_jsonl(
            tmp_path / "n.jsonl",
            [
                {"sample_id": "a", "premise_rank": 0, "hypothesis_rank": 1, "p_entail": 0.9},
            ],
        )
        provider = FileEntailmentProvider(path, predictions())
        assert provider.entail_pairs([("x", "y")]) == [0.9]
        with pytest.raises(MissingEntailment):
            provider.entail_pairs([("y", "x")])

    def test_out_of_range_value_rejected_at_load(self, tmp_path):
        path = write_jsonl(
            tmp_path / "n.jsonl",
            [{"sample_id": "a", "premise_rank": 0, "hypothesis_rank": 1, "p_entail": 1.3}],
        )
        with pytest.raises(RangeViolation):
            load_nli_file(path)


class TestHttpProviders:
    def test_chunking_invariance_and_order(self, stub_server):
        provider = HttpEmbeddingProvider(stub_server["url"], max_batch=2)
        texts = ["alpha", "bee", "ceee", "dd", "e"]
        whole = provider.embed_batch(texts)
        chunked_sizes = list(stub_server["batch_sizes"])
        assert max(chunked_sizes) <= 2 and len(chunked_sizes) == 3
        fresh = HttpEmbeddingProvider(stub_server["url"], max_batch=64)
        unchunked = fresh.embed_batch(texts)
        for a, b in zip(whole, unchunked):
            assert a.tobytes() == b.tobytes()

    def test_cache_returns_identical_vectors(self, stub_server):
        provider = HttpEmbeddingProvider(stub_server["url"])
        first = provider.embed_batch(["abc"])[0]
        calls = len(stub_server["requests"])
        second = provider.embed_batch(["abc"])[0]
        assert len(stub_server["requests"]) == calls  # served from cache
        assert first.tobytes() == second.tobytes()

    def test_retry_then_success(self, stub_server):
        stub_server["fail_next"] = 2
        provider = HttpEmbeddingProvider(stub_server["url"])
        out = provider.embed_batch(["abc"])
        assert out[0].shape == (3,)

    def test_backend_unavailable_after_retries(self, stub_server):
        stub_server["fail_next"] = 99
        provider = HttpEmbeddingProvider(stub_server["url"])
        with pytest.raises(BackendUnavailable):
            provider.embed_batch(["abc"])

    def test_entail_range_violation(self, stub_server):
        stub_server["entail_value"] = 1.3
        provider = HttpEntailmentProvider(stub_server["url"])
        with pytest.raises(RangeViolation):
            provider.entail_pairs([("p", "h")])

    def test_entail_cached_by_directed_pair(self, stub_server):
        provider = HttpEntailmentProvider(stub_server["url"])
        first = provider.entail_pairs([("p", "h"), ("h", "p")])
        calls = len(stub_server["requests"])
        second = provider.entail_pairs([("p", "h")])
        assert len(stub_server["requests"]) == calls
        assert second[0] == first[0]

    def test_disk_cache_warm_start_bit_identical(self, stub_server, tmp_path):
        cache = tmp_path / "emb.cache.jsonl"
        cold = HttpEmbeddingProvider(stub_server["url"], cache_path=cache)
        cold_out = cold.embed_batch(["abc", "de"])
        warm = HttpEmbeddingProvider(stub_server["url"], cache_path=cache)
        requests_before = len(stub_server["requests"])
        warm_out = warm.embed_batch(["abc", "de"])
        assert len(stub_server["requests"]) == requests_before
        for a, b in zip(cold_out, warm_out):
            assert a.tobytes() == b.tobytes()

    def test_corrupt_cache_rebuilt_transparently(self, stub_server, tmp_path):
        cache = tmp_path / "emb.cache.jsonl"
        cold = HttpEmbeddingProvider(stub_server["url"], cache_path=cache)
        expected = cold.embed_batch(["abc"])[0]
        cache.write_text("GARBAGE\n" + cache.read_text().replace("abc", "abc"))
        mangled = cache.read_text().splitlines()
        cache.write_text("\n".join(["{broken"] + mangled[1:]) + "\n")
        rebuilt = HttpEmbeddingProvider(stub_server["url"], cache_path=cache)
        out = rebuilt.embed_batch(["abc"])[0]
        assert out.tobytes() == expected.tobytes()


def test_disk_cache_roundtrip(tmp_path):
    cache = DiskCache(tmp_path / "c.jsonl")
    cache.put("k", [1.0, 2.0])
    reloaded = DiskCache(tmp_path / "c.jsonl")
    assert reloaded.get("k") == [1.0, 2.0]
