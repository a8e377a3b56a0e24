"""Model wrappers: first-token sentence encoder and pair entailment scorer.

Two backends share one inference path: pretrained HuggingFace checkpoints,
or small untrained (seeded, config-built) versions of the same
architectures with a byte-level tokenizer for offline use. Texts are
encoded one per forward pass, so identical texts produce bitwise-identical
vectors regardless of request batching, and results are cached per text.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

from .config import ModelSpec

log = logging.getLogger(__name__)

PAD, BOS, EOS, SEP = 0, 1, 2, 3
BYTE_OFFSET = 4
BYTE_VOCAB = 256 + BYTE_OFFSET


class ByteTokenizer:
    """UTF-8 bytes shifted past the special ids; fixed, vocabulary-free."""

    def __init__(self, max_length: int):
        self.max_length = max_length
        self.truncated = 0

    def _bytes(self, text: str, budget: int) -> list[int]:
        raw = [b + BYTE_OFFSET for b in text.encode("utf-8")]
        if len(raw) > budget:
            self.truncated += 1
            raw = raw[:budget]
        return raw

    def encode(self, text: str) -> list[int]:
        return [BOS] + self._bytes(text, self.max_length - 2) + [EOS]

    def encode_pair(self, premise: str, hypothesis: str) -> list[int]:
        budget = (self.max_length - 3) // 2
        return (
            [BOS]
            + self._bytes(premise, budget)
            + [SEP]
            + self._bytes(hypothesis, budget)
            + [EOS]
        )


def _torch():
    import torch

    torch.set_num_threads(1)  # keep reductions deterministic across runs
    return torch


@dataclass
class EncoderInfo:
    backend: str
    dimension: int


class TextEncoder:
    """Maps a text to the final hidden state of the first token."""

    def __init__(self, spec: ModelSpec, max_length: int = 256, device: str = "cpu"):
        self.spec = spec
        self.max_length = max_length
        self.device = device
        self.truncated = 0
        self._cache: dict[str, list[float]] = {}
        self._model = None
        self._tokenizer = None

    def _load(self):
        if self._model is not None:
            return
        torch = _torch()
        if self.spec.kind == "untrained":
            from transformers import RobertaConfig, RobertaModel

            config = RobertaConfig(
                vocab_size=BYTE_VOCAB,
                hidden_size=self.spec.hidden_size,
                num_hidden_layers=self.spec.layers,
                num_attention_heads=self.spec.heads,
                intermediate_size=4 * self.spec.hidden_size,
                max_position_embeddings=self.max_length + 4,
                pad_token_id=PAD,
                bos_token_id=BOS,
                eos_token_id=EOS,
            )
            torch.manual_seed(self.spec.seed)
            self._model = RobertaModel(config)
            self._tokenizer = ByteTokenizer(self.max_length)
        else:
            from transformers import AutoModel, AutoTokenizer

            log.info("loading encoder %s", self.spec.model_id)
            self._tokenizer = AutoTokenizer.from_pretrained(self.spec.model_id)
            self._model = AutoModel.from_pretrained(self.spec.model_id)
        self._model.to(self.device)
        self._model.eval()

    def _input_ids(self, text: str) -> list[int]:
        if isinstance(self._tokenizer, ByteTokenizer):
            before = self._tokenizer.truncated
            ids = self._tokenizer.encode(text)
            self.truncated += self._tokenizer.truncated - before
            return ids
        ids = self._tokenizer(text, truncation=False)["input_ids"]
        if len(ids) > self.max_length:
            self.truncated += 1
            ids = self._tokenizer(text, truncation=True, max_length=self.max_length)[
                "input_ids"
            ]
        return ids

    def encode(self, text: str) -> list[float]:
        cached = self._cache.get(text)
        if cached is not None:
            return cached
        self._load()
        torch = _torch()
        ids = torch.tensor([self._input_ids(text)], dtype=torch.long, device=self.device)
        with torch.no_grad():
            hidden = self._model(input_ids=ids).last_hidden_state
        vector = [float(v) for v in hidden[0, 0]]
        self._cache[text] = vector
        return vector

    def encode_many(self, texts) -> list[list[float]]:
        return [self.encode(text) for text in texts]

    @property
    def info(self) -> EncoderInfo:
        self._load()
        return EncoderInfo(
            backend=self.spec.kind,
            dimension=int(self._model.config.hidden_size),
        )


ENTAILMENT_LABEL = "entailment"


class EntailmentScorer:
    """Directed entailment probability for (premise, hypothesis) pairs."""

    def __init__(self, spec: ModelSpec, max_length: int = 256, device: str = "cpu"):
        self.spec = spec
        self.max_length = max_length
        self.device = device
        self.truncated = 0
        self._cache: dict[tuple[str, str], float] = {}
        self._model = None
        self._tokenizer = None
        self._entailment_index = None

    def _load(self):
        if self._model is not None:
            return
        torch = _torch()
        if self.spec.kind == "untrained":
            from transformers import DebertaV2Config, DebertaV2ForSequenceClassification

            config = DebertaV2Config(
                vocab_size=BYTE_VOCAB,
                hidden_size=self.spec.hidden_size,
                num_hidden_layers=self.spec.layers,
                num_attention_heads=self.spec.heads,
                intermediate_size=4 * self.spec.hidden_size,
                max_position_embeddings=max(512, self.max_length + 4),
                pad_token_id=PAD,
                num_labels=3,
                id2label={0: "CONTRADICTION", 1: "NEUTRAL", 2: "ENTAILMENT"},
                label2id={"CONTRADICTION": 0, "NEUTRAL": 1, "ENTAILMENT": 2},
            )
            torch.manual_seed(self.spec.seed + 1)
            self._model = DebertaV2ForSequenceClassification(config)
            self._tokenizer = ByteTokenizer(self.max_length)
        else:
            from transformers import AutoModelForSequenceClassification, AutoTokenizer

            log.info("loading entailment model %s", self.spec.model_id)
            self._tokenizer = AutoTokenizer.from_pretrained(self.spec.model_id)
            self._model = AutoModelForSequenceClassification.from_pretrained(
                self.spec.model_id
            )
        label2id = {
            name.lower(): idx for name, idx in self._model.config.label2id.items()
        }
        if ENTAILMENT_LABEL not in label2id:
            raise ValueError(
                f"model labels {sorted(label2id)} lack an '{ENTAILMENT_LABEL}' class"
            )
        self._entailment_index = label2id[ENTAILMENT_LABEL]
        self._model.to(self.device)
        self._model.eval()

    def _pair_ids(self, premise: str, hypothesis: str):
        torch = _torch()
        if isinstance(self._tokenizer, ByteTokenizer):
            before = self._tokenizer.truncated
            ids = self._tokenizer.encode_pair(premise, hypothesis)
            self.truncated += self._tokenizer.truncated - before
            return {"input_ids": torch.tensor([ids], dtype=torch.long, device=self.device)}
        encoded = self._tokenizer(
            premise,
            hypothesis,
            truncation=True,
            max_length=self.max_length,
            return_tensors="pt",
        )
        return {k: v.to(self.device) for k, v in encoded.items()}

    def score(self, premise: str, hypothesis: str) -> float:
        key = (premise, hypothesis)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        self._load()
        torch = _torch()
        with torch.no_grad():
            logits = self._model(**self._pair_ids(premise, hypothesis)).logits
            probs = torch.softmax(logits[0], dim=-1)
        value = float(probs[self._entailment_index])
        self._cache[key] = value
        return value

    def score_many(self, pairs) -> list[float]:
        return [self.score(p, h) for p, h in pairs]
