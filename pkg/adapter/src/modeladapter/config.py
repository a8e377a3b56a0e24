"""Adapter configuration: encoder/NLI model choice, inference knobs, paths."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

DEFAULT_ENCODER_ID = "roberta-base"
DEFAULT_NLI_ID = "MoritzLaurer/DeBERTa-v3-base-mnli"

POOLING = "first_token"


class AdapterConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    """Either a pretrained checkpoint id or a small untrained, seeded model.

    The untrained kind builds the same architectures from local configs
    (no download) with a byte-level tokenizer; it exists for offline runs
    and hermetic tests and follows the exact same inference path.
    """

    kind: str  # "pretrained" | "untrained"
    model_id: str | None = None
    hidden_size: int = 32
    layers: int = 2
    heads: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("pretrained", "untrained"):
            raise AdapterConfigError(f"unknown model kind {self.kind!r}")
        if self.kind == "pretrained" and not self.model_id:
            raise AdapterConfigError("pretrained model spec requires model_id")


@dataclass(frozen=True)
class AdapterConfig:
    encoder: ModelSpec = ModelSpec("pretrained", DEFAULT_ENCODER_ID)
    nli: ModelSpec = ModelSpec("pretrained", DEFAULT_NLI_ID)
    pooling: str = POOLING
    device: str = "cpu"
    max_length: int = 256
    max_batch: int = 64
    candidates: Path | None = None
    output_dir: Path = field(default_factory=lambda: Path("."))
    host: str = "127.0.0.1"
    port: int = 8080

    def __post_init__(self):
        if self.pooling != POOLING:
            raise AdapterConfigError(
                f"pooling is fixed to {POOLING!r} for encoder parity, got {self.pooling!r}"
            )
        if self.max_length < 4:
            raise AdapterConfigError("max_length must be >= 4")
        if self.max_batch < 1:
            raise AdapterConfigError("max_batch must be >= 1")


def _model_spec(value, where: str, default_id: str) -> ModelSpec:
    if value is None:
        return ModelSpec("pretrained", default_id)
    if isinstance(value, str):
        return ModelSpec("pretrained", value)
    if not isinstance(value, dict):
        raise AdapterConfigError(f"{where} must be a model id string or an object")
    known = {"kind", "model_id", "hidden_size", "layers", "heads", "seed"}
    unknown = set(value) - known
    if unknown:
        raise AdapterConfigError(f"{where}: unknown keys {sorted(unknown)}")
    kind = value.get("kind", "pretrained")
    return ModelSpec(
        kind=kind,
        model_id=value.get("model_id", default_id if kind == "pretrained" else None),
        hidden_size=int(value.get("hidden_size", 32)),
        layers=int(value.get("layers", 2)),
        heads=int(value.get("heads", 2)),
        seed=int(value.get("seed", 0)),
    )


def load_config(path: str | Path) -> AdapterConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise AdapterConfigError(f"cannot load adapter config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise AdapterConfigError(f"{path}: config must be a JSON object")
    known = {
        "version",
        "encoder",
        "nli",
        "pooling",
        "device",
        "max_length",
        "max_batch",
        "candidates",
        "output_dir",
        "host",
        "port",
    }
    unknown = set(raw) - known
    if unknown:
        raise AdapterConfigError(f"{path}: unknown keys {sorted(unknown)}")
    if raw.get("version", 1) != 1:
        raise AdapterConfigError(f"{path}: unsupported version {raw.get('version')!r}")

    base = path.resolve().parent

    def resolve(value):
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else base / p

    return AdapterConfig(
        encoder=_model_spec(raw.get("encoder"), "encoder", DEFAULT_ENCODER_ID),
        nli=_model_spec(raw.get("nli"), "nli", DEFAULT_NLI_ID),
        pooling=raw.get("pooling", POOLING),
        device=raw.get("device", "cpu"),
        max_length=int(raw.get("max_length", 256)),
        max_batch=int(raw.get("max_batch", 64)),
        candidates=resolve(raw.get("candidates")),
        output_dir=resolve(raw.get("output_dir")) or base,
        host=raw.get("host", "127.0.0.1"),
        port=int(raw.get("port", 8080)),
    )
