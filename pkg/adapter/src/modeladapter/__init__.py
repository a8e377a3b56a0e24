"""Embedding/NLI adapter feeding the batch refinement engine.

Exports provider files (embeddings.jsonl, nli.jsonl) from encoder and NLI
models, or serves the same models behind the /v1/embed and /v1/entail
wire contract.
"""
from .config import AdapterConfig, ModelSpec, load_config
from .encoders import EntailmentScorer, TextEncoder
from .export import export_embeddings, export_nli
from .service import build_app

__version__ = "0.1.0"

__all__ = [
    "AdapterConfig",
    "EntailmentScorer",
    "ModelSpec",
    "TextEncoder",
    "build_app",
    "export_embeddings",
    "export_nli",
    "load_config",
]
