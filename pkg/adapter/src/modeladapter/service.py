"""HTTP scoring service implementing the /v1/embed and /v1/entail contract.

Requests are parsed by hand so malformed bodies return 400 with
{"error": ...} (not framework-default 422); batches beyond max_batch
return 413. Handlers are stateless per request; the underlying per-text
encoding makes responses independent of request chunking.
"""
from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .config import AdapterConfig
from .encoders import EntailmentScorer, TextEncoder


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


def build_app(cfg: AdapterConfig) -> FastAPI:
    encoder = TextEncoder(cfg.encoder, cfg.max_length, cfg.device)
    scorer = EntailmentScorer(cfg.nli, cfg.max_length, cfg.device)
    app = FastAPI(title="refine-adapter", docs_url=None, redoc_url=None)

    @app.get("/healthz")
    async def healthz():
        return {"ok": True, "encoder": cfg.encoder.kind, "nli": cfg.nli.kind}

    @app.post("/v1/embed")
    async def embed(request: Request):
        try:
            body = await request.json()
        except Exception:  # noqa: BLE001 - malformed JSON is a client error
            return _error(400, "request body is not valid JSON")
        if not isinstance(body, dict) or "texts" not in body:
            return _error(400, "body must be an object with a 'texts' array")
        texts = body["texts"]
        if not isinstance(texts, list) or not all(isinstance(t, str) for t in texts):
            return _error(400, "'texts' must be an array of strings")
        if len(texts) > cfg.max_batch:
            return _error(413, f"batch of {len(texts)} exceeds max_batch {cfg.max_batch}")
        vectors = encoder.encode_many(texts)
        return {"vectors": vectors, "dim": encoder.info.dimension}

    @app.post("/v1/entail")
    async def entail(request: Request):
        try:
            body = await request.json()
        except Exception:  # noqa: BLE001
            return _error(400, "request body is not valid JSON")
        if not isinstance(body, dict) or "pairs" not in body:
            return _error(400, "body must be an object with a 'pairs' array")
        pairs = body["pairs"]
        if not isinstance(pairs, list):
            return _error(400, "'pairs' must be an array")
        parsed = []
        for item in pairs:
            if (
                not isinstance(item, dict)
                or not isinstance(item.get("premise"), str)
                or not isinstance(item.get("hypothesis"), str)
            ):
                return _error(400, "every pair needs string 'premise' and 'hypothesis'")
            parsed.append((item["premise"], item["hypothesis"]))
        if len(parsed) > cfg.max_batch:
            return _error(413, f"batch of {len(parsed)} exceeds max_batch {cfg.max_batch}")
        return {"entail": scorer.score_many(parsed)}

    return app


def serve(cfg: AdapterConfig) -> None:
    import uvicorn

    uvicorn.run(build_app(cfg), host=cfg.host, port=cfg.port, log_level="warning")
