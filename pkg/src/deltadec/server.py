"""Minimal HTTP service exposing the decoder to other programs.

Requests are stateless; a request may carry its own seed, otherwise the
server draws one and echoes it back so any response can be replayed.
"""

from __future__ import annotations

import secrets

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .backend import LogitSource, NGramBackend, ScriptedBackend, tokenize
from .core import ConfigError, DecodeConfig, DeltaError
from .decoder import generate


class DecodeRequest(BaseModel):
    prompt: str
    overrides: dict = {}
    include_trace: bool = False


def backend_kind(source: LogitSource) -> str:
    if isinstance(source, NGramBackend):
        return "ngram"
    if isinstance(source, ScriptedBackend):
        return "scripted"
    return type(source).__name__


def create_app(
    source: LogitSource,
    default_config: DecodeConfig,
    draw_seeds: bool = True,
) -> FastAPI:
    """With draw_seeds, requests without an explicit seed get a fresh random
    one (echoed in the response); otherwise the default config's seed is
    used, making identical requests identical."""
    app = FastAPI(title="deltadec")

    @app.get("/v1/health")
    def health():
        return {
            "status": "ok",
            "backend": backend_kind(source),
            "vocab_size": source.vocab_size(),
        }

    @app.post("/v1/decode")
    def decode(req: DecodeRequest):
        if not req.prompt.strip():
            return JSONResponse(status_code=422, content={"error": "empty prompt"})
        overrides = dict(req.overrides)
        if "seed" not in overrides and draw_seeds:
            overrides["seed"] = secrets.randbits(63)
        try:
            config = default_config.with_overrides(**overrides)
        except (ConfigError, TypeError) as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        vocab = getattr(source, "vocab", None)
        if vocab is None:
            return JSONResponse(
                status_code=400,
                content={"error": "backend has no vocabulary; cannot tokenize"},
            )
        try:
            result = generate(tokenize(req.prompt, vocab), config, source)
        except DeltaError as exc:
            return JSONResponse(status_code=500, content={"error": str(exc)})
        body = result.to_dict(include_trace=req.include_trace, max_traced_vocab=256)
        body["config"] = config.to_dict()
        return body

    return app
