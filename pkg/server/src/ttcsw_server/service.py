"""FastAPI application implementing the wire protocol.

    POST /v1/translate  -> {"translations": [...]}
    POST /v1/generate   -> {"outputs": [...]}
    GET  /health        -> {"status": "ok"|"degraded", "model_id": "..."}

200 on success, 422 on malformed requests (including oversize batches),
503 while the engine is unavailable.
"""

from __future__ import annotations

import logging
from typing import Literal, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .config import ServerConfig
from .engines import Engine, EngineError, build_engine

logger = logging.getLogger(__name__)

LANG_PATTERN = r"^[a-z]{2}$"


class TranslateBody(BaseModel):
    texts: list[str] = Field(min_length=1)
    source_lang: str = Field(pattern=LANG_PATTERN)
    target_lang: str = Field(pattern=LANG_PATTERN)
    preserve_tags: bool = False


class GenerateBody(BaseModel):
    inputs: list[str] = Field(min_length=1)
    task: Literal["aste", "align"]
    target_lang_hint: Optional[str] = Field(default=None, pattern=LANG_PATTERN)


def create_app(config: ServerConfig) -> FastAPI:
    app = FastAPI(title="ttcsw model server")
    app.state.config = config
    app.state.engine = None
    app.state.load_error = None
    try:
        app.state.engine = build_engine(config)
    except EngineError as exc:
        # degraded: /health reports it, inference endpoints return 503
        logger.error("engine unavailable: %s", exc)
        app.state.load_error = str(exc)

    def engine_or_503() -> Engine:
        if app.state.engine is None:
            raise HTTPException(status_code=503,
                                detail=f"model unavailable: {app.state.load_error}")
        return app.state.engine

    def check_batch(n: int) -> None:
        if n > config.max_batch_size:
            raise HTTPException(
                status_code=422,
                detail=f"batch of {n} exceeds max_batch_size="
                       f"{config.max_batch_size}")

    @app.post("/v1/translate")
    def translate(body: TranslateBody):
        check_batch(len(body.texts))
        engine = engine_or_503()
        try:
            translations = engine.translate(
                body.texts, body.source_lang, body.target_lang,
                body.preserve_tags)
        except EngineError as exc:
            raise HTTPException(status_code=503, detail=str(exc))
        assert len(translations) == len(body.texts)
        return {"translations": translations}

    @app.post("/v1/generate")
    def generate(body: GenerateBody):
        check_batch(len(body.inputs))
        engine = engine_or_503()
        try:
            outputs = engine.generate(body.inputs, body.task,
                                      body.target_lang_hint)
        except EngineError as exc:
            raise HTTPException(status_code=503, detail=str(exc))
        assert len(outputs) == len(body.inputs)
        return {"outputs": outputs}

    @app.get("/health")
    def health():
        if app.state.engine is None:
            return {"status": "degraded", "model_id": "",
                    "error": app.state.load_error,
                    "decoding": config.decoding.to_dict()}
        return {"status": "ok", "model_id": app.state.engine.model_id,
                "decoding": config.decoding.to_dict()}

    return app
