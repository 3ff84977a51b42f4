"""FastAPI application implementing the backend wire protocol.

Routes and body shapes follow the protocol document shipped with the
client package (docs/protocol.md); responses are schema-validated before
they leave the process.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field
from starlette.exceptions import HTTPException as StarletteHTTPException

from .config import ServerConfig
from .models import ModelError, ModelZoo, NotReady


class TokenizeRequest(BaseModel):
    text: str


class IdsRequest(BaseModel):
    ids: list[int]


class TextRequest(BaseModel):
    text: str


class ClassifyRequest(BaseModel):
    text: str
    language: str


class ParaphraseRequest(BaseModel):
    text: str
    seed: int = 0


class DenoiseRequest(BaseModel):
    x_t: list[list[float]]
    t: int = Field(ge=0)
    condition_ids: list[int]


def error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def create_app(config: ServerConfig) -> FastAPI:
    zoo = ModelZoo(config)  # refuses to start when a configured model fails to load
    app = FastAPI(title="babel-model-server", version="0.1.0")
    app.state.zoo = zoo

    @app.exception_handler(RequestValidationError)
    async def malformed_request(request: Request, exc: RequestValidationError):
        return error(400, "missing_field", str(exc.errors()[:2]))

    @app.exception_handler(StarletteHTTPException)
    async def http_error(request: Request, exc: StarletteHTTPException):
        code = "not_found" if exc.status_code == 404 else "http_error"
        return error(exc.status_code, code, str(exc.detail))

    @app.exception_handler(NotReady)
    async def not_ready(request: Request, exc: NotReady):
        return error(503, "not_ready", str(exc))

    @app.exception_handler(ModelError)
    async def model_error(request: Request, exc: ModelError):
        return error(400, "invalid_input", str(exc))

    @app.get("/v1/capabilities")
    def capabilities():
        return {
            "embedding_dim": config.embedding_dim,
            "vocab_size": zoo.tokenizer.vocab_size,
            "style_labels": list(config.style_labels),
            "languages": list(config.languages),
            "max_sequence_len": config.max_sequence_len,
            "capabilities": zoo.capabilities,
        }

    @app.post("/v1/tokenize")
    def tokenize(body: TokenizeRequest):
        if len(body.text) > config.max_sequence_len:
            raise ModelError(f"text longer than max_sequence_len={config.max_sequence_len}")
        return {"ids": zoo.tokenizer.encode(body.text)}

    @app.post("/v1/detokenize")
    def detokenize(body: IdsRequest):
        return {"text": zoo.tokenizer.decode(body.ids)}

    @app.post("/v1/embed")
    def embed(body: IdsRequest):
        if any(not 0 <= i < zoo.tokenizer.vocab_size for i in body.ids):
            raise ModelError("token id outside the vocabulary")
        return {"embeddings": zoo.embedder.rows(body.ids).tolist()}

    @app.post("/v1/style_embed")
    def style_embed(body: TextRequest):
        return {"embedding": zoo.style_embedder.embed(body.text).tolist()}

    @app.post("/v1/classify")
    def classify(body: ClassifyRequest):
        if body.language not in config.languages:
            raise ModelError(f"language {body.language!r} not declared")
        classifier = zoo.classifiers.get(body.language)
        if classifier is None:
            raise NotReady(f"no classifier loaded for {body.language!r}")
        distribution = classifier.predict(body.text)
        assert abs(sum(distribution.values()) - 1.0) <= 1e-6
        return {"distribution": distribution}

    @app.post("/v1/paraphrase")
    def paraphrase(body: ParaphraseRequest, deterministic: int = Query(default=0)):
        return {
            "text": zoo.paraphraser.paraphrase(body.text, body.seed, bool(deterministic))
        }

    @app.post("/v1/denoise")
    def denoise(body: DenoiseRequest):
        if zoo.denoiser is None:
            raise NotReady("no denoiser loaded")
        x_t = np.asarray(body.x_t, dtype=np.float64)
        if x_t.ndim != 2 or x_t.shape[1] != config.embedding_dim:
            raise ModelError(f"x_t must be (positions, {config.embedding_dim})")
        if not np.all(np.isfinite(x_t)):
            raise ModelError("x_t contains non-finite entries")
        if not body.condition_ids:
            raise ModelError("condition_ids must be non-empty")
        if any(not 0 <= i < zoo.tokenizer.vocab_size for i in body.condition_ids):
            raise ModelError("condition id outside the vocabulary")
        cond = zoo.embedder.rows(body.condition_ids)
        with zoo.locks["denoiser"]:
            logits = zoo.denoiser.logits(x_t, body.t, cond)
        return {"logits": logits.tolist()}

    return app
