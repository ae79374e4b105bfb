"""HTTP service exposing ingestion, querying, and health over /v1.

Reads take a snapshot of the current index reference and are never blocked
by writers; ingestion is serialized under a lock, applied to a copy of the
index, persisted to disk, and only then swapped in. A query therefore
observes either the pre-ingest or the post-ingest index, never a partial
state.

All error responses carry a JSON body {"error_code": ..., "message": ...}.
"""

from __future__ import annotations

import logging
import threading
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .config import ServiceConfig, build_embedder, build_generator
from .errors import (
    AuthError,
    AvllmError,
    DimensionMismatch,
    EmptyInput,
    InvalidChunking,
    ProtocolError,
    TransportError,
)
from .pipeline import PromptTemplate, answer_question
from .vectorstore import DEFAULT_CHUNK_SIZE, DEFAULT_OVERLAP, VectorIndex

logger = logging.getLogger(__name__)

__all__ = ["create_app", "EngineState"]


class IngestRequest(BaseModel):
    doc_id: str
    text: str
    chunk_size: int = DEFAULT_CHUNK_SIZE
    overlap: int = DEFAULT_OVERLAP


class QueryRequest(BaseModel):
    question: str
    k: int | None = None
    min_score: float | None = None


class EngineState:
    """Shared engine behind the endpoints: index reference plus clients."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.embedder = build_embedder(config)
        self.generator = build_generator(config)
        self.template = PromptTemplate.default()
        self.index: VectorIndex | None = None
        self.write_lock = threading.Lock()

    def load_index(self) -> None:
        if self.config.index_path.exists():
            self.index = VectorIndex.load(self.config.index_path)
            logger.info("loaded index %s (%d records)", self.config.index_path, len(self.index))
        else:
            self.index = VectorIndex(self.embedder.dimension)
            logger.info("starting with empty index (dimension %s)", self.index.dimension)

    @property
    def ready(self) -> bool:
        return self.index is not None


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error_code": code, "message": message})


def create_app(config: ServiceConfig | None = None, defer_load: bool = False) -> FastAPI:
    """Build the application. ``defer_load`` leaves the index unloaded until startup."""
    config = config or ServiceConfig.from_env()
    state = EngineState(config)
    if not defer_load:
        state.load_index()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if not state.ready:
            state.load_index()
        yield

    app = FastAPI(title="avllm", version="1", lifespan=lifespan)
    app.state.engine = state

    if config.cors_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(config.cors_origins),
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return _error(400, "INVALID_BODY", str(exc.errors()[:3]))

    def check_auth(request: Request) -> JSONResponse | None:
        if config.auth_token is None:
            return None
        supplied = request.headers.get("authorization", "")
        if supplied != f"Bearer {config.auth_token}":
            return _error(401, "UNAUTHORIZED", "missing or invalid bearer token")
        return None

    @app.get("/v1/health")
    def health():
        if not state.ready:
            return _error(503, "NOT_READY", "index not loaded yet")
        return {
            "status": "ok",
            "index_records": len(state.index),
            "dimension": state.index.dimension,
            "embedder_mode": config.embedder_mode,
            "generator_mode": config.generator_mode,
        }

    @app.post("/v1/ingest")
    def ingest(body: IngestRequest, request: Request):
        denied = check_auth(request)
        if denied is not None:
            return denied
        if not state.ready:
            return _error(503, "NOT_READY", "index not loaded yet")
        if not body.doc_id:
            return _error(400, "INVALID_BODY", "doc_id must be non-empty")
        with state.write_lock:
            snapshot = state.index.copy()
            try:
                summary = snapshot.upsert(
                    body.doc_id,
                    body.text,
                    state.embedder,
                    size=body.chunk_size,
                    overlap=body.overlap,
                )
            except InvalidChunking as exc:
                return _error(400, "INVALID_CHUNKING", str(exc))
            except DimensionMismatch as exc:
                return _error(409, "DIMENSION_CONFLICT", str(exc))
            try:
                snapshot.persist(config.index_path)
            except OSError as exc:
                return _error(500, "PERSIST_FAILED", f"could not persist index: {exc}")
            state.index = snapshot
        return {"chunks_added": summary.chunks_added, "chunks_skipped": summary.chunks_skipped}

    @app.post("/v1/query")
    def query(body: QueryRequest, request: Request):
        denied = check_auth(request)
        if denied is not None:
            return denied
        if not state.ready:
            return _error(503, "NOT_READY", "index not loaded yet")
        question = body.question.strip()
        if not question:
            return _error(400, "EMPTY_QUESTION", "question must be non-empty")
        k = body.k if body.k is not None else config.default_k
        if k < 1:
            return _error(400, "INVALID_K", "k must be at least 1")
        min_score = body.min_score if body.min_score is not None else config.min_score
        index = state.index  # snapshot reference for this request
        try:
            answer = answer_question(
                question,
                k,
                index,
                state.embedder,
                state.template,
                state.generator,
                min_score=min_score,
            )
        except EmptyInput as exc:
            return _error(400, "UNEMBEDDABLE_QUESTION", str(exc))
        except (TransportError, ProtocolError, AuthError) as exc:
            stage = getattr(exc, "stage", None) or "pipeline"
            return _error(502, "GEN_UPSTREAM", f"{stage} stage failed: {exc}")
        except DimensionMismatch as exc:
            return _error(409, "DIMENSION_CONFLICT", str(exc))
        except AvllmError as exc:
            return _error(500, "INTERNAL", str(exc))
        return answer.to_dict()

    return app
