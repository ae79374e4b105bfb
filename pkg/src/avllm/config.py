"""Runtime configuration.

Everything the CLI and service need is configurable three ways with the
precedence flag > environment > built-in default. Environment variables:

    AVLLM_EMBEDDER     hash | remote            (default hash)
    AVLLM_EMBED_URL    remote embedding endpoint
    AVLLM_EMBED_MODEL  remote embedding model name
    AVLLM_EMBED_DIM    embedding dimension      (default 256)
    AVLLM_GEN          stub | remote            (default stub)
    AVLLM_GEN_URL      chat-completions endpoint
    AVLLM_GEN_MODEL    generation model name
    AVLLM_GEN_KEY      bearer token for the generation endpoint
    AVLLM_TOPK         default retrieval k      (default 4)
    AVLLM_MIN_SCORE    optional minimum cosine score cutoff
    AVLLM_INDEX_PATH   index file location      (default avllm.index.jsonl)
    AVLLM_ADDR         service bind address     (default 127.0.0.1:8080)
    AVLLM_CORS_ORIGIN  comma-separated allowed origins for the browser UI
    AVLLM_AUTH_TOKEN   optional static bearer token required by the service
    AVLLM_TIMEOUT      remote request timeout in seconds (default 30)
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from .embedding import DEFAULT_DIMENSION, HashEmbedder, RemoteEmbedder
from .pipeline import DEFAULT_K, RemoteGenerator, StubGenerator

__all__ = ["ServiceConfig", "build_embedder", "build_generator", "ENV_PREFIX"]

ENV_PREFIX = "AVLLM_"

EMBEDDER_MODES = ("hash", "remote")
GENERATOR_MODES = ("stub", "remote")

DEFAULT_INDEX_PATH = "avllm.index.jsonl"
DEFAULT_ADDR = "127.0.0.1:8080"


def _env(env: dict, name: str, default: str | None = None) -> str | None:
    value = env.get(ENV_PREFIX + name)
    return value if value not in (None, "") else default


@dataclass
class ServiceConfig:
    """Resolved configuration for the service, CLI query path included."""

    bind_address: str = DEFAULT_ADDR
    index_path: Path = field(default_factory=lambda: Path(DEFAULT_INDEX_PATH))
    embedder_mode: str = "hash"
    embed_url: str | None = None
    embed_model: str | None = None
    embed_dim: int = DEFAULT_DIMENSION
    generator_mode: str = "stub"
    gen_url: str | None = None
    gen_model: str | None = None
    gen_key: str | None = None
    default_k: int = DEFAULT_K
    min_score: float | None = None
    request_timeout: float = 30.0
    cors_origins: tuple[str, ...] = ()
    auth_token: str | None = None

    def __post_init__(self) -> None:
        self.index_path = Path(self.index_path)
        if self.embedder_mode not in EMBEDDER_MODES:
            raise ValueError(f"embedder mode must be one of {EMBEDDER_MODES}")
        if self.generator_mode not in GENERATOR_MODES:
            raise ValueError(f"generator mode must be one of {GENERATOR_MODES}")
        if self.default_k < 1:
            raise ValueError("default_k must be at least 1")
        if self.embed_dim < 1:
            raise ValueError("embed_dim must be at least 1")
        if self.embedder_mode == "remote" and not self.embed_url:
            raise ValueError("remote embedder requires AVLLM_EMBED_URL")
        if self.generator_mode == "remote" and not self.gen_url:
            raise ValueError("remote generator requires AVLLM_GEN_URL")

    @classmethod
    def from_env(cls, env: dict | None = None, **overrides) -> "ServiceConfig":
        """Build a config from the environment, with keyword overrides winning."""
        env = dict(os.environ) if env is None else env
        values = {
            "bind_address": _env(env, "ADDR", DEFAULT_ADDR),
            "index_path": Path(_env(env, "INDEX_PATH", DEFAULT_INDEX_PATH)),
            "embedder_mode": _env(env, "EMBEDDER", "hash"),
            "embed_url": _env(env, "EMBED_URL"),
            "embed_model": _env(env, "EMBED_MODEL"),
            "embed_dim": int(_env(env, "EMBED_DIM", str(DEFAULT_DIMENSION))),
            "generator_mode": _env(env, "GEN", "stub"),
            "gen_url": _env(env, "GEN_URL"),
            "gen_model": _env(env, "GEN_MODEL"),
            "gen_key": _env(env, "GEN_KEY"),
            "default_k": int(_env(env, "TOPK", str(DEFAULT_K))),
            "request_timeout": float(_env(env, "TIMEOUT", "30")),
            "auth_token": _env(env, "AUTH_TOKEN"),
        }
        min_score = _env(env, "MIN_SCORE")
        values["min_score"] = float(min_score) if min_score is not None else None
        cors = _env(env, "CORS_ORIGIN")
        values["cors_origins"] = (
            tuple(o.strip() for o in cors.split(",") if o.strip()) if cors else ()
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    @property
    def host_port(self) -> tuple[str, int]:
        host, _, port = self.bind_address.rpartition(":")
        return host or "127.0.0.1", int(port)


def build_embedder(config: ServiceConfig):
    if config.embedder_mode == "hash":
        return HashEmbedder(config.embed_dim)
    return RemoteEmbedder(
        endpoint=config.embed_url,
        model_name=config.embed_model or "",
        dimension=config.embed_dim,
        timeout=config.request_timeout,
    )


def build_generator(config: ServiceConfig):
    if config.generator_mode == "stub":
        return StubGenerator()
    return RemoteGenerator(
        endpoint=config.gen_url,
        model_name=config.gen_model or "",
        api_key=config.gen_key,
        timeout=config.request_timeout,
    )
