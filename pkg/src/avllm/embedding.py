"""Text embedders producing unit-norm vectors behind one contract.

Two implementations share the contract: a deterministic feature-hash
embedder for offline/test use, and a client for an embeddings-compatible
HTTP service for production use. Both return float64 vectors normalized to
unit L2 norm; neither ever returns a zero vector.

The hash embedder is fully specified so independent implementations agree
bit for bit: tokens are maximal runs of alphanumeric codepoints, lowercased;
features are all unigrams plus adjacent bigrams joined by the unit separator
U+001F; each feature is hashed with 64-bit FNV-1a over its UTF-8 bytes; the
bucket is hash mod dimension and the sign is +1 when hash bit 63 is set,
else -1; signs accumulate per occurrence before normalization.
"""

from __future__ import annotations

import time
from typing import Protocol, runtime_checkable

import httpx
import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyInput,
    ProtocolError,
    TransportError,
    ZeroVector,
)

__all__ = [
    "DEFAULT_DIMENSION",
    "EmbedderContract",
    "HashEmbedder",
    "RemoteEmbedder",
    "fnv1a_64",
    "embed_hash",
]

DEFAULT_DIMENSION = 256

_FNV_OFFSET = 14695981039346656037
_FNV_PRIME = 1099511628211
_MASK64 = (1 << 64) - 1
_BIGRAM_JOIN = "\x1f"


def fnv1a_64(data: bytes) -> int:
    """64-bit FNV-1a hash."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def _tokenize(text: str) -> list[str]:
    """Maximal runs of alphanumeric codepoints, lowercased."""
    tokens: list[str] = []
    current: list[str] = []
    for ch in text:
        if ch.isalnum():
            current.append(ch)
        elif current:
            tokens.append("".join(current).lower())
            current = []
    if current:
        tokens.append("".join(current).lower())
    return tokens


def embed_hash(text: str, dimension: int = DEFAULT_DIMENSION) -> np.ndarray:
    """Signed feature-hash embedding of ``text``, L2-normalized.

    Raises EmptyInput when no token is produced. Bit-exact for a given
    (text, dimension): signed counts are small integers, and the final
    normalization is a single correctly rounded sqrt and divide.
    """
    if dimension < 1:
        raise ValueError("dimension must be a positive integer")
    tokens = _tokenize(text)
    if not tokens:
        raise EmptyInput("text contains no alphanumeric content to embed")

    features = list(tokens)
    features.extend(
        tokens[i] + _BIGRAM_JOIN + tokens[i + 1] for i in range(len(tokens) - 1)
    )

    vec = np.zeros(dimension, dtype=np.float64)
    for feature in features:
        h = fnv1a_64(feature.encode("utf-8"))
        bucket = h % dimension
        vec[bucket] += 1.0 if (h >> 63) & 1 else -1.0

    norm = float(np.sqrt((vec * vec).sum()))
    if norm == 0.0:
        # Signed counts cancelled in every bucket; possible only through
        # hash collisions and not representable as a direction.
        raise ZeroVector("hashed features cancelled to a zero vector")
    return vec / norm


@runtime_checkable
class EmbedderContract(Protocol):
    """Behavioral contract: deterministic text -> unit-norm vector."""

    @property
    def dimension(self) -> int | None: ...

    def embed(self, text: str) -> np.ndarray: ...


class HashEmbedder:
    """Deterministic offline embedder; a pure function of its input text."""

    def __init__(self, dimension: int = DEFAULT_DIMENSION):
        if dimension < 1:
            raise ValueError("dimension must be a positive integer")
        self._dimension = dimension

    @property
    def dimension(self) -> int:
        return self._dimension

    def embed(self, text: str) -> np.ndarray:
        return embed_hash(text, self._dimension)

    @property
    def mode(self) -> str:
        return "hash"


class RemoteEmbedder:
    """Client for an embeddings-API-compatible endpoint.

    Sends ``{"model": ..., "input": [text]}`` and reads the first vector of
    ``{"data": [{"embedding": [...]}]}``. The result is re-normalized locally;
    remote normalization is not trusted. Transport failures are retried with
    exponential backoff up to ``retries`` additional attempts.
    """

    def __init__(
        self,
        endpoint: str,
        model_name: str,
        dimension: int | None = None,
        timeout: float = 30.0,
        retries: int = 2,
        backoff: float = 0.5,
        client: httpx.Client | None = None,
    ):
        self.endpoint = endpoint
        self.model_name = model_name
        self._dimension = dimension
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self._client = client or httpx.Client(timeout=timeout)

    @property
    def dimension(self) -> int | None:
        return self._dimension

    @property
    def mode(self) -> str:
        return "remote"

    def close(self) -> None:
        self._client.close()

    def embed(self, text: str) -> np.ndarray:
        if not text:
            raise EmptyInput("cannot embed empty text")
        payload = {"model": self.model_name, "input": [text]}
        response = self._post_with_retries(payload)
        vector = self._extract_vector(response)
        if self._dimension is None:
            self._dimension = vector.shape[0]
        elif vector.shape[0] != self._dimension:
            raise DimensionMismatch(
                f"remote returned dimension {vector.shape[0]}, expected {self._dimension}"
            )
        norm = float(np.sqrt((vector * vector).sum()))
        if norm == 0.0 or not np.isfinite(norm):
            raise ProtocolError("remote returned a zero or non-finite embedding")
        return vector / norm

    def _post_with_retries(self, payload: dict) -> httpx.Response:
        last_exc: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                response = self._client.post(self.endpoint, json=payload, timeout=self.timeout)
            except httpx.HTTPError as exc:
                last_exc = exc
                if attempt < self.retries:
                    time.sleep(self.backoff * (2**attempt))
                continue
            if response.status_code >= 500:
                last_exc = TransportError(
                    f"embedding endpoint {self.endpoint} returned {response.status_code}"
                )
                if attempt < self.retries:
                    time.sleep(self.backoff * (2**attempt))
                continue
            if response.status_code >= 400:
                raise ProtocolError(
                    f"embedding endpoint {self.endpoint} rejected the request "
                    f"({response.status_code})"
                )
            return response
        raise TransportError(
            f"embedding endpoint {self.endpoint} unreachable after "
            f"{self.retries + 1} attempts: {last_exc}"
        )

    @staticmethod
    def _extract_vector(response: httpx.Response) -> np.ndarray:
        try:
            body = response.json()
        except ValueError as exc:
            raise ProtocolError(f"embedding response is not JSON: {exc}") from exc
        try:
            raw = body["data"][0]["embedding"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProtocolError("embedding response missing data[0].embedding") from exc
        if not isinstance(raw, list) or not raw:
            raise ProtocolError("embedding payload is not a non-empty list")
        try:
            vector = np.asarray(raw, dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise ProtocolError("embedding payload contains non-numeric entries") from exc
        if vector.ndim != 1:
            raise ProtocolError("embedding payload is not a flat vector")
        return vector
