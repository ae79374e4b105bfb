"""Chunked document storage with exact top-k cosine retrieval.

Documents are split into fixed-stride codepoint windows, embedded, and kept
with provenance (doc id, character offsets). Queries are answered by an
exact brute-force scan, sorted by descending cosine score with ties broken
by ascending chunk id so results are reproducible. The index persists as
newline-delimited JSON: a header line, then one record per chunk, with
vector components serialized at full round-trip precision.

Scores are computed with numpy elementwise products and reductions (never a
threaded BLAS path), so a query scores every record exactly the way
:func:`cosine_similarity` scores a single pair.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embedding import EmbedderContract
from .errors import (
    DimensionMismatch,
    EmptyInput,
    FormatError,
    InvalidChunking,
    VersionError,
    ZeroVector,
)

__all__ = [
    "Chunk",
    "EmbeddedChunk",
    "RetrievalHit",
    "IngestSummary",
    "VectorIndex",
    "chunk_document",
    "cosine_similarity",
    "DEFAULT_CHUNK_SIZE",
    "DEFAULT_OVERLAP",
]

DEFAULT_CHUNK_SIZE = 800
DEFAULT_OVERLAP = 200

FORMAT_VERSION = 1


@dataclass(frozen=True)
class Chunk:
    """A contiguous slice of a source document, offsets in codepoints."""

    chunk_id: int
    doc_id: str
    start: int
    end: int
    text: str

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end):
            raise ValueError(f"invalid chunk span [{self.start}, {self.end})")
        if len(self.text) != self.end - self.start:
            raise ValueError("chunk text length disagrees with its span")


@dataclass(frozen=True)
class EmbeddedChunk:
    chunk: Chunk
    vector: np.ndarray


@dataclass(frozen=True)
class RetrievalHit:
    """One ranked result of a top-k query."""

    chunk_id: int
    doc_id: str
    text: str
    score: float
    rank: int


@dataclass(frozen=True)
class IngestSummary:
    chunks_added: int
    chunks_skipped: int


def chunk_document(
    doc_id: str,
    text: str,
    size: int = DEFAULT_CHUNK_SIZE,
    overlap: int = DEFAULT_OVERLAP,
    first_id: int = 0,
) -> list[Chunk]:
    """Split ``text`` into windows of ``size`` codepoints advancing by size - overlap.

    The first window whose end reaches the text length is truncated there and
    is the last one emitted. Empty text yields an empty list. Chunk ids are
    assigned sequentially from ``first_id``.
    """
    if size < 1:
        raise InvalidChunking(f"chunk size must be >= 1, got {size}")
    if overlap < 0 or overlap >= size:
        raise InvalidChunking(f"overlap must satisfy 0 <= overlap < size, got {overlap}")
    chunks: list[Chunk] = []
    length = len(text)
    stride = size - overlap
    start = 0
    next_id = first_id
    while start < length:
        end = min(start + size, length)
        chunks.append(Chunk(next_id, doc_id, start, end, text[start:end]))
        next_id += 1
        if end >= length:
            break
        start += stride
    return chunks


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine of the angle between two vectors, clamped into [-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise DimensionMismatch(f"cannot compare shapes {u.shape} and {v.shape}")
    norm_u = float(np.sqrt((u * u).sum()))
    norm_v = float(np.sqrt((v * v).sum()))
    if norm_u == 0.0 or norm_v == 0.0:
        raise ZeroVector("cosine similarity is undefined for a zero vector")
    score = float((u * v).sum()) / (norm_u * norm_v)
    return min(1.0, max(-1.0, score))


class VectorIndex:
    """In-memory store of embedded chunks with exact cosine search.

    ``dimension`` may start as None for an empty index; the first upsert
    adopts the embedder's dimension. Chunk ids are assigned from a
    monotonically increasing counter and are never reused.
    """

    def __init__(self, dimension: int | None = None):
        if dimension is not None and dimension < 1:
            raise ValueError("dimension must be a positive integer")
        self.dimension = dimension
        self.records: list[EmbeddedChunk] = []
        self.next_chunk_id = 0
        self._matrix: np.ndarray | None = None
        self._norms: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.records)

    def copy(self) -> "VectorIndex":
        clone = VectorIndex(self.dimension)
        clone.records = list(self.records)
        clone.next_chunk_id = self.next_chunk_id
        return clone

    # -- ingestion ---------------------------------------------------------

    def upsert(
        self,
        doc_id: str,
        text: str,
        embedder: EmbedderContract,
        size: int = DEFAULT_CHUNK_SIZE,
        overlap: int = DEFAULT_OVERLAP,
    ) -> IngestSummary:
        """Replace any prior chunks of ``doc_id`` with a fresh chunking of ``text``.

        Chunks that cannot be embedded (no alphanumeric content) are skipped
        and counted. Re-ingesting identical arguments leaves the record count
        unchanged.
        """
        if embedder.dimension is not None:
            if self.dimension is None:
                if self.records:
                    raise DimensionMismatch("index has records but no recorded dimension")
                self.dimension = embedder.dimension
            elif embedder.dimension != self.dimension:
                raise DimensionMismatch(
                    f"embedder dimension {embedder.dimension} != index dimension {self.dimension}"
                )

        added: list[EmbeddedChunk] = []
        skipped = 0
        for chunk in chunk_document(doc_id, text, size, overlap, first_id=self.next_chunk_id):
            try:
                vector = embedder.embed(chunk.text)
            except EmptyInput:
                skipped += 1
                continue
            if self.dimension is None:
                self.dimension = vector.shape[0]
            if vector.shape[0] != self.dimension:
                raise DimensionMismatch(
                    f"embedded chunk dimension {vector.shape[0]} != index dimension {self.dimension}"
                )
            added.append(EmbeddedChunk(chunk, vector))

        highest_used = self.next_chunk_id + len(added) + skipped
        self.records = [r for r in self.records if r.chunk.doc_id != doc_id] + added
        self.next_chunk_id = highest_used
        self._matrix = None
        self._norms = None
        return IngestSummary(chunks_added=len(added), chunks_skipped=skipped)

    # -- search ------------------------------------------------------------

    def _ensure_matrix(self) -> None:
        if self._matrix is None:
            self._matrix = np.stack([r.vector for r in self.records])
            self._norms = np.sqrt((self._matrix * self._matrix).sum(axis=1))

    def search_topk(self, query: np.ndarray, k: int) -> list[RetrievalHit]:
        """Exact top-k scan: descending score, ties by ascending chunk id."""
        if k < 1:
            raise ValueError("k must be a positive integer")
        if not self.records:
            return []
        query = np.asarray(query, dtype=np.float64)
        if self.dimension is not None and query.shape != (self.dimension,):
            raise DimensionMismatch(
                f"query dimension {query.shape} != index dimension {self.dimension}"
            )
        query_norm = float(np.sqrt((query * query).sum()))
        if query_norm == 0.0:
            raise ZeroVector("cannot search with a zero query vector")

        self._ensure_matrix()
        scores = (self._matrix * query).sum(axis=1) / (self._norms * query_norm)
        np.clip(scores, -1.0, 1.0, out=scores)

        chunk_ids = np.array([r.chunk.chunk_id for r in self.records])
        order = np.lexsort((chunk_ids, -scores))[: min(k, len(self.records))]
        hits = []
        for rank, idx in enumerate(order, start=1):
            record = self.records[idx]
            hits.append(
                RetrievalHit(
                    chunk_id=record.chunk.chunk_id,
                    doc_id=record.chunk.doc_id,
                    text=record.chunk.text,
                    score=float(scores[idx]),
                    rank=rank,
                )
            )
        return hits

    # -- persistence -------------------------------------------------------

    def persist(self, path: str | Path) -> None:
        """Write the index as header + one JSON record per line, atomically."""
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        with tmp.open("w", encoding="utf-8") as handle:
            header = {
                "format_version": FORMAT_VERSION,
                "dimension": self.dimension,
                "next_chunk_id": self.next_chunk_id,
            }
            handle.write(json.dumps(header, ensure_ascii=False) + "\n")
            for record in self.records:
                handle.write(
                    json.dumps(
                        {
                            "chunk_id": record.chunk.chunk_id,
                            "doc_id": record.chunk.doc_id,
                            "start": record.chunk.start,
                            "end": record.chunk.end,
                            "text": record.chunk.text,
                            "vector": [float(x) for x in record.vector],
                        },
                        ensure_ascii=False,
                    )
                    + "\n"
                )
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str | Path) -> "VectorIndex":
        """Load a persisted index, validating every record against the header."""
        path = Path(path)
        with path.open("r", encoding="utf-8") as handle:
            lines = handle.read().splitlines()
        if not lines:
            raise FormatError("file is empty, expected a header line", path=str(path), line=1)

        header = cls._parse_json_line(lines[0], path, 1)
        version = header.get("format_version")
        if version != FORMAT_VERSION:
            raise VersionError(
                f"unsupported format_version {version!r}", path=str(path), line=1
            )
        dimension = header.get("dimension")
        if dimension is not None and (not isinstance(dimension, int) or dimension < 1):
            raise FormatError(f"invalid dimension {dimension!r}", path=str(path), line=1)
        next_chunk_id = header.get("next_chunk_id")
        if not isinstance(next_chunk_id, int) or next_chunk_id < 0:
            raise FormatError(
                f"invalid next_chunk_id {next_chunk_id!r}", path=str(path), line=1
            )

        index = cls(dimension)
        index.next_chunk_id = next_chunk_id
        seen_ids: set[int] = set()
        for line_no, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            record = cls._parse_json_line(line, path, line_no)
            try:
                vector = np.asarray(record["vector"], dtype=np.float64)
                chunk = Chunk(
                    chunk_id=record["chunk_id"],
                    doc_id=record["doc_id"],
                    start=record["start"],
                    end=record["end"],
                    text=record["text"],
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise FormatError(f"bad record: {exc}", path=str(path), line=line_no) from exc
            if dimension is not None and vector.shape != (dimension,):
                raise FormatError(
                    f"vector length {vector.shape[0]} disagrees with header dimension {dimension}",
                    path=str(path),
                    line=line_no,
                )
            if chunk.chunk_id in seen_ids:
                raise FormatError(
                    f"duplicate chunk_id {chunk.chunk_id}", path=str(path), line=line_no
                )
            if chunk.chunk_id >= next_chunk_id:
                raise FormatError(
                    f"chunk_id {chunk.chunk_id} >= header next_chunk_id {next_chunk_id}",
                    path=str(path),
                    line=line_no,
                )
            norm = float(np.sqrt((vector * vector).sum()))
            if abs(norm - 1.0) > 1e-6:
                raise FormatError(
                    f"stored vector is not unit norm (|v| = {norm!r})",
                    path=str(path),
                    line=line_no,
                )
            seen_ids.add(chunk.chunk_id)
            index.records.append(EmbeddedChunk(chunk, vector))
        return index

    @staticmethod
    def _parse_json_line(line: str, path: Path, line_no: int) -> dict:
        try:
            value = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON ({exc.msg})", path=str(path), line=line_no) from exc
        if not isinstance(value, dict):
            raise FormatError("line is not a JSON object", path=str(path), line=line_no)
        return value
