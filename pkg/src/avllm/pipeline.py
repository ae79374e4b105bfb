"""Question answering: embed, retrieve, assemble the prompt, generate, cite.

The flow is embed(question) -> top-k cosine retrieval -> substitute the
retrieved passages and the question into a prompt template -> hand the
augmented prompt to a generator. The answer carries one citation per
retrieved passage (chunk id, doc id, score, snippet) in rank order, and is
marked grounded exactly when at least one passage made it into the prompt.

Two generators satisfy the contract: a deterministic stub that echoes the
top passage (for offline tests and demos) and a chat-completions client.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from importlib import resources
from typing import Protocol, runtime_checkable

import httpx
import numpy as np

from .embedding import EmbedderContract
from .errors import (
    AuthError,
    AvllmError,
    InvalidTemplate,
    ProtocolError,
    TransportError,
)
from .vectorstore import RetrievalHit, VectorIndex

__all__ = [
    "SNIPPET_CODEPOINTS",
    "NO_CONTEXT_LINE",
    "NO_CONTEXT_ANSWER",
    "DEFAULT_K",
    "PromptTemplate",
    "Citation",
    "Answer",
    "GeneratorContract",
    "StubGenerator",
    "RemoteGenerator",
    "build_prompt",
    "answer_question",
]

SNIPPET_CODEPOINTS = 160
NO_CONTEXT_LINE = "(no context available)"
NO_CONTEXT_ANSWER = "No context available."
DEFAULT_K = 4

_CONTEXT = "{context}"
_QUESTION = "{question}"


@dataclass(frozen=True)
class PromptTemplate:
    """Template text containing {context} and {question} exactly once each."""

    template_text: str

    def __post_init__(self) -> None:
        for placeholder in (_CONTEXT, _QUESTION):
            count = self.template_text.count(placeholder)
            if count != 1:
                raise InvalidTemplate(
                    f"template must contain {placeholder} exactly once, found {count}"
                )

    @classmethod
    def default(cls) -> "PromptTemplate":
        text = resources.files("avllm.data").joinpath("prompt_template.txt").read_text("utf-8")
        return cls(text)


@dataclass(frozen=True)
class Citation:
    chunk_id: int
    doc_id: str
    score: float
    snippet: str

    def to_dict(self) -> dict:
        return {
            "chunk_id": self.chunk_id,
            "doc_id": self.doc_id,
            "score": self.score,
            "snippet": self.snippet,
        }


@dataclass(frozen=True)
class Answer:
    """Generated text plus ordered citations and a groundedness flag."""

    text: str
    citations: tuple[Citation, ...]
    grounded: bool
    retrieval_k: int

    def to_dict(self) -> dict:
        return {
            "answer": self.text,
            "grounded": self.grounded,
            "retrieval_k": self.retrieval_k,
            "citations": [c.to_dict() for c in self.citations],
        }


@runtime_checkable
class GeneratorContract(Protocol):
    def generate(self, prompt: str) -> str: ...


def build_prompt(question: str, passages: list[RetrievalHit], template: PromptTemplate) -> str:
    """Render passages as numbered "[i] <text>" lines and substitute both placeholders.

    With zero passages the context becomes the literal no-context line.
    Substitution is plain string replacement, so braces inside documents or
    questions never interfere.
    """
    if passages:
        context = "\n".join(f"[{i}] {hit.text}" for i, hit in enumerate(passages, start=1))
    else:
        context = NO_CONTEXT_LINE
    return template.template_text.replace(_CONTEXT, context).replace(_QUESTION, question)


class StubGenerator:
    """Deterministic test double: answers from the top-ranked passage.

    If the prompt contains a "[1] " block, returns "Based on [1]: " plus the
    first 160 codepoints of that block's text; the block ends at the next
    "\\n[2] " marker or at the first blank line, whichever comes first.
    Otherwise returns the fixed no-context sentence.
    """

    def generate(self, prompt: str) -> str:
        marker = prompt.find("[1] ")
        if marker < 0:
            return NO_CONTEXT_ANSWER
        body = prompt[marker + 4 :]
        cut = len(body)
        for terminator in ("\n[2] ", "\n\n"):
            pos = body.find(terminator)
            if pos >= 0:
                cut = min(cut, pos)
        return "Based on [1]: " + body[:cut][:SNIPPET_CODEPOINTS]

    @property
    def mode(self) -> str:
        return "stub"


class RemoteGenerator:
    """Chat-completions client: one user message in, first choice's content out."""

    def __init__(
        self,
        endpoint: str,
        model_name: str,
        api_key: str | None = None,
        timeout: float = 60.0,
        retries: int = 2,
        backoff: float = 0.5,
        client: httpx.Client | None = None,
    ):
        self.endpoint = endpoint
        self.model_name = model_name
        self.api_key = api_key
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self._client = client or httpx.Client(timeout=timeout)

    @property
    def mode(self) -> str:
        return "remote"

    def close(self) -> None:
        self._client.close()

    def generate(self, prompt: str) -> str:
        payload = {
            "model": self.model_name,
            "messages": [{"role": "user", "content": prompt}],
        }
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        last_exc: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                response = self._client.post(
                    self.endpoint, json=payload, headers=headers, timeout=self.timeout
                )
            except httpx.HTTPError as exc:
                last_exc = exc
                if attempt < self.retries:
                    time.sleep(self.backoff * (2**attempt))
                continue
            if response.status_code in (401, 403):
                raise AuthError(
                    f"generation endpoint {self.endpoint} refused credentials "
                    f"({response.status_code})"
                )
            if response.status_code >= 500:
                last_exc = TransportError(
                    f"generation endpoint {self.endpoint} returned {response.status_code}"
                )
                if attempt < self.retries:
                    time.sleep(self.backoff * (2**attempt))
                continue
            if response.status_code >= 400:
                raise ProtocolError(
                    f"generation endpoint {self.endpoint} rejected the request "
                    f"({response.status_code})"
                )
            return self._extract_content(response)
        raise TransportError(
            f"generation endpoint {self.endpoint} unreachable after "
            f"{self.retries + 1} attempts: {last_exc}"
        )

    @staticmethod
    def _extract_content(response: httpx.Response) -> str:
        try:
            body = response.json()
        except ValueError as exc:
            raise ProtocolError(f"generation response is not JSON: {exc}") from exc
        choices = body.get("choices") if isinstance(body, dict) else None
        if not choices:
            raise ProtocolError("generation response has no choices")
        try:
            content = choices[0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProtocolError("generation response missing choices[0].message.content") from exc
        if not isinstance(content, str):
            raise ProtocolError("generation content is not a string")
        return content


def _snippet(text: str) -> str:
    return text[:SNIPPET_CODEPOINTS]


def _with_stage(exc: AvllmError, stage: str) -> AvllmError:
    exc.stage = stage
    return exc


def answer_question(
    question: str,
    k: int,
    index: VectorIndex,
    embedder: EmbedderContract,
    template: PromptTemplate,
    generator: GeneratorContract,
    min_score: float | None = None,
) -> Answer:
    """Run the full retrieve-then-generate flow for one question.

    ``min_score`` optionally drops passages scoring below the cutoff; if it
    filters everything the no-context path fires and the answer is
    ungrounded. Errors raised by the embedder or generator propagate with
    their pipeline stage attached.
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    try:
        query = np.asarray(embedder.embed(question), dtype=np.float64)
    except AvllmError as exc:
        raise _with_stage(exc, "embed")
    try:
        hits = index.search_topk(query, k)
    except AvllmError as exc:
        raise _with_stage(exc, "retrieve")
    if min_score is not None:
        hits = [h for h in hits if h.score >= min_score]
    prompt = build_prompt(question, hits, template)
    try:
        text = generator.generate(prompt)
    except AvllmError as exc:
        raise _with_stage(exc, "generate")
    citations = tuple(
        Citation(h.chunk_id, h.doc_id, h.score, _snippet(h.text)) for h in hits
    )
    return Answer(text=text, citations=citations, grounded=bool(citations), retrieval_k=k)
