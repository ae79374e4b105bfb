"""Prompt assembly, stub and remote generators, and the end-to-end answer flow."""

from __future__ import annotations

import json

import httpx
import numpy as np
import pytest

from avllm.embedding import HashEmbedder
from avllm.errors import (
    AuthError,
    EmptyInput,
    InvalidTemplate,
    ProtocolError,
    TransportError,
)
from avllm.pipeline import (
    NO_CONTEXT_ANSWER,
    NO_CONTEXT_LINE,
    Answer,
    PromptTemplate,
    RemoteGenerator,
    StubGenerator,
    answer_question,
    build_prompt,
)
from avllm.vectorstore import RetrievalHit, VectorIndex


def hit(i, text, score=0.9):
    return RetrievalHit(chunk_id=i, doc_id=f"doc{i}", text=text, score=score, rank=i)


def small_index(texts, dim=64):
    index = VectorIndex(dim)
    embedder = HashEmbedder(dim)
    for i, text in enumerate(texts):
        index.upsert(f"doc{i}", text, embedder, size=800, overlap=0)
    return index, embedder


class TestPromptTemplate:
    def test_default_asset_is_valid(self):
        template = PromptTemplate.default()
        assert template.template_text.count("{context}") == 1
        assert template.template_text.count("{question}") == 1
        assert template.template_text.startswith("Answer the question using only the context")

    def test_missing_placeholder_rejected(self):
        with pytest.raises(InvalidTemplate):
            PromptTemplate("no placeholders at all")
        with pytest.raises(InvalidTemplate):
            PromptTemplate("only {context} here")

    def test_duplicate_placeholder_rejected(self):
        with pytest.raises(InvalidTemplate):
            PromptTemplate("{context} {context} {question}")


class TestBuildPrompt:
    def test_single_passage_precedes_question(self):
        template = PromptTemplate.default()
        prompt = build_prompt(
            "When does lift equal weight?",
            [hit(1, "Lift equals weight in level flight.")],
            template,
        )
        assert "[1] Lift equals weight in level flight." in prompt
        assert prompt.index("[1]") < prompt.index("Question: When does lift equal weight?")

    def test_zero_passages_emit_fallback_line(self):
        prompt = build_prompt("anything?", [], PromptTemplate.default())
        assert NO_CONTEXT_LINE in prompt

    def test_three_passages_in_rank_order(self):
        prompt = build_prompt(
            "q?", [hit(1, "first"), hit(2, "second"), hit(3, "third")], PromptTemplate.default()
        )
        assert prompt.index("[1] first") < prompt.index("[2] second") < prompt.index("[3] third")

    def test_braces_in_content_survive(self):
        template = PromptTemplate("C:{context}|Q:{question}")
        prompt = build_prompt("what is {x}?", [hit(1, "json {a: 1}")], template)
        assert "json {a: 1}" in prompt
        assert "what is {x}?" in prompt


class TestStubGenerator:
    def test_echoes_first_block(self):
        assert StubGenerator().generate("intro\n[1] ABC\n\nQuestion: q") == "Based on [1]: ABC"

    def test_no_context_prompt(self):
        prompt = build_prompt("q?", [], PromptTemplate.default())
        assert StubGenerator().generate(prompt) == NO_CONTEXT_ANSWER

    def test_truncates_at_160_codepoints(self):
        long_text = "x" * 500
        out = StubGenerator().generate(f"[1] {long_text}")
        assert out == "Based on [1]: " + "x" * 160

    def test_stops_at_second_block(self):
        out = StubGenerator().generate("[1] alpha beta\n[2] other\n\nQuestion: q")
        assert out == "Based on [1]: alpha beta"


class TestAnswerQuestion:
    def test_empty_index_fallback(self):
        index = VectorIndex(64)
        answer = answer_question(
            "anything at all?", 4, index, HashEmbedder(64), PromptTemplate.default(), StubGenerator()
        )
        assert answer.text == NO_CONTEXT_ANSWER
        assert answer.grounded is False
        assert answer.citations == ()

    def test_single_passage_index_echoes_passage(self):
        passage = "Lift equals weight in steady level flight."
        index, embedder = small_index([passage])
        answer = answer_question(
            "When does lift equal weight?", 4, index, embedder,
            PromptTemplate.default(), StubGenerator(),
        )
        assert answer.text == "Based on [1]: " + passage
        assert answer.grounded is True
        assert len(answer.citations) == 1
        assert answer.citations[0].snippet == passage[:160]

    def test_k_limits_citations(self):
        texts = [f"passage number {i} about topic {i}" for i in range(10)]
        index, embedder = small_index(texts)
        answer = answer_question(
            "passage topic", 3, index, embedder, PromptTemplate.default(), StubGenerator()
        )
        assert len(answer.citations) == 3

    def test_citation_scores_match_cosine(self):
        from avllm.vectorstore import cosine_similarity

        texts = ["stall recovery training", "runway markings guide", "metar decoding help"]
        index, embedder = small_index(texts)
        question = "how do I recover from a stall"
        answer = answer_question(
            question, 3, index, embedder, PromptTemplate.default(), StubGenerator()
        )
        query = embedder.embed(question)
        stored = {r.chunk.chunk_id: r.vector for r in index.records}
        for citation in answer.citations:
            expected = cosine_similarity(query, stored[citation.chunk_id])
            assert citation.score == pytest.approx(expected, abs=1e-12)

    def test_min_score_can_unground_the_answer(self):
        index, embedder = small_index(["totally unrelated passage about cooking"])
        answer = answer_question(
            "quantum flux capacitors", 4, index, embedder,
            PromptTemplate.default(), StubGenerator(), min_score=0.99,
        )
        assert answer.grounded is False
        assert answer.text == NO_CONTEXT_ANSWER

    def test_deterministic_across_runs(self):
        texts = ["alpha passage one", "bravo passage two", "charlie passage three"]
        index_a, embedder_a = small_index(texts)
        index_b, embedder_b = small_index(texts)
        q = "which passage?"
        template = PromptTemplate.default()
        first = answer_question(q, 2, index_a, embedder_a, template, StubGenerator())
        second = answer_question(q, 2, index_b, embedder_b, template, StubGenerator())
        assert first == second

    def test_unembeddable_question_reports_embed_stage(self):
        index, embedder = small_index(["some passage"])
        with pytest.raises(EmptyInput) as excinfo:
            answer_question("???", 4, index, embedder, PromptTemplate.default(), StubGenerator())
        assert excinfo.value.stage == "embed"

    def test_generator_failure_reports_generate_stage(self):
        class FailingGenerator:
            def generate(self, prompt):
                raise TransportError("boom")

        index, embedder = small_index(["some passage"])
        with pytest.raises(TransportError) as excinfo:
            answer_question(
                "some passage?", 4, index, embedder, PromptTemplate.default(), FailingGenerator()
            )
        assert excinfo.value.stage == "generate"

    def test_invalid_k_rejected(self):
        index, embedder = small_index(["p"])
        with pytest.raises(ValueError):
            answer_question("q?", 0, index, embedder, PromptTemplate.default(), StubGenerator())

    def test_answer_to_dict_schema(self):
        index, embedder = small_index(["one single passage here"])
        answer = answer_question(
            "single passage?", 4, index, embedder, PromptTemplate.default(), StubGenerator()
        )
        payload = answer.to_dict()
        assert set(payload) == {"answer", "grounded", "retrieval_k", "citations"}
        assert set(payload["citations"][0]) == {"chunk_id", "doc_id", "score", "snippet"}


def mock_generator(handler, **kwargs) -> RemoteGenerator:
    client = httpx.Client(transport=httpx.MockTransport(handler))
    return RemoteGenerator(
        "http://gen.test/v1/chat/completions", "gen-model",
        api_key="secret-key", client=client, backoff=0.0, **kwargs,
    )


class TestRemoteGenerator:
    def test_happy_path_and_wire_format(self):
        seen = {}

        def handler(request):
            seen["body"] = json.loads(request.content)
            seen["auth"] = request.headers.get("authorization")
            return httpx.Response(
                200, json={"choices": [{"message": {"role": "assistant", "content": "X"}}]}
            )

        generator = mock_generator(handler)
        assert generator.generate("the prompt") == "X"
        assert seen["body"] == {
            "model": "gen-model",
            "messages": [{"role": "user", "content": "the prompt"}],
        }
        assert seen["auth"] == "Bearer secret-key"

    def test_empty_choices_is_protocol_error(self):
        generator = mock_generator(lambda request: httpx.Response(200, json={"choices": []}))
        with pytest.raises(ProtocolError):
            generator.generate("p")

    def test_401_maps_to_auth_error(self):
        generator = mock_generator(lambda request: httpx.Response(401, json={}))
        with pytest.raises(AuthError):
            generator.generate("p")

    def test_403_maps_to_auth_error(self):
        generator = mock_generator(lambda request: httpx.Response(403, json={}))
        with pytest.raises(AuthError):
            generator.generate("p")

    def test_transport_failure_retried_then_raised(self):
        calls = {"n": 0}

        def handler(request):
            calls["n"] += 1
            raise httpx.ReadTimeout("slow")

        generator = mock_generator(handler, retries=1)
        with pytest.raises(TransportError):
            generator.generate("p")
        assert calls["n"] == 2
