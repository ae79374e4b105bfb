// DOM rendering: health banner, chat turns, citation cards.

import { ChatTurn, HealthResponse } from "./types";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export type BannerState =
  | { kind: "ok"; health: HealthResponse }
  | { kind: "starting" }
  | { kind: "offline" };

export function renderBanner(target: HTMLElement, state: BannerState): void {
  target.textContent = "";
  target.classList.remove("banner-ok", "banner-starting", "banner-offline");
  if (state.kind === "ok") {
    const h = state.health;
    target.classList.add("banner-ok");
    const passages = h.index_records === 1 ? "passage" : "passages";
    target.appendChild(
      el(
        "span",
        "banner-text",
        `${h.index_records} ${passages} indexed · embedder: ${h.embedder_mode} · generator: ${h.generator_mode}`,
      ),
    );
  } else if (state.kind === "starting") {
    target.classList.add("banner-starting");
    target.appendChild(el("span", "banner-text", "service starting"));
  } else {
    target.classList.add("banner-offline");
    target.appendChild(el("span", "banner-text", "service offline"));
  }
}

/** One citation card per hit, in the payload's rank order, never invented. */
function renderCitations(turn: ChatTurn): HTMLElement {
  const list = el("div", "citations");
  const citations = turn.answer?.citations ?? [];
  citations.forEach((citation, i) => {
    const card = el("div", "citation-card");
    card.dataset.chunkId = String(citation.chunk_id);
    const head = el("div", "citation-head");
    head.appendChild(el("span", "citation-rank", `[${i + 1}]`));
    head.appendChild(el("span", "citation-doc", citation.doc_id));
    head.appendChild(el("span", "citation-score", citation.score.toFixed(3)));
    card.appendChild(head);
    card.appendChild(el("div", "citation-snippet", citation.snippet));
    list.appendChild(card);
  });
  return list;
}

export function renderTurn(turn: ChatTurn, onRetry?: (turn: ChatTurn) => void): HTMLElement {
  const node = el("article", "turn");
  const question = el("div", "turn-question");
  question.appendChild(el("span", "turn-label", "Q"));
  question.appendChild(el("span", "turn-question-text", turn.question));
  node.appendChild(question);

  if (turn.error) {
    const error = el("div", "turn-error");
    error.appendChild(el("span", "error-code", turn.error.error_code));
    error.appendChild(el("span", "error-message", turn.error.message));
    if (onRetry) {
      const retry = el("button", "retry-button", "retry");
      retry.type = "button";
      retry.addEventListener("click", () => onRetry(turn));
      error.appendChild(retry);
    }
    node.appendChild(error);
    return node;
  }

  const answer = turn.answer!;
  const body = el("div", "turn-answer");
  const badge = el(
    "span",
    answer.grounded ? "badge badge-grounded" : "badge badge-ungrounded",
    answer.grounded ? "grounded" : "ungrounded",
  );
  body.appendChild(badge);
  body.appendChild(el("div", "answer-text", answer.answer));
  node.appendChild(body);
  node.appendChild(renderCitations(turn));
  node.appendChild(el("div", "turn-latency", `${Math.round(turn.latency_ms)} ms`));
  return node;
}

export function renderHistory(
  target: HTMLElement,
  turns: readonly ChatTurn[],
  onRetry?: (turn: ChatTurn) => void,
): void {
  target.textContent = "";
  for (const turn of turns) target.appendChild(renderTurn(turn, onRetry));
}
