// Shared test scaffolding: a mocked fetch and a mounted App over jsdom.

import { ApiClient } from "../src/api";
import { App, AppElements } from "../src/main";
import { HealthResponse, QueryResponse, ServiceError } from "../src/types";

export type RouteHandler = (url: string, init?: RequestInit) => Response | Promise<Response>;

export function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

export function okQuery(body: Partial<QueryResponse> = {}): Response {
  return jsonResponse(200, {
    answer: "Based on [1]: something",
    grounded: true,
    retrieval_k: 4,
    citations: [],
    ...body,
  });
}

export function errorResponse(status: number, body: ServiceError): Response {
  return jsonResponse(status, body);
}

export function okHealth(body: Partial<HealthResponse> = {}): Response {
  return jsonResponse(200, {
    status: "ok",
    index_records: 0,
    dimension: 256,
    embedder_mode: "hash",
    generator_mode: "stub",
    ...body,
  });
}

export function mockedClient(handler: RouteHandler): ApiClient {
  const fetchFn = (async (input: RequestInfo | URL, init?: RequestInit) =>
    handler(String(input), init)) as typeof fetch;
  return new ApiClient("http://svc.test", fetchFn);
}

export function buildDom(): AppElements {
  document.body.innerHTML = `
    <div id="banner"></div>
    <section id="history"></section>
    <form id="ask-form">
      <input id="question" type="text" />
      <input id="k" type="number" />
      <button id="submit" type="submit">Ask</button>
    </form>
    <div id="validation"></div>
  `;
  return {
    banner: document.getElementById("banner") as HTMLElement,
    history: document.getElementById("history") as HTMLElement,
    form: document.getElementById("ask-form") as HTMLFormElement,
    questionInput: document.getElementById("question") as HTMLInputElement,
    kInput: document.getElementById("k") as HTMLInputElement,
    submitButton: document.getElementById("submit") as HTMLButtonElement,
    validation: document.getElementById("validation") as HTMLElement,
  };
}

export function buildApp(handler: RouteHandler): { app: App; elements: AppElements } {
  const elements = buildDom();
  const app = new App(elements, mockedClient(handler));
  return { app, elements };
}
