// Thin client for the question-answering service's /v1 endpoints.

import { HealthResponse, QueryResponse, ServiceError } from "./types";

/** Raised for non-2xx responses that carry an {error_code, message} body. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly body: ServiceError,
  ) {
    super(`${body.error_code}: ${body.message}`);
  }
}

/**
 * Service base URL. Overridable per deployment without rebuilding:
 * a ?api=... query parameter wins, then window.AVLLM_API, then same-origin.
 */
export function resolveBaseUrl(win: Window = window): string {
  const fromQuery = new URLSearchParams(win.location.search).get("api");
  if (fromQuery) return fromQuery.replace(/\/$/, "");
  const injected = (win as unknown as { AVLLM_API?: string }).AVLLM_API;
  if (injected) return injected.replace(/\/$/, "");
  return win.location.origin;
}

async function parseErrorBody(response: Response): Promise<ServiceError> {
  try {
    const body = await response.json();
    if (body && typeof body.error_code === "string") return body as ServiceError;
  } catch {
    // fall through to the generic shape
  }
  return { error_code: `HTTP_${response.status}`, message: response.statusText };
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch.bind(globalThis),
  ) {}

  async query(question: string, k?: number): Promise<QueryResponse> {
    const payload: Record<string, unknown> = { question };
    if (k !== undefined) payload.k = k;
    const response = await this.fetchFn(`${this.baseUrl}/v1/query`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
    if (!response.ok) throw new ApiError(response.status, await parseErrorBody(response));
    return (await response.json()) as QueryResponse;
  }

  async health(): Promise<HealthResponse> {
    const response = await this.fetchFn(`${this.baseUrl}/v1/health`);
    if (!response.ok) throw new ApiError(response.status, await parseErrorBody(response));
    return (await response.json()) as HealthResponse;
  }
}
