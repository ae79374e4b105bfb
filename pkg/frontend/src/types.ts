// Wire types for the /v1 service endpoints and local chat state.

export interface Citation {
  chunk_id: number;
  doc_id: string;
  score: number;
  snippet: string;
}

export interface QueryResponse {
  answer: string;
  grounded: boolean;
  retrieval_k?: number;
  citations: Citation[];
}

export interface HealthResponse {
  status: string;
  index_records: number;
  dimension: number | null;
  embedder_mode: string;
  generator_mode: string;
}

export interface ServiceError {
  error_code: string;
  message: string;
}

/** One question/answer exchange. Exactly one of answer/error is set. */
export interface ChatTurn {
  question: string;
  answer?: QueryResponse;
  error?: ServiceError;
  latency_ms: number;
}
