// Chat session state: an append-only turn list with one in-flight request.

import { ApiClient, ApiError } from "./api";
import { ChatTurn } from "./types";

export class ChatSession {
  private readonly turns: ChatTurn[] = [];
  private inFlight = false;

  constructor(private readonly api: ApiClient) {}

  get history(): readonly ChatTurn[] {
    return this.turns;
  }

  get pending(): boolean {
    return this.inFlight;
  }

  /**
   * Ask one question and append the resulting turn.
   *
   * Rejects empty questions and refuses to overlap requests; failures are
   * recorded as error turns so the history is never lost.
   */
  async submit(question: string, k?: number): Promise<ChatTurn> {
    const trimmed = question.trim();
    if (!trimmed) throw new Error("question must be non-empty");
    if (this.inFlight) throw new Error("a request is already in flight");

    this.inFlight = true;
    const started = performance.now();
    let turn: ChatTurn;
    try {
      const answer = await this.api.query(trimmed, k);
      turn = { question: trimmed, answer, latency_ms: performance.now() - started };
    } catch (err) {
      const body =
        err instanceof ApiError
          ? err.body
          : { error_code: "NETWORK", message: err instanceof Error ? err.message : String(err) };
      turn = { question: trimmed, error: body, latency_ms: performance.now() - started };
    } finally {
      this.inFlight = false;
    }
    this.turns.push(turn);
    return turn;
  }
}
