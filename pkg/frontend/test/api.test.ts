import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, resolveBaseUrl } from "../src/api";
import { jsonResponse, mockedClient, okHealth } from "./helpers";

describe("ApiClient", () => {
  it("parses structured error bodies", async () => {
    const client = mockedClient(() =>
      jsonResponse(409, { error_code: "DIMENSION_CONFLICT", message: "mismatch" }),
    );
    await expect(client.query("q")).rejects.toMatchObject({
      status: 409,
      body: { error_code: "DIMENSION_CONFLICT" },
    });
  });

  it("falls back to an HTTP_<status> code for non-JSON errors", async () => {
    const client = mockedClient(() => new Response("boom", { status: 500 }));
    try {
      await client.health();
      expect.unreachable();
    } catch (err) {
      expect(err).toBeInstanceOf(ApiError);
      expect((err as ApiError).body.error_code).toBe("HTTP_500");
    }
  });

  it("omits k from the body when not chosen", async () => {
    let body = "";
    const client = mockedClient((_, init) => {
      body = String(init?.body);
      return jsonResponse(200, { answer: "", grounded: false, citations: [] });
    });
    await client.query("just a question");
    expect(JSON.parse(body)).toEqual({ question: "just a question" });
  });

  it("returns typed health payloads", async () => {
    const client = mockedClient(() => okHealth({ index_records: 3 }));
    const health = await client.health();
    expect(health.index_records).toBe(3);
  });
});

describe("resolveBaseUrl", () => {
  function fakeWindow(search: string, injected?: string): Window {
    return {
      location: { search, origin: "http://page.origin" },
      ...(injected ? { AVLLM_API: injected } : {}),
    } as unknown as Window;
  }

  it("prefers the ?api query parameter", () => {
    expect(resolveBaseUrl(fakeWindow("?api=http://svc:9000/", "http://other"))).toBe(
      "http://svc:9000",
    );
  });

  it("falls back to an injected global, then same-origin", () => {
    expect(resolveBaseUrl(fakeWindow("", "http://injected/"))).toBe("http://injected");
    expect(resolveBaseUrl(fakeWindow(""))).toBe("http://page.origin");
  });
});
