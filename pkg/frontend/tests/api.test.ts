import { describe, expect, it } from "vitest";

import { ApiError, isAbortError, ReidentClient, SearchGate, searchPath } from "../src/api.js";
import { defaultViewState } from "../src/urlstate.js";

function query(overrides: Partial<ReturnType<typeof defaultViewState>["query"]> = {}) {
  return { ...defaultViewState().query, ...overrides };
}

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

describe("searchPath", () => {
  it("always sends min_score and limit, filters only when set", () => {
    expect(searchPath(query({ make: "falken" }))).toBe(
      "/api/search?make=falken&min_score=0.5&limit=20",
    );
    expect(searchPath(query({ model: "vista#2", minScore: 0.8, limit: 5 }))).toBe(
      "/api/search?model=vista%232&min_score=0.8&limit=5",
    );
  });

  it("trims filter values", () => {
    expect(searchPath(query({ color: " red " }))).toContain("color=red");
  });
});

describe("ReidentClient", () => {
  it("parses a successful search response", async () => {
    const client = new ReidentClient("", async () =>
      jsonResponse(200, { entries: [{ trackId: "t0" }] }),
    );
    const response = await client.searchTracks(query({ make: "falken" }));
    expect(response.entries).toHaveLength(1);
    expect(response.entries[0].trackId).toBe("t0");
  });

  it("maps service error bodies onto ApiError with their code", async () => {
    const client = new ReidentClient("", async () =>
      jsonResponse(404, { code: "UnknownTrack", message: "no track 'nope'" }),
    );
    const err = await client.trackDetail("nope").catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(404);
    expect((err as ApiError).code).toBe("UnknownTrack");
    expect((err as ApiError).message).toBe("no track 'nope'");
  });

  it("keeps the status line when the error body is not JSON", async () => {
    const client = new ReidentClient(
      "",
      async () => new Response("boom", { status: 502, statusText: "Bad Gateway" }),
    );
    const err = await client.meta().catch((e: unknown) => e);
    expect((err as ApiError).code).toBe("HttpError");
    expect((err as ApiError).message).toBe("502 Bad Gateway");
  });

  it("prefixes the base url and encodes track ids", async () => {
    const seen: string[] = [];
    const client = new ReidentClient("http://x:9", async (url) => {
      seen.push(url);
      return jsonResponse(200, {});
    });
    await client.trackDetail("a/b");
    expect(seen).toEqual(["http://x:9/api/track/a%2Fb"]);
  });
});

describe("SearchGate", () => {
  it("aborts the previous request when a new one starts", async () => {
    const gate = new SearchGate();
    const first = gate.run(
      (signal) =>
        new Promise((_, reject) => {
          signal.addEventListener("abort", () =>
            reject(new DOMException("aborted", "AbortError")),
          );
        }),
    );
    const second = gate.run(async () => "fresh");
    await expect(second).resolves.toBe("fresh");
    const err = await first.catch((e: unknown) => e);
    expect(isAbortError(err)).toBe(true);
  });

  it("passes a live signal to the winning request", async () => {
    const gate = new SearchGate();
    const result = await gate.run(async (signal) => signal.aborted);
    expect(result).toBe(false);
  });
});
