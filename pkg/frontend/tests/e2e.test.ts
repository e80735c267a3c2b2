/**
 * End-to-end: drives the real HTTP service with the real client and
 * feeds real payloads through the real renderers. Builds the demo
 * fixture, serves its index with the CLI, and asserts the three UI
 * guarantees: grid order = API order, raising the threshold slider
 * never grows the grid, and the track panel lists every member with
 * the best shot highlighted.
 */

import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiError, ReidentClient } from "../src/api.js";
import { renderError, renderResults, renderTrackPanel } from "../src/render.js";
import { defaultViewState, type UiQueryState } from "../src/urlstate.js";

const PORT = 8700 + Math.floor(Math.random() * 200);
const BASE = `http://127.0.0.1:${PORT}`;

let workDir: string;
let server: ChildProcess;
const client = new ReidentClient(BASE);

function query(overrides: Partial<UiQueryState>): UiQueryState {
  return { ...defaultViewState().query, ...overrides };
}

function cardIds(html: string): string[] {
  return [...html.matchAll(/<li class="card" data-track-id="([^"]*)"/g)].map((m) => m[1]);
}

async function waitForService(): Promise<void> {
  for (let attempt = 0; attempt < 100; attempt++) {
    try {
      await client.meta();
      return;
    } catch {
      await new Promise((resolve) => setTimeout(resolve, 200));
    }
  }
  throw new Error(`service at ${BASE} never came up`);
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "reident-e2e-"));
  execFileSync("python3", ["-m", "reident.cli", "demo", "--out-dir", workDir], {
    stdio: "pipe",
    timeout: 120_000,
  });
  server = spawn(
    "python3",
    [
      "-m",
      "reident.cli",
      "serve",
      "--index",
      join(workDir, "index.json"),
      "--host",
      "127.0.0.1",
      "--port",
      String(PORT),
    ],
    { stdio: "ignore" },
  );
  await waitForService();
}, 180_000);

afterAll(() => {
  server?.kill();
  if (workDir) rmSync(workDir, { recursive: true, force: true });
});

describe("search grid against the live service", () => {
  it("renders the demo fixture's results in API order", async () => {
    const response = await client.searchTracks(query({ make: "falken", minScore: 0, limit: 50 }));
    expect(response.entries.length).toBeGreaterThanOrEqual(2);
    const html = renderResults(response.entries);
    expect(cardIds(html)).toEqual(response.entries.map((e) => e.trackId));
    // and the cards carry the payload's metadata verbatim
    for (const entry of response.entries) {
      expect(html).toContain(entry.trackId);
      expect(html).toContain(`${entry.predictedMake} / ${entry.predictedModel}`);
    }
  });

  it("never grows the grid as the threshold slider rises", async () => {
    const base = await client.searchTracks(query({ make: "falken", minScore: 0, limit: 50 }));
    const scores = base.entries.map((e) => e.shapeScore).sort((a, b) => a - b);
    expect(scores.length).toBeGreaterThan(1);
    const midScore = scores[Math.floor(scores.length / 2)];
    // a ladder that provably crosses some of the fixture's scores
    const thresholds = [0, midScore, 1];
    const counts: number[] = [];
    for (const minScore of thresholds) {
      const response = await client.searchTracks(query({ make: "falken", minScore, limit: 50 }));
      counts.push(cardIds(renderResults(response.entries)).length);
    }
    for (let i = 1; i < counts.length; i++) {
      expect(counts[i]).toBeLessThanOrEqual(counts[i - 1]);
    }
    // the filter is inclusive, so each rendered count is exactly the
    // number of base scores at or above the threshold
    for (let i = 0; i < thresholds.length; i++) {
      expect(counts[i]).toBe(scores.filter((s) => s >= thresholds[i]).length);
    }
    // ... and the drop along the ladder is actually visible in the grid
    expect(counts[thresholds.length - 1]).toBeLessThan(counts[0]);
  });

  it("renders the empty state when the threshold excludes everything", async () => {
    const response = await client.searchTracks(query({ make: "falken", minScore: 1, limit: 50 }));
    if (response.entries.length === 0) {
      expect(renderResults(response.entries)).toContain("no matches");
    } else {
      // every remaining score is exactly 1.0; tighten via a color that does not exist
      const none = await client.searchTracks(query({ color: "plaid" }));
      expect(none.entries).toEqual([]);
      expect(renderResults(none.entries)).toContain("no matches");
    }
  });
});

describe("track drill-down against the live service", () => {
  it("lists every member of the track with the best shot highlighted", async () => {
    const response = await client.searchTracks(query({ make: "falken", minScore: 0, limit: 50 }));
    const first = response.entries[0];
    const detail = await client.trackDetail(first.trackId);
    expect(detail.trackId).toBe(first.trackId);
    expect(detail.bestShotId).toBe(first.recordId);

    const html = renderTrackPanel(detail);
    const rows = [...html.matchAll(/data-member-id="([^"]*)"/g)].map((m) => m[1]);
    expect(rows).toEqual(detail.members.map((m) => m.id));
    expect(detail.members.length).toBeGreaterThan(0);

    const highlighted = [...html.matchAll(/<tr class="best-shot" data-member-id="([^"]*)"/g)];
    expect(highlighted.map((m) => m[1])).toEqual([detail.bestShotId]);
  });

  it("surfaces an unknown track as an inline error", async () => {
    const err = await client.trackDetail("no-such-track").catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(404);
    expect((err as ApiError).code).toBe("UnknownTrack");
    const html = renderError(`${(err as ApiError).code}: ${(err as ApiError).message}`);
    expect(html).toContain("UnknownTrack");
    expect(html).toContain(`data-action="retry"`);
  });

  it("mirrors the service's filter precondition client-side", async () => {
    const err = await client
      .searchTracks(query({ make: "", model: "", color: "" }))
      .catch((e: unknown) => e);
    expect((err as ApiError).status).toBe(400);
    expect((err as ApiError).code).toBe("BadQuery");
  });
});
