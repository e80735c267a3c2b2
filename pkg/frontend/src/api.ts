/**
 * Thin client for the reident search API.
 *
 * Service-side errors arrive as `{code, message}` JSON bodies; they are
 * surfaced as ApiError so the UI can tell "UnknownTrack" from a dead
 * service and render the right inline message.
 */

import type { SearchResponse, ServiceMeta, TrackDetail } from "./types.js";
import type { UiQueryState } from "./urlstate.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** Query-string half of a search request; split out so it is trivially testable. */
export function searchPath(query: UiQueryState): string {
  const params = new URLSearchParams();
  if (query.make.trim()) params.set("make", query.make.trim());
  if (query.model.trim()) params.set("model", query.model.trim());
  if (query.color.trim()) params.set("color", query.color.trim());
  params.set("min_score", String(query.minScore));
  params.set("limit", String(query.limit));
  return `/api/search?${params.toString()}`;
}

export class ReidentClient {
  constructor(
    private readonly baseUrl = "",
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  searchTracks(query: UiQueryState, signal?: AbortSignal): Promise<SearchResponse> {
    return this.get(searchPath(query), signal);
  }

  trackDetail(trackId: string): Promise<TrackDetail> {
    return this.get(`/api/track/${encodeURIComponent(trackId)}`);
  }

  meta(): Promise<ServiceMeta> {
    return this.get("/api/meta");
  }

  private async get<T>(path: string, signal?: AbortSignal): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, { signal });
    if (!response.ok) {
      throw await toApiError(response);
    }
    return (await response.json()) as T;
  }
}

async function toApiError(response: Response): Promise<ApiError> {
  let code = "HttpError";
  let message = `${response.status} ${response.statusText}`;
  try {
    const body = (await response.json()) as { code?: string; message?: string };
    if (body.code) code = body.code;
    if (body.message) message = body.message;
  } catch {
    // non-JSON error body; keep the status line
  }
  return new ApiError(response.status, code, message);
}

/**
 * Keeps at most one search in flight: starting a new one aborts the
 * previous request, so a slow response can never overwrite a newer view.
 */
export class SearchGate {
  private controller: AbortController | null = null;

  run<T>(work: (signal: AbortSignal) => Promise<T>): Promise<T> {
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    return work(controller.signal);
  }
}

export function isAbortError(err: unknown): boolean {
  return err instanceof DOMException && err.name === "AbortError";
}
