/**
 * URL-backed view state.
 *
 * Every control on the page round-trips through the query string, so a
 * reload (or a shared link) reproduces the exact view. Parsing is
 * deliberately forgiving: a mangled number falls back to its default
 * rather than breaking the page.
 */

export interface UiQueryState {
  make: string;
  model: string;
  color: string;
  minScore: number;
  limit: number;
}

export interface ViewState {
  query: UiQueryState;
  /** Track id of the open drill-down panel, if any. */
  track: string | null;
}

export const DEFAULT_MIN_SCORE = 0.5;
export const DEFAULT_LIMIT = 20;

export function defaultViewState(): ViewState {
  return {
    query: { make: "", model: "", color: "", minScore: DEFAULT_MIN_SCORE, limit: DEFAULT_LIMIT },
    track: null,
  };
}

/** True when the query can be submitted (the API rejects filter-less searches). */
export function hasFilter(query: UiQueryState): boolean {
  return Boolean(query.make.trim() || query.model.trim() || query.color.trim());
}

export function parseViewState(search: string): ViewState {
  const params = new URLSearchParams(search);
  const state = defaultViewState();
  state.query.make = params.get("make") ?? "";
  state.query.model = params.get("model") ?? "";
  state.query.color = params.get("color") ?? "";
  state.query.minScore = clamp01(parseNumber(params.get("min_score"), DEFAULT_MIN_SCORE));
  state.query.limit = parsePositiveInt(params.get("limit"), DEFAULT_LIMIT);
  state.track = params.get("track");
  return state;
}

/** Inverse of parseViewState; defaults and empty filters are omitted. */
export function formatViewState(state: ViewState): string {
  const params = new URLSearchParams();
  if (state.query.make.trim()) params.set("make", state.query.make.trim());
  if (state.query.model.trim()) params.set("model", state.query.model.trim());
  if (state.query.color.trim()) params.set("color", state.query.color.trim());
  if (state.query.minScore !== DEFAULT_MIN_SCORE) {
    params.set("min_score", String(state.query.minScore));
  }
  if (state.query.limit !== DEFAULT_LIMIT) params.set("limit", String(state.query.limit));
  if (state.track !== null) params.set("track", state.track);
  const qs = params.toString();
  return qs ? `?${qs}` : "";
}

function parseNumber(raw: string | null, fallback: number): number {
  if (raw === null || raw.trim() === "") return fallback;
  const n = Number(raw);
  return Number.isFinite(n) ? n : fallback;
}

function parsePositiveInt(raw: string | null, fallback: number): number {
  const n = parseNumber(raw, fallback);
  return Number.isInteger(n) && n > 0 ? n : fallback;
}

function clamp01(x: number): number {
  return Math.min(1, Math.max(0, x));
}
