/**
 * DOM glue: wires the form, slider, result grid, and track panel to the
 * pure api/render/urlstate modules. All view state round-trips through
 * the query string; rendering always reflects the latest response only
 * (an in-flight search is aborted by the next submission).
 */

import { ApiError, isAbortError, ReidentClient, SearchGate } from "./api.js";
import { renderError, renderResults, renderTrackPanel } from "./render.js";
import type { ThumbManifest } from "./types.js";
import {
  formatViewState,
  hasFilter,
  parseViewState,
  type ViewState,
} from "./urlstate.js";

const client = new ReidentClient();
const gate = new SearchGate();

let state: ViewState = parseViewState(window.location.search);
let thumbs: ThumbManifest | undefined;

const el = {
  form: byId<HTMLFormElement>("search-form"),
  make: byId<HTMLInputElement>("make"),
  model: byId<HTMLInputElement>("model"),
  color: byId<HTMLInputElement>("color"),
  minScore: byId<HTMLInputElement>("min-score"),
  minScoreValue: byId<HTMLElement>("min-score-value"),
  limit: byId<HTMLInputElement>("limit"),
  submit: byId<HTMLButtonElement>("submit"),
  results: byId<HTMLElement>("results"),
  panel: byId<HTMLElement>("track-panel"),
};

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function readControls(): void {
  state.query.make = el.make.value;
  state.query.model = el.model.value;
  state.query.color = el.color.value;
  state.query.minScore = Number(el.minScore.value);
  state.query.limit = Number(el.limit.value) || state.query.limit;
}

function writeControls(): void {
  el.make.value = state.query.make;
  el.model.value = state.query.model;
  el.color.value = state.query.color;
  el.minScore.value = String(state.query.minScore);
  el.minScoreValue.textContent = Number(el.minScore.value).toFixed(2);
  el.limit.value = String(state.query.limit);
  el.submit.disabled = !hasFilter(state.query);
}

function syncUrl(): void {
  window.history.replaceState({}, "", formatViewState(state) || window.location.pathname);
}

async function runSearch(): Promise<void> {
  if (!hasFilter(state.query)) {
    el.results.innerHTML = `<p class="empty">set at least one filter to search</p>`;
    return;
  }
  const query = { ...state.query };
  try {
    const response = await gate.run((signal) => client.searchTracks(query, signal));
    el.results.innerHTML = renderResults(response.entries, thumbs);
  } catch (err) {
    if (isAbortError(err)) return; // superseded by a newer search
    el.results.innerHTML = renderError(describe(err));
  }
}

async function openTrack(trackId: string): Promise<void> {
  state.track = trackId;
  syncUrl();
  el.panel.hidden = false;
  try {
    const detail = await client.trackDetail(trackId);
    el.panel.innerHTML = renderTrackPanel(detail, thumbs);
  } catch (err) {
    el.panel.innerHTML = renderError(describe(err));
  }
}

function closeTrack(): void {
  state.track = null;
  syncUrl();
  el.panel.hidden = true;
  el.panel.innerHTML = "";
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return `${err.code}: ${err.message}`;
  return err instanceof Error ? err.message : String(err);
}

function submit(): void {
  readControls();
  syncUrl();
  writeControls();
  void runSearch();
}

function applyState(next: ViewState): void {
  state = next;
  writeControls();
  void runSearch();
  if (state.track) {
    void openTrack(state.track);
  } else {
    closeTrack();
  }
}

el.form.addEventListener("submit", (event) => {
  event.preventDefault();
  submit();
});

for (const input of [el.make, el.model, el.color]) {
  input.addEventListener("input", () => {
    readControls();
    el.submit.disabled = !hasFilter(state.query);
  });
}

// Live readout while dragging; the query itself fires on release ("change").
el.minScore.addEventListener("input", () => {
  el.minScoreValue.textContent = Number(el.minScore.value).toFixed(2);
});
el.minScore.addEventListener("change", () => {
  if (hasFilter(state.query)) submit();
});

el.results.addEventListener("click", (event) => {
  const target = event.target as HTMLElement;
  const open = target.closest<HTMLElement>(".card-open");
  if (open?.dataset.trackId) {
    void openTrack(open.dataset.trackId);
    return;
  }
  if (target.closest("[data-action='retry']")) void runSearch();
});

el.panel.addEventListener("click", (event) => {
  const target = event.target as HTMLElement;
  if (target.closest("[data-action='close']")) {
    closeTrack();
    return;
  }
  if (target.closest("[data-action='retry']") && state.track) void openTrack(state.track);
});

window.addEventListener("popstate", () => {
  applyState(parseViewState(window.location.search));
});

async function boot(): Promise<void> {
  try {
    const response = await fetch("thumbnails.json");
    if (response.ok) thumbs = (await response.json()) as ThumbManifest;
  } catch {
    // no manifest: metadata-first cards with placeholder thumbs
  }
  applyState(state);
}

void boot();
