/**
 * HTML renderers for the search console.
 *
 * Pure string -> string functions with no DOM access, so they can be
 * exercised directly in node tests and against live API payloads. The
 * cardinal rule: entries and track members are rendered exactly in
 * payload order — the API owns sorting, the UI never re-sorts.
 */

import type { ThumbManifest, TrackDetail, TrackSummary } from "./types.js";

export function escapeHtml(raw: string): string {
  return raw
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

function fmtScore(x: number): string {
  return x.toFixed(3);
}

function thumb(recordId: string, thumbs?: ThumbManifest): string {
  const src = thumbs?.[recordId];
  if (src) {
    return `<img class="thumb" src="${escapeHtml(src)}" alt="${escapeHtml(recordId)}">`;
  }
  return `<div class="thumb placeholder" aria-hidden="true"></div>`;
}

export function renderResults(entries: TrackSummary[], thumbs?: ThumbManifest): string {
  if (entries.length === 0) {
    return `<p class="empty">no matches</p>`;
  }
  const cards = entries.map((e) => renderCard(e, thumbs));
  return `<ul class="results">\n${cards.join("\n")}\n</ul>`;
}

function renderCard(entry: TrackSummary, thumbs?: ThumbManifest): string {
  const color =
    entry.colorName !== undefined
      ? `${escapeHtml(entry.colorName)} (${fmtScore(entry.colorScore ?? 0)})`
      : "&mdash;";
  return [
    `<li class="card" data-track-id="${escapeHtml(entry.trackId)}">`,
    `<button class="card-open" data-track-id="${escapeHtml(entry.trackId)}">`,
    thumb(entry.recordId, thumbs),
    `<span class="track-id">${escapeHtml(entry.trackId)}</span>`,
    `<span class="make-model">${escapeHtml(entry.predictedMake)} / ${escapeHtml(entry.predictedModel)}</span>`,
    `<span class="shape-score">score ${fmtScore(entry.shapeScore)}</span>`,
    `<span class="color">color ${color}</span>`,
    `</button>`,
    `</li>`,
  ].join("");
}

export function renderTrackPanel(detail: TrackDetail, thumbs?: ThumbManifest): string {
  const rows = detail.members
    .map((m) => {
      const best = m.id === detail.bestShotId;
      const cls = best ? ` class="best-shot"` : "";
      const marker = best ? "&#9733;" : "";
      const frame = m.frame === null ? "&mdash;" : String(m.frame);
      return (
        `<tr${cls} data-member-id="${escapeHtml(m.id)}">` +
        `<td class="marker">${marker}</td>` +
        `<td>${escapeHtml(m.id)}</td>` +
        `<td>${frame}</td>` +
        `<td>${fmtScore(m.quality)}</td>` +
        `</tr>`
      );
    })
    .join("\n");
  return [
    `<div class="track-detail" data-track-id="${escapeHtml(detail.trackId)}">`,
    `<header>`,
    `<h2>${escapeHtml(detail.trackId)}</h2>`,
    `<button class="panel-close" data-action="close">close</button>`,
    `</header>`,
    thumb(detail.bestShotId, thumbs),
    `<p class="make-model">${escapeHtml(detail.predictedMake)} / ${escapeHtml(detail.predictedModel)}`,
    ` &middot; score ${fmtScore(detail.shapeScore)}</p>`,
    `<table class="members">`,
    `<thead><tr><th></th><th>detection</th><th>frame</th><th>quality</th></tr></thead>`,
    `<tbody>\n${rows}\n</tbody>`,
    `</table>`,
    `</div>`,
  ].join("");
}

export function renderError(message: string): string {
  return (
    `<div class="error" role="alert">` +
    `<span>${escapeHtml(message)}</span> ` +
    `<button data-action="retry">retry</button>` +
    `</div>`
  );
}
