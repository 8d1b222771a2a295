/** Pure HTML renderers for the cluster/theme/history views.
 *
 * Every number in the markup is the fetched value verbatim (String(n) of
 * the JSON number) so the UI can never disagree with the CSV exports.
 */

import type { ClusterCard, HistoryEntry, ThemeView } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function renderClusterCard(card: ClusterCard): string {
  const flags = [
    card.review_largest ? "largest-queue" : "",
    card.review_smallest ? "smallest-queue" : "",
  ]
    .filter(Boolean)
    .join(" ");
  const topics = card.sample_topics
    .map((t) => `<li>${escapeHtml(t)}</li>`)
    .join("");
  return `<article class="cluster-card" data-cluster-id="${card.cluster_id}" data-size="${card.size}" data-coherence="${card.coherence}">
  <header>
    <input type="checkbox" class="select-cluster" value="${card.cluster_id}">
    <h3>${escapeHtml(card.name)}</h3>
    <span class="review-flags">${flags}</span>
  </header>
  <dl>
    <dt>size</dt><dd class="size">${card.size}</dd>
    <dt>coherence</dt><dd class="coherence">${card.coherence}</dd>
    <dt>theme</dt><dd class="theme">${escapeHtml(card.theme_id)}</dd>
  </dl>
  <ul class="sample-topics">${topics}</ul>
</article>`;
}

export function renderReviewQueue(cards: ClusterCard[], filter: string): string {
  const body = cards.map(renderClusterCard).join("\n");
  return `<section class="review-queue" data-filter="${escapeHtml(filter)}">\n${body}\n</section>`;
}

export function renderThemes(themes: ThemeView[], version: number): string {
  const rows = themes
    .map(
      (t) =>
        `<tr data-theme-id="${escapeHtml(t.theme_id)}"><td>${escapeHtml(t.name)}</td>` +
        `<td class="clusters">${t.clusters.join(", ")}</td><td class="size">${t.size}</td></tr>`,
    )
    .join("");
  return `<table class="themes" data-version="${version}">
<thead><tr><th>theme</th><th>clusters</th><th>topics</th></tr></thead>
<tbody>${rows}</tbody>
</table>`;
}

export function renderHistory(entries: HistoryEntry[]): string {
  const items = entries
    .map(
      (e) =>
        `<li data-version="${e.version}"><code>${escapeHtml(e.kind)}</code> ` +
        `by ${escapeHtml(e.actor)} at ${escapeHtml(e.timestamp)}</li>`,
    )
    .join("");
  return `<ol class="history">${items}</ol>`;
}

export function renderConflictBanner(message: string | null): string {
  if (!message) {
    return "";
  }
  return `<div class="conflict-banner" role="alert">${escapeHtml(message)} — state refreshed, please retry</div>`;
}

export function renderOfflineBanner(): string {
  return `<div class="offline-banner" role="alert">service unreachable — read-only snapshot</div>`;
}
