// HTML rendering as pure string functions: state in, markup out. main.ts
// swaps innerHTML and wires events through data-* attributes.

import { enabledActions } from "./legality.js";
import type { ViewState } from "./state.js";
import type { FaqEntry, ReviewItem, ReviewState } from "./types.js";
import { displayText } from "./types.js";

const TABS: ReviewState[] = ["pending", "approved", "published", "rejected"];

export function escapeHtml(raw: string): string {
  return raw
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

export function renderTabs(state: ViewState): string {
  return TABS.map((tab) => {
    const active = tab === state.tab ? " active" : "";
    return `<button class="tab${active}" data-tab="${tab}">${tab}</button>`;
  }).join("");
}

function confidenceBadge(item: ReviewItem): string {
  const qa = item.candidate.qa;
  if (!qa) return "";
  return `<span class="badge" title="QA confidence">${qa.confidence.toFixed(2)}</span>`;
}

function actionButtons(item: ReviewItem): string {
  return enabledActions(item.state)
    .map((action) => {
      const label = action === "edit+approve" ? "edit" : action;
      return `<button class="action" data-action="${action}" data-item="${item.id}">${label}</button>`;
    })
    .join("");
}

export function renderItemCard(item: ReviewItem, state: ViewState, index: number): string {
  const focused = index === state.focusIndex ? " focused" : "";
  const conflict = state.conflicts[item.id];
  const conflictBanner = conflict
    ? `<div class="conflict-banner" role="alert">⚠ ${escapeHtml(conflict)}</div>`
    : "";
  const edited = item.edited_text
    ? `<div class="edited-note">edited from: ${escapeHtml(item.candidate.text)}</div>`
    : "";
  const code = item.candidate.code
    ? `<span class="code" title="control code">${escapeHtml(item.candidate.code.phrase)}</span>`
    : "";
  return `
  <article class="card${focused}" data-card="${item.id}" data-version="${item.version}">
    ${conflictBanner}
    <header>
      <span class="headline">${escapeHtml(item.article_ref.headline)}</span>
      <span class="domain">${escapeHtml(item.article_ref.domain)}</span>
      <span class="version">v${item.version}</span>
    </header>
    <p class="question">${escapeHtml(displayText(item))} ${confidenceBadge(item)} ${code}</p>
    ${edited}
    <blockquote class="paragraph">${escapeHtml(item.paragraph_text)}</blockquote>
    <footer>${actionButtons(item)}</footer>
  </article>`;
}

export function renderQueue(state: ViewState): string {
  if (!state.items.length) {
    return `<p class="empty">No ${escapeHtml(state.tab)} items.</p>`;
  }
  return state.items.map((item, i) => renderItemCard(item, state, i)).join("\n");
}

export function renderFaqPanel(entries: FaqEntry[], headline: string): string {
  if (!entries.length) {
    return `<p class="empty">No published questions yet.</p>`;
  }
  const rows = entries
    .map((e) => `<li><span class="faq-q">${escapeHtml(e.question)}</span>` +
      `<span class="faq-h">${escapeHtml(e.article_ref.headline)}</span></li>`)
    .join("");
  return `<h3>Reader preview — ${escapeHtml(headline)}</h3><ul class="faq">${rows}</ul>`;
}

export function renderEditDialog(item: ReviewItem): string {
  return `
  <form method="dialog" data-edit-form="${item.id}">
    <h3>Edit question</h3>
    <textarea name="edited_text" rows="3">${escapeHtml(displayText(item))}</textarea>
    <menu>
      <button value="cancel">Cancel</button>
      <button value="save" class="primary">Save &amp; approve</button>
    </menu>
  </form>`;
}

export function renderNotice(state: ViewState): string {
  return state.notice ? `<div class="notice">${escapeHtml(state.notice)}</div>` : "";
}
