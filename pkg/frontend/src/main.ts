// Dashboard bootstrap: fetch the queue, render, and translate clicks and
// hotkeys into transitions. Conflicts refresh the item and show a banner;
// nothing is auto-merged.

import { ApiClient, ConflictError } from "./api.js";
import { HOTKEYS, isLegal } from "./legality.js";
import {
  applyConflict,
  applyTransitionSuccess,
  closeEditor,
  focusedItem,
  initialState,
  moveFocus,
  openEditor,
  switchTab,
  withItems,
  type ViewState,
} from "./state.js";
import { renderEditDialog, renderFaqPanel, renderNotice, renderQueue, renderTabs } from "./render.js";
import type { ReviewAction, ReviewState } from "./types.js";

const api = new ApiClient("");
const actor = localStorage.getItem("editor-name") ?? "editor";

let state: ViewState = initialState();

const tabsEl = document.getElementById("tabs")!;
const queueEl = document.getElementById("queue")!;
const noticeEl = document.getElementById("notice")!;
const faqEl = document.getElementById("faq-panel")!;
const dialogEl = document.getElementById("edit-dialog") as HTMLDialogElement;

function render(): void {
  tabsEl.innerHTML = renderTabs(state);
  queueEl.innerHTML = renderQueue(state);
  noticeEl.innerHTML = renderNotice(state);
}

async function refresh(): Promise<void> {
  const listing = await api.listReview({ state: state.tab });
  state = withItems(state, listing.items);
  render();
  void refreshFaqPanel();
}

async function refreshFaqPanel(): Promise<void> {
  const item = focusedItem(state);
  const listing = await api.faqList();
  const entries = item
    ? listing.results
      .map((r) => r.entry)
      .filter((e) => e.article_ref.url === item.article_ref.url)
    : listing.results.map((r) => r.entry);
  faqEl.innerHTML = renderFaqPanel(entries, item?.article_ref.headline ?? "all articles");
}

async function act(itemId: string, action: ReviewAction, editedText?: string): Promise<void> {
  const item = state.items.find((i) => i.id === itemId);
  if (!item || !isLegal(item.state, action)) return;
  try {
    const updated = await api.transition(itemId, {
      action,
      actor,
      edited_text: editedText,
      expected_version: item.version,
    });
    state = applyTransitionSuccess(state, updated);
  } catch (err) {
    if (err instanceof ConflictError && err.kind === "version_conflict") {
      const refreshed = await api.getItem(itemId);
      state = applyConflict(state, refreshed);
    } else {
      state = { ...state, notice: String(err) };
    }
  }
  render();
  void refreshFaqPanel();
}

function startEdit(itemId: string): void {
  const item = state.items.find((i) => i.id === itemId);
  if (!item || !isLegal(item.state, "edit+approve")) return;
  state = openEditor(state, itemId);
  dialogEl.innerHTML = renderEditDialog(item);
  dialogEl.returnValue = "";
  dialogEl.showModal();
}

tabsEl.addEventListener("click", (event) => {
  const target = event.target as HTMLElement;
  const tab = target.dataset.tab as ReviewState | undefined;
  if (!tab) return;
  state = switchTab(state, tab);
  void refresh();
});

queueEl.addEventListener("click", (event) => {
  const target = event.target as HTMLElement;
  const action = target.dataset.action as ReviewAction | undefined;
  const itemId = target.dataset.item;
  if (!action || !itemId) return;
  if (action === "edit+approve") {
    startEdit(itemId);
  } else {
    void act(itemId, action);
  }
});

dialogEl.addEventListener("close", () => {
  const editing = state.editing;
  state = closeEditor(state);
  if (dialogEl.returnValue !== "save" || !editing) return;
  const textarea = dialogEl.querySelector("textarea");
  const edited = textarea?.value.trim();
  if (edited) void act(editing, "edit+approve", edited);
});

document.addEventListener("keydown", (event) => {
  if (dialogEl.open || event.metaKey || event.ctrlKey || event.altKey) return;
  if (event.key === "j" || event.key === "ArrowDown") {
    state = moveFocus(state, +1);
    render();
    return;
  }
  if (event.key === "k" || event.key === "ArrowUp") {
    state = moveFocus(state, -1);
    render();
    return;
  }
  const action = HOTKEYS[event.key];
  const item = focusedItem(state);
  if (!action || !item) return;
  if (action === "edit+approve") {
    startEdit(item.id);
  } else {
    void act(item.id, action);
  }
});

void refresh();
