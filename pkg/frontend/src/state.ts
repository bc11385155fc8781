// View state for the triage queue. Pure transition functions so the whole
// flow is unit-testable without a DOM: the renderer consumes this state and
// event handlers feed server responses (or conflicts) back into it.

import type { ReviewItem, ReviewState } from "./types.js";

export interface ViewState {
  tab: ReviewState;
  items: ReviewItem[];
  focusIndex: number;
  /** item id -> banner message, e.g. after a stale-version transition */
  conflicts: Record<string, string>;
  /** item id currently in the edit dialog, if any */
  editing: string | null;
  notice: string | null;
}

export function initialState(tab: ReviewState = "pending"): ViewState {
  return { tab, items: [], focusIndex: 0, conflicts: {}, editing: null, notice: null };
}

export function withItems(state: ViewState, items: ReviewItem[]): ViewState {
  const focusIndex = Math.min(state.focusIndex, Math.max(0, items.length - 1));
  return { ...state, items, focusIndex };
}

export function switchTab(state: ViewState, tab: ReviewState): ViewState {
  return { ...state, tab, items: [], focusIndex: 0, editing: null };
}

export function focusedItem(state: ViewState): ReviewItem | undefined {
  return state.items[state.focusIndex];
}

export function moveFocus(state: ViewState, delta: number): ViewState {
  if (!state.items.length) return state;
  const focusIndex = Math.min(Math.max(state.focusIndex + delta, 0), state.items.length - 1);
  return { ...state, focusIndex };
}

/** A transition succeeded: reconcile against the server's item. */
export function applyTransitionSuccess(state: ViewState, item: ReviewItem): ViewState {
  const conflicts = { ...state.conflicts };
  delete conflicts[item.id];
  const items = item.state === state.tab
    ? state.items.map((i) => (i.id === item.id ? item : i))
    : state.items.filter((i) => i.id !== item.id);
  const focusIndex = Math.min(state.focusIndex, Math.max(0, items.length - 1));
  return {
    ...state,
    items,
    focusIndex,
    conflicts,
    editing: null,
    notice: `${item.id}: now ${item.state}`,
  };
}

/** A transition hit a stale version: keep the refreshed item, flag it. */
export function applyConflict(
  state: ViewState,
  refreshed: ReviewItem,
  message = "changed by another editor",
): ViewState {
  const items = state.items.map((i) => (i.id === refreshed.id ? refreshed : i));
  return {
    ...state,
    items,
    conflicts: { ...state.conflicts, [refreshed.id]: message },
  };
}

export function clearConflict(state: ViewState, itemId: string): ViewState {
  const conflicts = { ...state.conflicts };
  delete conflicts[itemId];
  return { ...state, conflicts };
}

export function openEditor(state: ViewState, itemId: string): ViewState {
  return { ...state, editing: itemId };
}

export function closeEditor(state: ViewState): ViewState {
  return { ...state, editing: null };
}
