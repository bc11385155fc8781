// Client-side mirror of the server's transition table. The server stays the
// authority; this only decides which buttons are rendered enabled, so the UI
// can never construct a request the server's state machine would reject.

import type { ReviewAction, ReviewState } from "./types.js";

export const LEGAL_ACTIONS: Record<ReviewState, ReviewAction[]> = {
  pending: ["approve", "edit+approve", "reject"],
  approved: ["publish", "reject"],
  rejected: [],
  published: ["unpublish"],
};

export const ALL_ACTIONS: ReviewAction[] = [
  "approve",
  "reject",
  "edit+approve",
  "publish",
  "unpublish",
];

export function enabledActions(state: ReviewState): ReviewAction[] {
  return LEGAL_ACTIONS[state] ?? [];
}

export function isLegal(state: ReviewState, action: ReviewAction): boolean {
  return enabledActions(state).includes(action);
}

export const HOTKEYS: Record<string, ReviewAction> = {
  a: "approve",
  r: "reject",
  e: "edit+approve",
  p: "publish",
  u: "unpublish",
};
