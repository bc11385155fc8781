import { describe, expect, it } from "vitest";

import {
  applyConflict,
  applyTransitionSuccess,
  clearConflict,
  focusedItem,
  initialState,
  moveFocus,
  switchTab,
  withItems,
} from "../src/state.js";
import { makeItem } from "./fixtures.js";

describe("view state", () => {
  it("starts on the pending tab with no conflicts", () => {
    const state = initialState();
    expect(state.tab).toBe("pending");
    expect(state.conflicts).toEqual({});
  });

  it("a successful transition removes the item from a tab it left", () => {
    const a = makeItem();
    const b = makeItem();
    let state = withItems(initialState(), [a, b]);
    state = applyTransitionSuccess(state, { ...a, state: "approved", version: 1 });
    expect(state.items.map((i) => i.id)).toEqual([b.id]);
    expect(state.notice).toContain("approved");
  });

  it("a successful transition updates in place when the state matches the tab", () => {
    const a = makeItem({ state: "approved" });
    let state = withItems(initialState("approved"), [a]);
    const edited = { ...a, edited_text: "Edited?", version: 1 };
    state = applyTransitionSuccess(state, edited);
    expect(state.items[0].edited_text).toBe("Edited?");
    expect(state.items[0].version).toBe(1);
  });

  it("a conflict flags the item and keeps the refreshed copy", () => {
    const a = makeItem();
    let state = withItems(initialState(), [a]);
    const refreshed = { ...a, state: "approved" as const, version: 1 };
    state = applyConflict(state, refreshed);
    expect(state.conflicts[a.id]).toBe("changed by another editor");
    expect(state.items[0].version).toBe(1);
  });

  it("success after a conflict clears the banner", () => {
    const a = makeItem();
    let state = withItems(initialState(), [a]);
    state = applyConflict(state, a);
    state = applyTransitionSuccess(state, { ...a, state: "rejected", version: 2 });
    expect(state.conflicts).toEqual({});
  });

  it("clearConflict drops a single banner", () => {
    const a = makeItem();
    let state = withItems(initialState(), [a]);
    state = applyConflict(state, a, "boom");
    state = clearConflict(state, a.id);
    expect(state.conflicts).toEqual({});
  });

  it("focus moves within bounds", () => {
    const items = [makeItem(), makeItem(), makeItem()];
    let state = withItems(initialState(), items);
    state = moveFocus(state, +1);
    state = moveFocus(state, +1);
    state = moveFocus(state, +5);
    expect(state.focusIndex).toBe(2);
    expect(focusedItem(state)?.id).toBe(items[2].id);
    state = moveFocus(state, -10);
    expect(state.focusIndex).toBe(0);
  });

  it("switching tabs clears items and focus", () => {
    let state = withItems(initialState(), [makeItem()]);
    state = switchTab(state, "published");
    expect(state.tab).toBe("published");
    expect(state.items).toEqual([]);
    expect(state.focusIndex).toBe(0);
  });
});
