// Integration tests against the real review service: the four triage
// actions, illegal-action handling, and two-session conflict surfacing,
// all through the same client/state/render modules the dashboard uses.

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, ConflictError } from "../src/api.js";
import { enabledActions, isLegal } from "../src/legality.js";
import { applyConflict, applyTransitionSuccess, initialState, withItems } from "../src/state.js";
import { renderQueue } from "../src/render.js";
import type { HistoryEntry, ReviewItem } from "../src/types.js";
import { startServer, type LiveServer } from "./server.js";

let server: LiveServer;
let client: ApiClient;

function pipelineResult(texts: string[], paragraphId: string) {
  return {
    paragraph_id: paragraphId,
    ranked: texts.map((text, i) => ({
      text,
      code: { phrase: "vaccine push", source: "keyword", salience: 1.0, origin_offsets: null },
      qa: { answer_span: "", confidence: 0.9 - i * 0.05 },
      answerable: true,
      stage: "passed_secondary",
      discard_reason: null,
    })),
    discarded: [],
    generated_count: texts.length,
    config_snapshot: {},
  };
}

async function seedItem(text: string, paragraphId: string): Promise<ReviewItem> {
  const body = await client.ingest({
    article_ref: { url: "https://example.com/a", headline: "Vaccine push", domain: "health" },
    results: [pipelineResult([text], paragraphId)],
    paragraphs: { [paragraphId]: "The vaccine push accelerated across the city." },
  });
  expect(body.created).toHaveLength(1);
  return client.getItem(body.created[0]);
}

let seedCounter = 0;
async function freshItem(): Promise<ReviewItem> {
  seedCounter += 1;
  return seedItem(`Live question ${seedCounter}?`, `live-p${seedCounter}`);
}

beforeAll(async () => {
  server = await startServer();
  client = new ApiClient(server.baseUrl);
});

afterAll(() => {
  server?.stop();
});

describe("triage round-trips against the live API", () => {
  it("approve produces the correct server state and history entry", async () => {
    const item = await freshItem();
    const updated = await client.transition(item.id, {
      action: "approve",
      actor: "alice",
      expected_version: item.version,
    });
    expect(updated.state).toBe("approved");
    expect(updated.version).toBe(item.version + 1);
    const history = await client.historyOf(item.id);
    const last = history.history.at(-1) as HistoryEntry;
    expect(last.action).toBe("approve");
    expect(last.actor).toBe("alice");
    expect(last.from).toBe("pending");
    expect(last.to).toBe("approved");
  });

  it("reject produces the correct server state and history entry", async () => {
    const item = await freshItem();
    const updated = await client.transition(item.id, {
      action: "reject",
      actor: "bob",
      expected_version: item.version,
    });
    expect(updated.state).toBe("rejected");
    const history = await client.historyOf(item.id);
    expect((history.history.at(-1) as HistoryEntry).action).toBe("reject");
  });

  it("edit+approve records both original and edited text", async () => {
    const item = await freshItem();
    const updated = await client.transition(item.id, {
      action: "edit+approve",
      actor: "carol",
      edited_text: "A sharper live question?",
      expected_version: item.version,
    });
    expect(updated.state).toBe("approved");
    expect(updated.edited_text).toBe("A sharper live question?");
    const history = await client.historyOf(item.id);
    const last = history.history.at(-1) as HistoryEntry;
    expect(last.action).toBe("edit+approve");
    expect(last.original_text).toBe(item.candidate.text);
    expect(last.edited_text).toBe("A sharper live question?");
  });

  it("publish moves the question into the FAQ corpus", async () => {
    const item = await freshItem();
    await client.transition(item.id, { action: "approve", actor: "dave" });
    const published = await client.transition(item.id, { action: "publish", actor: "dave" });
    expect(published.state).toBe("published");

    const faq = await client.faqList();
    const questions = faq.results.map((r) => r.entry.question);
    expect(questions).toContain(item.candidate.text);

    const hits = await client.faqSearch(item.candidate.text);
    expect(hits.results.length).toBeGreaterThan(0);
    expect(hits.results[0].entry.item_id).toBe(item.id);
  });
});

describe("illegal actions", () => {
  it("are never offered by the UI and are rejected by the server if forced", async () => {
    const item = await freshItem();
    await client.transition(item.id, { action: "reject", actor: "erin" });
    const rejected = await client.getItem(item.id);

    // unreachable in the UI: no enabled action on a rejected item
    expect(enabledActions(rejected.state)).toEqual([]);
    expect(isLegal(rejected.state, "publish")).toBe(false);

    // forced anyway: the server refuses with a typed 409
    const err = await client
      .transition(item.id, { action: "publish", actor: "erin" })
      .catch((e) => e);
    expect(err).toBeInstanceOf(ConflictError);
    expect(err.kind).toBe("illegal_transition");
    expect((await client.getItem(item.id)).state).toBe("rejected");
  });

  it("pending items never offer publish or unpublish", async () => {
    const item = await freshItem();
    expect(enabledActions(item.state)).toEqual(["approve", "edit+approve", "reject"]);
  });
});

describe("two sessions on one item", () => {
  it("yield one success and one visible conflict banner", async () => {
    const item = await freshItem();
    const sessionA = new ApiClient(server.baseUrl);
    const sessionB = new ApiClient(server.baseUrl);

    // both sessions loaded the item at version 0
    let stateB = withItems(initialState(), [item]);

    const fromA = await sessionA.transition(item.id, {
      action: "approve",
      actor: "editor-a",
      expected_version: item.version,
    });
    expect(fromA.state).toBe("approved");

    const errB = await sessionB
      .transition(item.id, {
        action: "reject",
        actor: "editor-b",
        expected_version: item.version,
      })
      .catch((e) => e);
    expect(errB).toBeInstanceOf(ConflictError);
    expect(errB.kind).toBe("version_conflict");
    expect(errB.currentVersion).toBe(1);

    // session B reacts the way the dashboard does: refresh + banner
    const refreshed = await sessionB.getItem(item.id);
    stateB = applyConflict(stateB, refreshed);
    const html = renderQueue(stateB);
    expect(html).toContain("conflict-banner");
    expect(html).toContain("changed by another editor");

    // retrying with the fresh version succeeds and clears the banner
    const retried = await sessionB.transition(item.id, {
      action: "reject",
      actor: "editor-b",
      expected_version: refreshed.version,
    });
    stateB = applyTransitionSuccess(stateB, retried);
    expect(retried.state).toBe("rejected");
    expect(renderQueue(stateB)).not.toContain("conflict-banner");
  });
});
