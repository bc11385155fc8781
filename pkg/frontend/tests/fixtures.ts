import type { ReviewItem, ReviewState } from "../src/types.js";

let serial = 0;

export function makeItem(overrides: Partial<ReviewItem> = {}): ReviewItem {
  serial += 1;
  return {
    id: `item${serial}`,
    article_ref: {
      url: "https://example.com/a",
      headline: "Vaccine push",
      domain: "health",
    },
    paragraph_id: `p${serial}`,
    candidate: {
      text: `Generated question ${serial}?`,
      code: { phrase: "vaccine push", source: "keyword", salience: 1.0, origin_offsets: null },
      qa: { answer_span: "", confidence: 0.8 },
      answerable: true,
      stage: "passed_secondary",
      discard_reason: null,
    },
    paragraph_text: "The vaccine push accelerated across the city.",
    state: "pending" as ReviewState,
    edited_text: null,
    history: [],
    version: 0,
    ...overrides,
  };
}
