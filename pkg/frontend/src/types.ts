// Mirrors of the review service's JSON shapes.

export type ReviewState = "pending" | "approved" | "rejected" | "published";

export type ReviewAction =
  | "approve"
  | "reject"
  | "edit+approve"
  | "publish"
  | "unpublish";

export interface ArticleRef {
  url: string;
  headline: string;
  domain: string;
}

export interface ControlCode {
  phrase: string;
  source: string;
  salience: number;
  origin_offsets: [number, number] | null;
}

export interface QaScore {
  answer_span: string;
  confidence: number;
}

export interface CandidateQuestion {
  text: string;
  code: ControlCode | null;
  qa: QaScore | null;
  answerable: boolean | null;
  stage: string;
  discard_reason: string | null;
}

export interface HistoryEntry {
  ts: string;
  actor: string;
  action: ReviewAction;
  from: ReviewState;
  to: ReviewState;
  original_text?: string;
  edited_text?: string;
}

export interface ReviewItem {
  id: string;
  article_ref: ArticleRef;
  paragraph_id: string;
  candidate: CandidateQuestion;
  paragraph_text: string;
  state: ReviewState;
  edited_text: string | null;
  history: HistoryEntry[];
  version: number;
}

export interface FaqEntry {
  item_id: string;
  question: string;
  paragraph: string;
  article_ref: ArticleRef;
  published_at: string;
  published_seq: number;
}

export interface TransitionRequest {
  action: ReviewAction;
  actor: string;
  edited_text?: string;
  expected_version?: number;
}

export function displayText(item: ReviewItem): string {
  return item.edited_text ?? item.candidate.text;
}
