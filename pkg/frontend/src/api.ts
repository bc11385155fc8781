// Typed client for the review service HTTP API. Every mutation carries the
// item version the client last saw; a stale version surfaces as a
// ConflictError rather than a silent retry.

import type {
  FaqEntry,
  ReviewItem,
  ReviewState,
  TransitionRequest,
} from "./types.js";

export class ApiError extends Error {
  constructor(message: string, readonly status: number, readonly detail: string = "") {
    super(message);
  }
}

export class ConflictError extends ApiError {
  constructor(
    readonly kind: "version_conflict" | "illegal_transition",
    detail: string,
    readonly currentVersion: number | null,
  ) {
    super(`conflict: ${kind}`, 409, detail);
  }
}

interface ListResponse {
  items: ReviewItem[];
  total: number;
  version: number;
}

interface FaqSearchResponse {
  results: { entry: FaqEntry; similarity: number }[];
  version: number;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly token?: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private headers(): Record<string, string> {
    const headers: Record<string, string> = { "content-type": "application/json" };
    if (this.token) headers["authorization"] = `Bearer ${this.token}`;
    return headers;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (response.ok) {
      return (await response.json()) as T;
    }
    let body: { error?: string; detail?: string; current_version?: number | null } = {};
    try {
      body = await response.json();
    } catch {
      // non-JSON error body; fall through with the status alone
    }
    if (response.status === 409 && body.error === "version_conflict") {
      throw new ConflictError("version_conflict", body.detail ?? "", body.current_version ?? null);
    }
    if (response.status === 409 && body.error === "illegal_transition") {
      throw new ConflictError("illegal_transition", body.detail ?? "", null);
    }
    throw new ApiError(body.error ?? `HTTP ${response.status}`, response.status, body.detail ?? "");
  }

  health(): Promise<{ status: string; version: number }> {
    return this.request("/v1/health");
  }

  listReview(params: { state?: ReviewState; domain?: string; article?: string } = {}):
    Promise<ListResponse> {
    const query = new URLSearchParams();
    if (params.state) query.set("state", params.state);
    if (params.domain) query.set("domain", params.domain);
    if (params.article) query.set("article", params.article);
    const suffix = query.size ? `?${query.toString()}` : "";
    return this.request(`/v1/review${suffix}`);
  }

  async getItem(id: string): Promise<ReviewItem> {
    const body = await this.request<{ item: ReviewItem; version: number }>(
      `/v1/items/${id}`,
    );
    return body.item;
  }

  historyOf(id: string): Promise<{ id: string; history: unknown[]; version: number }> {
    return this.request(`/v1/items/${id}/history`);
  }

  async transition(id: string, req: TransitionRequest): Promise<ReviewItem> {
    const body = await this.request<{ item: ReviewItem; version: number }>(
      `/v1/review/${id}/transition`,
      { method: "POST", headers: this.headers(), body: JSON.stringify(req) },
    );
    return body.item;
  }

  faqSearch(q: string, topK = 10): Promise<FaqSearchResponse> {
    const query = new URLSearchParams({ q, top_k: String(topK) });
    return this.request(`/v1/faq/search?${query.toString()}`);
  }

  faqList(): Promise<FaqSearchResponse> {
    return this.request("/v1/faq");
  }

  ingest(payload: unknown): Promise<{ created: string[]; skipped: number; version: number }> {
    return this.request("/v1/ingest", {
      method: "POST",
      headers: this.headers(),
      body: JSON.stringify(payload),
    });
  }
}
