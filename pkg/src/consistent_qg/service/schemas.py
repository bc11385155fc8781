"""Pydantic request/response models for the review service API.

Every response carries a `version`: per-item endpoints return the item's
optimistic-concurrency version, collection endpoints return the store's
event sequence number.
"""

from __future__ import annotations

from pydantic import BaseModel, Field


class ArticleRef(BaseModel):
    url: str = ""
    headline: str = ""
    domain: str = ""


class IngestRequest(BaseModel):
    article_ref: ArticleRef
    results: list[dict]
    paragraphs: dict[str, str] = Field(default_factory=dict)


class IngestResponse(BaseModel):
    created: list[str]
    skipped: int
    version: int


class TransitionRequest(BaseModel):
    action: str
    actor: str
    edited_text: str | None = None
    expected_version: int | None = None


class ItemResponse(BaseModel):
    item: dict
    version: int


class ReviewListResponse(BaseModel):
    items: list[dict]
    total: int
    version: int


class HistoryResponse(BaseModel):
    id: str
    history: list[dict]
    version: int


class FaqMatch(BaseModel):
    entry: dict
    similarity: float


class FaqSearchResponse(BaseModel):
    results: list[FaqMatch]
    version: int


class HealthResponse(BaseModel):
    status: str
    version: int


class ErrorResponse(BaseModel):
    error: str
    detail: str = ""
    current_version: int | None = None
