"""HTTP API for the review/publish workflow and FAQ search."""

from __future__ import annotations

from pathlib import Path

from fastapi import Depends, FastAPI, HTTPException, Query, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from ..errors import ConflictError, InputError, StateError
from ..pipeline import PipelineResult
from ..store import ReviewStore, faq_search
from . import schemas


def create_app(store: ReviewStore, auth_token: str | None = None,
               ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="review service", version="0.1.0")
    app.state.store = store

    def require_auth(request: Request) -> None:
        if auth_token is None:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {auth_token}":
            raise HTTPException(status_code=401, detail="missing or invalid bearer token")

    @app.exception_handler(ConflictError)
    async def conflict_handler(_, exc: ConflictError):
        return JSONResponse(status_code=409, content={
            "error": "version_conflict",
            "detail": str(exc),
            "current_version": exc.current_version,
        })

    @app.exception_handler(StateError)
    async def state_handler(_, exc: StateError):
        return JSONResponse(status_code=409, content={
            "error": "illegal_transition",
            "detail": str(exc),
        })

    @app.exception_handler(InputError)
    async def input_handler(_, exc: InputError):
        return JSONResponse(status_code=422, content={
            "error": "invalid_input",
            "detail": str(exc),
        })

    @app.exception_handler(KeyError)
    async def missing_handler(_, exc: KeyError):
        return JSONResponse(status_code=404, content={
            "error": "not_found",
            "detail": str(exc),
        })

    @app.get("/v1/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=store.version)

    @app.get("/v1/review", response_model=schemas.ReviewListResponse)
    def list_review(
        state: str | None = Query(default=None),
        domain: str | None = Query(default=None),
        article: str | None = Query(default=None),
        limit: int = Query(default=100, ge=1, le=1000),
        offset: int = Query(default=0, ge=0),
    ):
        items = store.list_items(state=state, domain=domain, article_url=article)
        page = items[offset:offset + limit]
        return schemas.ReviewListResponse(
            items=[item.to_dict() for item in page],
            total=len(items),
            version=store.version,
        )

    @app.get("/v1/items/{item_id}", response_model=schemas.ItemResponse)
    def get_item(item_id: str):
        item = store.get(item_id)
        return schemas.ItemResponse(item=item.to_dict(), version=item.version)

    @app.get("/v1/items/{item_id}/history", response_model=schemas.HistoryResponse)
    def get_history(item_id: str):
        item = store.get(item_id)
        return schemas.HistoryResponse(id=item.id, history=item.history,
                                       version=item.version)

    @app.post("/v1/review/{item_id}/transition", response_model=schemas.ItemResponse,
              dependencies=[Depends(require_auth)])
    def transition(item_id: str, req: schemas.TransitionRequest):
        item = store.transition(
            item_id,
            action=req.action,
            actor=req.actor,
            edited_text=req.edited_text,
            expected_version=req.expected_version,
        )
        return schemas.ItemResponse(item=item.to_dict(), version=item.version)

    @app.post("/v1/ingest", response_model=schemas.IngestResponse,
              dependencies=[Depends(require_auth)])
    def ingest(req: schemas.IngestRequest):
        try:
            results = [PipelineResult.from_dict(r) for r in req.results]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed pipeline result payload: {exc}") from exc
        total_ranked = sum(len(r.ranked) for r in results)
        created = store.ingest(results, req.article_ref.model_dump(), req.paragraphs)
        return schemas.IngestResponse(
            created=[item.id for item in created],
            skipped=total_ranked - len(created),
            version=store.version,
        )

    @app.get("/v1/faq/search", response_model=schemas.FaqSearchResponse)
    def search(
        q: str = Query(min_length=1),
        top_k: int = Query(default=10, ge=1, le=100),
        min_sim: float = Query(default=0.35, ge=0.0, le=1.0),
    ):
        matches = faq_search(q, store.faq_entries(), top_k=top_k, min_sim=min_sim)
        return schemas.FaqSearchResponse(
            results=[
                schemas.FaqMatch(entry=entry.to_dict(), similarity=score)
                for entry, score in matches
            ],
            version=store.version,
        )

    @app.get("/v1/faq", response_model=schemas.FaqSearchResponse)
    def faq_list():
        return schemas.FaqSearchResponse(
            results=[
                schemas.FaqMatch(entry=entry.to_dict(), similarity=1.0)
                for entry in store.faq_entries()
            ],
            version=store.version,
        )

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
