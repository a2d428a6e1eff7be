"""FastAPI wiring for the rating service.

GET /task?rater=ID   -> blind task payload or an exhaustion envelope
POST /rating         -> 200 ack | 400 invalid | 409 conflicting duplicate
GET /report          -> per-source aggregate in the two-row table layout
GET /health          -> liveness plus pool/rating counts
Static UI files, when configured, are served at /.
"""

from __future__ import annotations

import os

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .schemas import (
    AggregatePayload,
    ExhaustedPayload,
    HealthPayload,
    RatingAck,
    RatingSubmission,
    SourceAggregate,
    TaskPayload,
)
from .store import (
    ConflictError,
    Exhausted,
    PoolEmptyError,
    RatingStore,
    UnknownTaskError,
    render_report,
)


def create_app(store: RatingStore, static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="storyteller ratings")

    @app.exception_handler(RequestValidationError)
    async def invalid_request(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    @app.get("/health", response_model=HealthPayload)
    def health():
        return HealthPayload(tasks=len(store.tasks), ratings=store.rating_count())

    @app.get("/task", response_model=TaskPayload | ExhaustedPayload)
    def next_task(rater: str):
        if not rater:
            raise HTTPException(status_code=400, detail="rater id must be non-empty")
        try:
            result = store.next_task(rater)
        except PoolEmptyError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None
        if isinstance(result, Exhausted):
            return ExhaustedPayload(reason=result.reason)
        return TaskPayload(
            task_id=result.task_id,
            story_id=result.story_id,
            segments=list(result.segments),
        )

    @app.post("/rating", response_model=RatingAck)
    def submit_rating(submission: RatingSubmission):
        try:
            store.submit(submission.task_id, submission.rater_id, submission.scores)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        except UnknownTaskError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        except ConflictError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None
        return RatingAck(task_id=submission.task_id, rater_id=submission.rater_id)

    @app.get("/report", response_model=AggregatePayload)
    def report():
        empty, sources = store.aggregate()
        return AggregatePayload(
            empty=empty,
            sources={k: SourceAggregate(**v) for k, v in sources.items()},
            rendered="" if empty else render_report(sources),
        )

    if static_dir and os.path.isdir(static_dir):
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
    return app
