"""HTTP facade over the triage state machine.

All mutation goes through POST endpoints guarded by a shared token in the
X-Triage-Token header; reads are open. The service owns no state of its
own: every handler delegates to a TriageState, so anything achievable over
HTTP is achievable (and replayable) through the decision log.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.staticfiles import StaticFiles

from .prompts import PromptError, PromptRecord, promote
from .schema import ImageRecord, ValidationError
from .store import StoreError
from .triage import (
    ConflictingVerdictError,
    ReviewDecision,
    TriageError,
    TriageState,
    UnknownImageError,
)

TOKEN_HEADER = "X-Triage-Token"


def record_payload(record: ImageRecord, status: str) -> dict:
    return {
        "id": record.id,
        "label": record.label,
        "provenance": record.provenance,
        "path": record.path,
        "width": record.width,
        "height": record.height,
        "prompt_id": record.prompt_id,
        "city": record.city_keyword,
        "status": status,
    }


def prompt_payload(prompt: PromptRecord) -> dict:
    return {
        "id": prompt.id,
        "material": prompt.material,
        "text": prompt.text,
        "generated": prompt.generated_count,
        "accepted": prompt.accepted_count,
        "rejected": prompt.rejected_count,
        "batting_average": prompt.batting_average,
        "promoted": prompt.promoted,
    }


def create_app(state: TriageState, token: str,
               static_dir: Optional[str | Path] = None) -> FastAPI:
    if not token:
        raise ValidationError("the review service requires a non-empty token")
    app = FastAPI(title="cadastre triage", docs_url=None, redoc_url=None)

    def require_token(request: Request) -> None:
        supplied = request.headers.get(TOKEN_HEADER)
        if supplied != token:
            raise HTTPException(status_code=401, detail="missing or bad token")

    @app.get("/api/queue/next")
    def queue_next(label: Optional[str] = None):
        try:
            record = state.next_pending(label)
        except ValidationError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        if record is None:
            return Response(status_code=204)
        return record_payload(record, "pending")

    @app.get("/api/image/{image_id}")
    def image_bytes(image_id: str):
        try:
            record = state.current_record(image_id)
            data = state.store.read_image(record)
        except (UnknownImageError, StoreError) as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None
        return Response(content=data, media_type="image/png")

    @app.post("/api/review")
    def review(payload: dict, request: Request):
        require_token(request)
        missing = [k for k in ("image_id", "verdict", "reviewer")
                   if k not in payload]
        if missing:
            raise HTTPException(
                status_code=400, detail=f"missing fields: {', '.join(missing)}"
            )
        try:
            decision = ReviewDecision(
                image_id=str(payload["image_id"]),
                verdict=str(payload["verdict"]),
                reviewer=str(payload["reviewer"]),
            )
            stats = state.submit_review(decision)
        except ConflictingVerdictError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None
        except UnknownImageError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None
        except TriageError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return stats.to_dict()

    @app.get("/api/stats")
    def stats():
        return state.stats().to_dict()

    @app.get("/api/prompts")
    def prompts():
        return {"prompts": [prompt_payload(p) for p in state.pool]}

    @app.post("/api/prompts/promote")
    def promote_prompts(payload: dict, request: Request):
        require_token(request)
        min_samples = payload.get("min_samples", 5)
        threshold = payload.get("threshold", 0.6)
        if not isinstance(min_samples, int) or isinstance(min_samples, bool):
            raise HTTPException(status_code=400, detail="min_samples must be an integer")
        if not isinstance(threshold, (int, float)) or isinstance(threshold, bool):
            raise HTTPException(status_code=400, detail="threshold must be a number")
        try:
            promoted = promote(state.pool, min_samples=min_samples,
                               threshold=float(threshold))
        except (PromptError, ValidationError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return {
            "promoted": promoted,
            "prompts": [prompt_payload(p) for p in state.pool],
        }

    if static_dir is not None:
        static_path = Path(static_dir)
        if static_path.is_dir():
            app.mount("/", StaticFiles(directory=static_path, html=True),
                      name="ui")
    return app


def serve(state: TriageState, token: str, host: str = "127.0.0.1",
          port: int = 8321, static_dir: Optional[str | Path] = None) -> None:
    """Run the review service until interrupted."""
    import uvicorn

    app = create_app(state, token, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
