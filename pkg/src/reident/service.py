"""HTTP service over a persisted re-identification index.

Read path: every request takes one reference to the current immutable index
snapshot and answers entirely from it. Reload (POST /api/reload) re-reads
the index file and swaps the reference, so concurrent queries see either
the old or the new index, never a mixture.
"""

from __future__ import annotations

import logging

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .errors import BadQueryError, UnknownTrackError
from .reid_index import (
    DEFAULT_SEARCH_LIMIT,
    ReidIndex,
    SearchQuery,
    TrackEntry,
    load_index,
    search,
    track_detail,
)

log = logging.getLogger(__name__)


class IndexHolder:
    """Mutable cell holding the current index snapshot."""

    def __init__(self, path: str):
        self.path = path
        self.index: ReidIndex = load_index(path)

    def reload(self) -> ReidIndex:
        # Load fully before swapping; reference assignment is atomic.
        fresh = load_index(self.path)
        self.index = fresh
        log.info("index reloaded: %d tracks", fresh.track_count)
        return fresh


def _entry_summary(entry: TrackEntry) -> dict:
    d = {
        "trackId": entry.track_id,
        "recordId": entry.record_id,
        "predictedMake": entry.predicted_make,
        "predictedModel": entry.predicted_model,
        "shapeScore": entry.shape_score,
    }
    if entry.color_name is not None:
        d["colorName"] = entry.color_name
        d["colorScore"] = entry.color_score
    return d


def _parse_float(raw: str, name: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise BadQueryError(f"{name} must be a number, got {raw!r}") from None


def _parse_int(raw: str, name: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise BadQueryError(f"{name} must be an integer, got {raw!r}") from None


def create_app(holder: IndexHolder, default_min_score: float = 0.0) -> FastAPI:
    app = FastAPI(title="reident", docs_url=None, redoc_url=None)

    @app.exception_handler(BadQueryError)
    async def _bad_query(_req: Request, exc: BadQueryError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"code": "BadQuery", "message": str(exc)})

    @app.exception_handler(UnknownTrackError)
    async def _unknown_track(_req: Request, exc: UnknownTrackError) -> JSONResponse:
        return JSONResponse(
            status_code=404, content={"code": "UnknownTrack", "message": str(exc)}
        )

    @app.get("/api/search")
    async def api_search(
        make: str | None = None,
        model: str | None = None,
        color: str | None = None,
        min_score: str | None = None,
        limit: str | None = None,
    ) -> dict:
        query = SearchQuery(
            make=make,
            model=model,
            color=color,
            min_score=(
                default_min_score if min_score is None else _parse_float(min_score, "min_score")
            ),
            limit=DEFAULT_SEARCH_LIMIT if limit is None else _parse_int(limit, "limit"),
        )
        entries = search(holder.index, query)
        return {"entries": [_entry_summary(e) for e in entries]}

    @app.get("/api/track/{track_id}")
    async def api_track(track_id: str) -> dict:
        entry = track_detail(holder.index, track_id)
        return {
            "trackId": entry.track_id,
            "bestShotId": entry.record_id,
            "predictedMake": entry.predicted_make,
            "predictedModel": entry.predicted_model,
            "shapeScore": entry.shape_score,
            "members": [
                {"id": m.id, "frame": m.frame, "quality": m.quality} for m in entry.members
            ],
        }

    @app.get("/api/meta")
    async def api_meta() -> dict:
        snapshot = holder.index
        return {
            "galleryCount": snapshot.gallery_count,
            "trackCount": snapshot.track_count,
            "headVariant": snapshot.head_variant,
            "dimension": snapshot.dimension,
        }

    @app.post("/api/reload")
    async def api_reload() -> dict:
        fresh = holder.reload()
        return {"trackCount": fresh.track_count, "galleryCount": fresh.gallery_count}

    return app


def mount_ui(app: FastAPI, ui_dir: str) -> None:
    """Serve a built static frontend from `ui_dir` at the root path."""
    from fastapi.staticfiles import StaticFiles

    app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")


def run_service(
    index_path: str,
    port: int = 8000,
    host: str = "127.0.0.1",
    default_min_score: float = 0.0,
    ui_dir: str | None = None,
) -> None:
    import uvicorn

    holder = IndexHolder(index_path)
    app = create_app(holder, default_min_score=default_min_score)
    if ui_dir is not None:
        mount_ui(app, ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
