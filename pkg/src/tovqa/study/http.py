"""HTTP JSON API over the study core plus media/frontend serving.

Media files go out through single-use playback tokens; Range requests are
honored and the token is checked (and consumed) on the first byte range only,
so ordinary players can stream in chunks.
"""

import io
import os
import re
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Header, HTTPException, Request
from fastapi.responses import FileResponse, PlainTextResponse, Response, StreamingResponse

from ..stats.mos import RATING_CSV_COLUMNS
from .core import (
    PhaseError,
    StudyConfig,
    StudyService,
    TokenError,
    UnknownSession,
    ValidationFailure,
)

_RANGE_RE = re.compile(r"bytes=(\d*)-(\d*)")


def _status_for(exc: Exception) -> int:
    if isinstance(exc, ValidationFailure):
        return 422
    if isinstance(exc, (PhaseError, TokenError)):
        return 409
    if isinstance(exc, UnknownSession):
        return 404
    return 500


def build_app(
    service: StudyService,
    frontend_dir: Optional[str] = None,
) -> FastAPI:
    app = FastAPI(title="tovqa study service")
    cfg = service.config
    # ranges for a consumed token stay valid until the session moves on
    open_streams = {}

    def guard(fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except Exception as exc:  # noqa: BLE001 - mapped to http statuses
            status = _status_for(exc)
            if status == 500:
                raise
            raise HTTPException(status_code=status, detail=str(exc)) from exc

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/sessions")
    async def create_session(request: Request):
        body = await request.json()
        session = guard(
            service.create_session,
            body.get("demographics") or {},
            float(body.get("screen_diagonal") or 0.0),
        )
        out = {
            "session_id": session.session_id,
            "phase": session.phase,
            "reason": session.reason,
        }
        if session.phase == "created":
            out["screening"] = service.screening_view(session.session_id)
        return out

    @app.post("/sessions/{session_id}/screening")
    async def screening(session_id: str, request: Request):
        body = await request.json()
        session = guard(
            service.submit_screening,
            session_id,
            float(body.get("ppmm") or 0.0),
            body.get("landolt_answers") or [],
            body.get("ishihara_answers") or [],
        )
        return {"phase": session.phase, "reason": session.reason}

    @app.get("/sessions/{session_id}/assignments")
    def assignments(session_id: str):
        return guard(service.session_view, session_id)

    @app.post("/sessions/{session_id}/playback/{index}/{which}")
    def playback(session_id: str, index: int, which: str):
        token = guard(service.issue_playback, session_id, index, which)
        return {"token": token, "url": f"/media/{token}"}

    @app.post("/sessions/{session_id}/submissions")
    async def submissions(session_id: str, request: Request):
        body = await request.json()
        session = guard(
            service.record_submission,
            session_id,
            int(body.get("index", -1)),
            body.get("phase") or "",
            body.get("answers") or [],
            body.get("object_check"),
        )
        return {"phase": session.phase, "index": session.index}

    @app.get("/media/{token}")
    def media(token: str, range_header: Optional[str] = Header(None, alias="Range")):
        if token in open_streams:
            path = open_streams[token]
        else:
            path = guard(service.consume_token, token)
            if not os.path.isabs(path):
                path = os.path.join(cfg.media_root, path)
            if not os.path.exists(path):
                raise HTTPException(status_code=500, detail=f"media file missing: {path}")
            open_streams[token] = path
        size = os.path.getsize(path)
        if range_header:
            m = _RANGE_RE.match(range_header)
            if not m:
                raise HTTPException(status_code=416, detail="malformed Range header")
            start = int(m.group(1) or 0)
            end = int(m.group(2)) if m.group(2) else size - 1
            end = min(end, size - 1)
            if start > end:
                raise HTTPException(status_code=416, detail="unsatisfiable range")
            with open(path, "rb") as fh:
                fh.seek(start)
                chunk = fh.read(end - start + 1)
            return Response(
                content=chunk,
                status_code=206,
                media_type="application/octet-stream",
                headers={
                    "Content-Range": f"bytes {start}-{end}/{size}",
                    "Accept-Ranges": "bytes",
                },
            )
        def reader():
            with open(path, "rb") as fh:
                while True:
                    chunk = fh.read(1 << 16)
                    if not chunk:
                        return
                    yield chunk
        return StreamingResponse(
            reader(),
            media_type="application/octet-stream",
            headers={"Accept-Ranges": "bytes", "Content-Length": str(size)},
        )

    def _check_operator(token: Optional[str]):
        if token != cfg.operator_token:
            raise HTTPException(status_code=401, detail="operator token required")

    @app.get("/export/ratings.csv")
    def export_ratings(
        completed_only: int = 1,
        x_operator_token: Optional[str] = Header(None),
    ):
        _check_operator(x_operator_token)
        rows = service.export_ratings(completed_only=bool(completed_only))
        buf = io.StringIO()
        buf.write(",".join(RATING_CSV_COLUMNS) + "\r\n")
        for r in rows:
            buf.write(
                f"{r.asset_id},{r.participant_id},{r.dimension},{r.item_id},{r.value}\r\n"
            )
        return PlainTextResponse(buf.getvalue(), media_type="text/csv")

    @app.get("/export/object_checks.csv")
    def export_checks(
        completed_only: int = 1,
        x_operator_token: Optional[str] = Header(None),
    ):
        _check_operator(x_operator_token)
        rows = service.export_object_checks(completed_only=bool(completed_only))
        buf = io.StringIO()
        buf.write("participant_id,asset_id,passed\r\n")
        for pid, aid, passed in rows:
            buf.write(f"{pid},{aid},{int(passed)}\r\n")
        return PlainTextResponse(buf.getvalue(), media_type="text/csv")

    if frontend_dir:
        root = Path(frontend_dir)

        @app.get("/")
        def index():
            target = root / "index.html"
            if not target.exists():
                raise HTTPException(status_code=404, detail="frontend not built")
            return FileResponse(target)

        @app.get("/app/{rest:path}")
        def app_files(rest: str):
            # compiled bundle lives in dist/; fall back to the project root
            # for assets shipped beside it
            for base in (root / "dist", root):
                target = (base / rest).resolve()
                if str(target).startswith(str(root.resolve())) and target.is_file():
                    media_type = "text/javascript" if target.suffix == ".js" else None
                    return FileResponse(target, media_type=media_type)
            raise HTTPException(status_code=404, detail="not found")

    return app


def build_app_from_config(config: StudyConfig, log_path: Optional[str] = None,
                          frontend_dir: Optional[str] = None) -> FastAPI:
    from .core import RecordLog

    service = StudyService(config, RecordLog(log_path))
    app = build_app(service, frontend_dir=frontend_dir)
    app.state.service = service
    return app
