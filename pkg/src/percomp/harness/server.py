"""HTTP annotation backend: pair queue, judgment intake, progress, frame
serving, and guidelines, plus optional static hosting of the review UI."""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import FileResponse, JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from ..preference import Dimension, Judgment
from .guidelines import GUIDELINES_TEXT
from .store import AnnotationStore, ConflictError, UnknownPairError

VALID_OUTCOMES = {"A_WINS", "TIE", "B_WINS"}


def create_app(
    store: AnnotationStore,
    frames_root: str | Path,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="percomp annotation backend")
    frames_root = Path(frames_root)

    @app.get("/api/pairs/next")
    def next_pair(dimension: str, annotator: str):
        try:
            dim = Dimension(dimension)
        except ValueError:
            return JSONResponse({"error": f"unknown dimension {dimension!r}"}, 400)
        task = store.next_pair(dim, annotator)
        if task is None:
            return Response(status_code=204)
        return JSONResponse(task.to_dict())

    @app.post("/api/judgments")
    async def submit(request: Request):
        try:
            body = await request.json()
        except Exception:
            return JSONResponse({"error": "invalid JSON body"}, 400)
        required = {"pair_id", "item_a", "item_b", "dimension", "outcome", "annotator_id"}
        if not isinstance(body, dict) or not required.issubset(body):
            missing = sorted(required - set(body or {}))
            return JSONResponse({"error": f"missing fields: {missing}"}, 400)
        if body["outcome"] not in VALID_OUTCOMES:
            return JSONResponse(
                {"error": f"outcome must be one of {sorted(VALID_OUTCOMES)}"}, 400
            )
        try:
            judgment = Judgment(
                pair_id=str(body["pair_id"]),
                item_a=str(body["item_a"]),
                item_b=str(body["item_b"]),
                dimension=Dimension(body["dimension"]),
                outcome=body["outcome"],
                annotator_id=str(body["annotator_id"]),
                timestamp=float(body.get("timestamp", 0.0)),
            )
        except Exception as e:  # bad enum values, item_a == item_b, and friends
            return JSONResponse({"error": str(e)}, 400)
        try:
            store.submit_judgment(judgment)
        except ConflictError as e:
            return JSONResponse({"error": str(e)}, 409)
        except UnknownPairError as e:
            return JSONResponse({"error": str(e)}, 400)
        return JSONResponse({"status": "accepted"}, 201)

    @app.get("/api/progress")
    def progress():
        return JSONResponse(store.progress())

    @app.get("/api/frames/{seq_id}/{index}")
    def frame(seq_id: str, index: int):
        path = frames_root / seq_id / f"{index:04d}.png"
        if ".." in seq_id or not path.is_file():
            return JSONResponse({"error": "frame not found"}, 404)
        return FileResponse(path, media_type="image/png")

    @app.get("/api/guidelines")
    def guidelines():
        return PlainTextResponse(GUIDELINES_TEXT)

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app
