"""HTTP facade over the session runtime.

Endpoints:
  GET  /tasks                      known task definitions (id + name)
  GET  /tasks/{task_id}            one full task definition
  POST /sessions                   start a live session for a task
  GET  /sessions                   live and persisted session ids
  POST /sessions/{id}/events       ingest one timestamped input event
  POST /sessions/{id}/finalize     close the session and persist it
  GET  /sessions/{id}/guidance     guidance prompts as server-sent events
  GET  /sessions/{id}/outputs      every derived record as server-sent events
  GET  /sessions/{id}/analytics/{view}
       view: confidence-matrix | summaries | timeline | summary-matrix |
             document | pointcloud
  GET  /sessions/{id}/files/{name} raw recorded files (manifest, topic logs)
  /app                             static console, when a bundle is present
"""

from __future__ import annotations

import json
import re
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import FileResponse, PlainTextResponse, Response, StreamingResponse
from fastapi.staticfiles import StaticFiles

from ..analytics import (
    analyze_session,
    build_point_cloud,
    ply_text,
    report_to_xml,
    summary_matrix,
)
from ..memory3d import CameraModel
from ..stream_bus import SessionStore, StreamBusError
from ..task_model import TaskDefinitionError, TaskGraph, parse_task_definition, serialize_task_definition
from .runtime import IngestError, SessionRuntime

_SAFE_NAME = re.compile(r"^[A-Za-z0-9._-]+$")


def load_task_dir(tasks_dir: Path) -> dict[str, TaskGraph]:
    tasks: dict[str, TaskGraph] = {}
    if tasks_dir.is_dir():
        for path in sorted(tasks_dir.glob("*.json")):
            graph = parse_task_definition(path.read_text())
            tasks[graph.task_id] = graph
    return tasks


def create_app(data_dir: str | Path, static_dir: str | Path | None = None) -> FastAPI:
    data_dir = Path(data_dir)
    store = SessionStore(data_dir)
    tasks = load_task_dir(data_dir / "tasks")
    live: dict[str, SessionRuntime] = {}

    app = FastAPI(title="task guidance service")
    app.state.store = store
    app.state.tasks = tasks
    app.state.live = live

    def get_task(task_id: str) -> TaskGraph:
        task = tasks.get(task_id)
        if task is None:
            raise HTTPException(404, f"unknown task {task_id!r}")
        return task

    def get_live(session_id: str) -> SessionRuntime:
        runtime = live.get(session_id)
        if runtime is None:
            raise HTTPException(404, f"no live session {session_id!r}")
        return runtime

    def get_session_view(session_id: str):
        """Live runtime bus if present, else the persisted recording."""
        runtime = live.get(session_id)
        if runtime is not None:
            return runtime.bus
        try:
            return store.load(session_id)
        except (FileNotFoundError, StreamBusError):
            raise HTTPException(404, f"unknown session {session_id!r}")

    @app.get("/tasks")
    def list_tasks():
        return [{"task_id": t.task_id, "name": t.name, "steps": len(t.steps)}
                for t in tasks.values()]

    @app.get("/tasks/{task_id}")
    def task_definition(task_id: str):
        return json.loads(serialize_task_definition(get_task(task_id)))

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        try:
            body = await request.json()
        except json.JSONDecodeError:
            raise HTTPException(422, "body must be a JSON object")
        task = get_task(body.get("task_id", ""))
        session_id = body.get("session_id") or f"session-{len(live) + 1:04d}"
        if session_id in live or session_id in store.list_sessions():
            raise HTTPException(409, f"session {session_id!r} already exists")
        try:
            runtime = SessionRuntime(task, session_id)
        except StreamBusError as err:
            raise HTTPException(422, str(err))
        live[session_id] = runtime
        return {"session_id": session_id, "task_id": task.task_id,
                "current_step": runtime.state.current_step_id}

    @app.get("/sessions")
    def list_sessions():
        return {"live": sorted(live), "persisted": store.list_sessions()}

    @app.post("/sessions/{session_id}/events")
    def ingest_event(session_id: str, body: dict):
        runtime = get_live(session_id)
        ts_ns = body.get("ts_ns")
        payload = body.get("payload")
        if not isinstance(ts_ns, int) or not isinstance(payload, dict):
            raise HTTPException(422, "body must carry integer ts_ns and object payload")
        try:
            return runtime.ingest(ts_ns, payload)
        except IngestError as err:
            raise HTTPException(409 if "finalized" in str(err) else 422, str(err))
        except StreamBusError as err:
            raise HTTPException(422, str(err))

    @app.post("/sessions/{session_id}/finalize")
    def finalize_session(session_id: str, body: dict | None = None):
        runtime = get_live(session_id)
        if not runtime.finalized:
            # Clamp so a stale client timestamp cannot violate topic order.
            end = runtime.bus.time_range()[1] if runtime.bus.time_range() else 0
            requested = (body or {}).get("ts_ns")
            ts_ns = max(requested, end) if isinstance(requested, int) else end
            runtime.finalize(ts_ns)
        manifest = store.persist(runtime.bus)
        del live[session_id]
        return {"session_id": session_id, "persisted": True,
                "topics": len(manifest.topics),
                "errors": len(runtime.bus.read("reasoning.errors"))}

    def sse_stream(runtime: SessionRuntime, kinds: set[str] | None):
        def generate():
            index = 0
            while True:
                records = runtime.feed_after(index, timeout=0.5)
                new_index = index + len(records)
                for record in records:
                    if kinds is None or record.payload["tag"] in kinds:
                        body = json.dumps(
                            {"topic": record.topic, "seq": record.seq,
                             "ts_ns": record.ts_ns, "payload": record.payload},
                            sort_keys=True)
                        yield f"id: {record.index}\ndata: {body}\n\n"
                index = new_index
                if runtime.finalized and not runtime.feed_after(index, timeout=0):
                    yield "event: end\ndata: {}\n\n"
                    return
        return StreamingResponse(generate(), media_type="text/event-stream")

    @app.get("/sessions/{session_id}/guidance")
    def guidance_stream(session_id: str):
        return sse_stream(get_live(session_id), {"guidance_prompt"})

    @app.get("/sessions/{session_id}/outputs")
    def outputs_stream(session_id: str):
        return sse_stream(get_live(session_id), None)

    @app.get("/sessions/{session_id}/analytics/{view}")
    def analytics_view(session_id: str, view: str):
        session = get_session_view(session_id)
        if view == "pointcloud":
            return PlainTextResponse(_pointcloud_ply(session),
                                     media_type="text/plain")
        report = analyze_session(session)
        if view == "confidence-matrix":
            return report.confidence.to_dict()
        if view == "summaries":
            return report.summaries
        if view == "timeline":
            def rows(segments):
                return [{"label": s.label, "t_start_ns": s.t_start_ns,
                         "t_end_ns": s.t_end_ns} for s in segments]
            return {"steps": rows(report.step_segments),
                    "workload": rows(report.workload_segments),
                    "phases": rows(report.phase_segments),
                    "procedures": rows(report.procedure_segments),
                    "errors": report.errors,
                    "distribution": report.distribution,
                    "prompt_counts": report.prompt_counts,
                    "duration_s": report.duration_s}
        if view == "summary-matrix":
            steps, categories, matrix = summary_matrix(
                report.step_segments, report.workload_segments)
            return {"steps": steps, "categories": categories,
                    "matrix": matrix, "phi": report.phi}
        if view == "document":
            return Response(report_to_xml(report), media_type="application/xml")
        raise HTTPException(404, f"unknown analytics view {view!r}")

    def _pointcloud_ply(session) -> str:
        poses = [(e.ts_ns, CameraModel.from_payload(e.payload))
                 for e in (session.read("camera_pose")
                           if "camera_pose" in session.topic_names() else [])]
        frames = []
        depth_entries = (session.read("depth")
                         if "depth" in session.topic_names() else [])
        for entry in depth_entries:
            cam = None
            for ts, pose in poses:
                if ts <= entry.ts_ns:
                    cam = pose
                else:
                    break
            if cam is None:
                continue
            digest = entry.payload["blob"]
            if hasattr(session, "blob_array"):
                depth = session.blob_array(digest)
            else:
                depth = session.blobs.get_array(digest)
            frames.append((depth, cam))
        return ply_text(build_point_cloud(frames))

    @app.get("/sessions/{session_id}/files/{name}")
    def session_file(session_id: str, name: str):
        if not (_SAFE_NAME.match(session_id) and _SAFE_NAME.match(name)):
            raise HTTPException(422, "invalid name")
        path = store.session_dir(session_id) / name
        if not path.is_file():
            raise HTTPException(404, f"no file {name!r} for session {session_id!r}")
        return FileResponse(path)

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/app", StaticFiles(directory=static_dir, html=True), name="console")

    return app
