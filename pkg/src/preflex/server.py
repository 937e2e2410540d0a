"""Websocket service exposing adaptation sessions (see PROTOCOL.md).

One connection hosts its own sessions; messages are JSON objects with a
``kind``, an optional ``session_id``, and a kind-specific ``payload``. Adapt
runs execute off the receive loop in a worker thread, stream Progress frames,
and are cancelled when the connection drops, leaving the session at its last
committed iteration. A second Adapt (or any session mutation) while one is
running is rejected with ``busy`` - the loop is strictly turn-based.
"""

from __future__ import annotations

import asyncio
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .objectives import NUM_OBJECTIVES, Objective
from .scene import Scene, SceneError, resolve_scene, serialize_scene
from .session import (
    Mode,
    SessionError,
    SessionState,
    adapt,
    finish,
    save_transcript,
    start_session,
    submit_moves,
)
from .solvers import GenerationReport, SolverCancelled, SolverConfig

PROTOCOL_VERSION = 1
DEFAULT_PORT = 8787
BIND_ENV_VAR = "PREFLEX_BIND"

_PROGRESS_EVERY = 5  # stream every Nth generation plus the last


class ProtocolError(Exception):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


@dataclass
class SessionSlot:
    state: SessionState
    busy: bool = False
    cancel: asyncio.Event = field(default_factory=asyncio.Event)


@dataclass
class ConnectionHub:
    """Per-connection session registry."""

    scenes_dir: Path | None
    transcripts_dir: Path | None
    sessions: dict[str, SessionSlot] = field(default_factory=dict)
    counter: int = 0

    def new_id(self) -> str:
        self.counter += 1
        return f"s{self.counter}"

    def get(self, session_id: str | None) -> SessionSlot:
        if session_id is None or session_id not in self.sessions:
            raise ProtocolError("unknown_session", f"unknown session id {session_id!r}")
        return self.sessions[session_id]


def _layout_payload(state: SessionState) -> dict:
    return {wid: list(pos) for wid, pos in sorted(state.current.positions.items())}


def _state_message(session_id: str, state: SessionState) -> dict:
    return {
        "kind": "state",
        "session_id": session_id,
        "payload": {
            "scene": state.scene_ref,
            "mode": state.mode.value,
            "iteration": state.iteration,
            "pending": state.pending,
            "layout": _layout_payload(state),
        },
    }


def _error(kind: str, message: str, session_id: str | None = None) -> dict:
    return {"kind": "error", "session_id": session_id, "payload": {"error": kind, "message": message}}


def _projections(state: SessionState, pairs: list[list[int]]) -> dict:
    archive = state.last_archive
    diag = state.diagnostics[-1]
    objs = archive.objectives_array()
    out = {}
    for pair in pairs:
        jx, jy = int(pair[0]), int(pair[1])
        if not (0 <= jx < NUM_OBJECTIVES and 0 <= jy < NUM_OBJECTIVES):
            raise ProtocolError("schema", f"objective pair out of range: {pair}")
        out[f"{jx}-{jy}"] = {
            "points": [[float(o[jx]), float(o[jy])] for o in objs],
            "chosen": [float(objs[diag["candidate_index"]][jx]), float(objs[diag["candidate_index"]][jy])],
            "reference": [float(diag["reference"][jx]), float(diag["reference"][jy])],
        }
    return out


def _adapted_message(session_id: str, state: SessionState, pairs: list[list[int]]) -> dict:
    diag = state.diagnostics[-1]
    assignment = state.last_assignment
    priorities = None
    if assignment is not None:
        priorities = {
            "groups": [list(g) for g in assignment.groups],
            "labels": list(assignment.labels),
            "by_objective": {
                Objective(j).name.lower(): assignment.label_of(j) for j in range(NUM_OBJECTIVES)
            },
        }
    return {
        "kind": "adapted",
        "session_id": session_id,
        "payload": {
            "layout": _layout_payload(state),
            "iteration": state.iteration,
            "priorities": priorities,
            "delta": diag.get("delta"),
            "distance": diag["distance"],
            "candidate_index": diag["candidate_index"],
            "archive_size": diag["archive_size"],
            "reference": diag["reference"],
            "projections": _projections(state, pairs),
        },
    }


def _parse_start(payload: dict, scenes_dir: Path | None) -> tuple[Scene, str, Mode, SolverConfig, dict]:
    if "scene" not in payload:
        raise ProtocolError("schema", "start_session payload requires 'scene'")
    try:
        scene, ref = resolve_scene(str(payload["scene"]), scenes_dir)
    except SceneError as exc:
        raise ProtocolError("schema", str(exc))
    try:
        mode = Mode(payload.get("mode", Mode.PREFERENCE.value))
    except ValueError:
        raise ProtocolError("schema", f"unknown mode {payload.get('mode')!r}")
    try:
        config = SolverConfig(
            population_size=int(payload.get("population_size", 100)),
            generations=int(payload.get("generations", 80)),
            seed=int(payload.get("seed", 0)),
        )
    except (TypeError, ValueError) as exc:
        raise ProtocolError("schema", f"bad solver config: {exc}")
    extras = {
        "tau_lower": float(payload.get("tau_lower", 0.0)),
        "tau_upper": float(payload.get("tau_upper", 0.2)),
    }
    return scene, ref, mode, config, extras


async def _run_adapt(websocket: WebSocket, session_id: str, slot: SessionSlot,
                     pairs: list[list[int]]) -> None:
    """Execute adapt in a worker thread, forwarding Progress frames."""
    loop = asyncio.get_running_loop()
    queue: asyncio.Queue[dict | None] = asyncio.Queue()

    def on_progress(report: GenerationReport) -> bool:
        if slot.cancel.is_set():
            return False
        if report.generation % _PROGRESS_EVERY == 0 or report.generation == report.total_generations:
            loop.call_soon_threadsafe(queue.put_nowait, {
                "kind": "progress",
                "session_id": session_id,
                "payload": {
                    "generation": report.generation,
                    "total_generations": report.total_generations,
                    "evaluations": report.evaluations,
                    "best_rank_vector": list(report.best_rank_vector),
                    "front_size": report.front_size,
                },
            })
        return True

    def work():
        try:
            adapt(slot.state, progress=on_progress)
            return None
        except (SessionError, SolverCancelled) as exc:
            return exc
        finally:
            loop.call_soon_threadsafe(queue.put_nowait, None)

    task = loop.run_in_executor(None, work)
    try:
        while True:
            item = await queue.get()
            if item is None:
                break
            await websocket.send_json(item)
        outcome = await task
        if isinstance(outcome, SolverCancelled):
            return  # connection is going away; state stayed at the last commit
        if isinstance(outcome, SessionError):
            await websocket.send_json(_error("protocol", str(outcome), session_id))
            return
        await websocket.send_json(_adapted_message(session_id, slot.state, pairs))
    except RuntimeError:
        slot.cancel.set()  # socket went away mid-stream; let the worker wind down
        await task
    finally:
        slot.busy = False


async def handle(message: dict, hub: ConnectionHub, websocket: WebSocket) -> None:
    """Dispatch one request message, sending its response frame(s)."""
    if not isinstance(message, dict) or "kind" not in message:
        await websocket.send_json(_error("schema", "message must be an object with a 'kind'"))
        return
    kind = message.get("kind")
    payload = message.get("payload") or {}
    session_id = message.get("session_id")
    if not isinstance(payload, dict):
        await websocket.send_json(_error("schema", "'payload' must be an object", session_id))
        return

    try:
        if kind == "hello":
            from .scene import available_fixtures

            scenes = available_fixtures()
            if hub.scenes_dir is not None and hub.scenes_dir.is_dir():
                scenes = sorted({p.stem for p in hub.scenes_dir.glob("*.json")} | set(scenes))
            await websocket.send_json(
                {"kind": "hello", "session_id": None,
                 "payload": {"version": PROTOCOL_VERSION, "scenes": scenes}}
            )
        elif kind == "scene_data":
            if "scene" not in payload:
                raise ProtocolError("schema", "scene_data payload requires 'scene'")
            try:
                scene, ref = resolve_scene(str(payload["scene"]), hub.scenes_dir)
            except SceneError as exc:
                raise ProtocolError("schema", str(exc))
            await websocket.send_json(
                {"kind": "scene_data", "session_id": None,
                 "payload": {"name": ref, "scene": serialize_scene(scene)}}
            )
        elif kind == "start_session":
            scene, ref, mode, config, extras = _parse_start(payload, hub.scenes_dir)
            state = await asyncio.to_thread(
                start_session, scene, mode, config, scene_ref=ref, **extras
            )
            sid = hub.new_id()
            hub.sessions[sid] = SessionSlot(state=state)
            await websocket.send_json(_state_message(sid, state))
        elif kind == "submit_moves":
            slot = hub.get(session_id)
            if slot.busy:
                raise ProtocolError("busy", "an adapt run is in progress for this session")
            if "moves" not in payload or not isinstance(payload["moves"], dict):
                raise ProtocolError("schema", "submit_moves payload requires a 'moves' object")
            try:
                moves = {str(w): (float(p[0]), float(p[1]), float(p[2]))
                         for w, p in payload["moves"].items()}
            except (TypeError, ValueError, IndexError):
                raise ProtocolError("schema", "each move must map a widget id to [x, y, z]")
            try:
                submit_moves(slot.state, moves)
            except SessionError as exc:
                raise ProtocolError("protocol", str(exc))
            await websocket.send_json(_state_message(session_id, slot.state))
        elif kind == "adapt":
            slot = hub.get(session_id)
            if slot.busy:
                raise ProtocolError("busy", "an adapt run is already in progress")
            pairs = payload.get("pairs") or []
            if slot.state.mode is Mode.MANUAL:
                raise ProtocolError("protocol", "adapt is not supported in manual mode")
            if slot.state.pending < 1:
                raise ProtocolError(
                    "protocol", "adapt requires at least one recorded adjustment since the last adapt"
                )
            slot.busy = True
            asyncio.create_task(_run_adapt(websocket, session_id, slot, pairs))
        elif kind == "finish":
            slot = hub.get(session_id)
            if slot.busy:
                raise ProtocolError("busy", "an adapt run is in progress for this session")
            report = finish(slot.state)
            if hub.transcripts_dir is not None:
                hub.transcripts_dir.mkdir(parents=True, exist_ok=True)
                save_transcript(slot.state, hub.transcripts_dir / f"{session_id}.json")
            await websocket.send_json(
                {"kind": "finish", "session_id": session_id, "payload": {"report": report}}
            )
        else:
            raise ProtocolError("schema", f"unknown message kind {kind!r}")
    except ProtocolError as exc:
        await websocket.send_json(_error(exc.kind, str(exc), session_id))


def create_app(scenes_dir: str | Path | None = None,
               transcripts_dir: str | Path | None = None,
               studio_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="preflex adaptation service")
    app.state.scenes_dir = Path(scenes_dir) if scenes_dir else None
    app.state.transcripts_dir = Path(transcripts_dir) if transcripts_dir else None
    app.state.hubs: list[ConnectionHub] = []

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket):
        await websocket.accept()
        hub = ConnectionHub(scenes_dir=app.state.scenes_dir,
                            transcripts_dir=app.state.transcripts_dir)
        app.state.hubs.append(hub)
        try:
            while True:
                raw = await websocket.receive_text()
                try:
                    message = json.loads(raw)
                except json.JSONDecodeError:
                    await websocket.send_json(_error("schema", "frame is not valid JSON"))
                    continue
                await handle(message, hub, websocket)
        except WebSocketDisconnect:
            pass
        finally:
            for slot in hub.sessions.values():
                slot.cancel.set()
            if app.state.transcripts_dir is not None:
                app.state.transcripts_dir.mkdir(parents=True, exist_ok=True)
                for sid, slot in hub.sessions.items():
                    save_transcript(slot.state, app.state.transcripts_dir / f"conn-{id(hub)}-{sid}.json")

    if studio_dir and Path(studio_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(studio_dir), html=True), name="studio")

    return app


def serve(bind_address: str | None = None, scene_dir: str | Path | None = None, *,
          port: int = DEFAULT_PORT, transcripts_dir: str | Path | None = None,
          studio_dir: str | Path | None = None) -> None:
    """Run the service until interrupted (bind address falls back to $PREFLEX_BIND)."""
    import uvicorn

    host = bind_address or os.environ.get(BIND_ENV_VAR, "127.0.0.1")
    app = create_app(scene_dir, transcripts_dir, studio_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
