"""REST + WebSocket surface for the operator console and scripts.

All session mutations funnel through the same Session object the keyword
path uses, so REST-driven and voice-driven workflows produce identical
state. Events carry a per-hub monotone sequence number; connecting
clients get a replay of the most recent events before going live.
"""

import json
import logging
import os
import queue
import threading
import time
from collections import deque
from pathlib import Path

from fastapi import Body, FastAPI, HTTPException, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse, PlainTextResponse
from starlette.concurrency import run_in_threadpool

from .config import ENV_API_TOKEN
from .policybank import (
    PolicyError,
    RegistryEntry,
    parse_policy_file,
    serialize_policy,
)
from .session import Session

logger = logging.getLogger(__name__)

EVENT_TYPES = (
    "transcript",
    "keyword",
    "codegen_started",
    "codegen_result",
    "awaiting_approval",
    "execution_started",
    "say",
    "pose",
    "execution_finished",
    "recording_state",
    "policy_saved",
    "error",
)


class EventHub:
    """Buffers events, numbers them, and fans them out to subscribers."""

    def __init__(self, replay_size: int = 100):
        self._buffer = deque(maxlen=replay_size)
        self._subscribers: list = []
        self._seq = 0
        self._lock = threading.Lock()

    def emit(self, event_type: str, payload: dict) -> dict:
        with self._lock:
            self._seq += 1
            event = {"type": event_type, "seq": self._seq, "ts": time.time(), "payload": payload}
            self._buffer.append(event)
            subscribers = list(self._subscribers)
        for q in subscribers:
            q.put(event)
        return event

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue()
        with self._lock:
            for event in self._buffer:
                q.put(event)
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)


class Gateway:
    """Glue between HTTP handlers and the single-session state machine."""

    def __init__(self, session: Session, replay_size: int = 100):
        self.session = session
        self.hub = EventHub(replay_size=replay_size)
        self._command_counter = 0
        self._worker_lock = threading.Lock()
        self._worker: threading.Thread | None = None
        session._event_sink = self.hub.emit

    def next_command_id(self) -> str:
        self._command_counter += 1
        return f"cmd-{self._command_counter}"

    @property
    def busy(self) -> bool:
        worker_running = self._worker is not None and self._worker.is_alive()
        return worker_running or self.session.busy

    def submit(self, text: str) -> str:
        with self._worker_lock:
            if self.busy:
                raise BusyError()
            command_id = self.next_command_id()

            def work():
                try:
                    self.session.handle_transcript(text, command_id=command_id)
                except Exception as exc:  # noqa: BLE001 - surfaced as an event
                    logger.exception("command failed")
                    self.hub.emit("error", {"message": str(exc)})

            self._worker = threading.Thread(target=work, name=f"command-{command_id}", daemon=True)
            self._worker.start()
        return command_id

    def wait_idle(self, timeout: float = 10.0) -> None:
        worker = self._worker
        if worker is not None:
            worker.join(timeout)


class BusyError(Exception):
    pass


def _check_token(request: Request) -> None:
    expected = os.environ.get(ENV_API_TOKEN, "")
    if not expected:
        return
    supplied = request.headers.get("Authorization", "")
    if supplied != f"Bearer {expected}":
        raise HTTPException(status_code=401, detail="missing or invalid token")


def create_app(session: Session, *, replay_size: int = 100, console_dir: str = "") -> FastAPI:
    app = FastAPI(title="voicearm gateway")
    gateway = Gateway(session, replay_size=replay_size)
    app.state.gateway = gateway

    if console_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/console", StaticFiles(directory=console_dir, html=True), name="console")

    # -- commands ------------------------------------------------------------

    @app.post("/api/command", status_code=202)
    def submit_command(payload: dict = Body(...), request: Request = None):
        _check_token(request)
        text = (payload or {}).get("text", "")
        if not isinstance(text, str) or not text.strip():
            raise HTTPException(status_code=400, detail="command text must not be empty")
        try:
            command_id = gateway.submit(text)
        except BusyError:
            raise HTTPException(status_code=409, detail="a command is already in flight")
        return {"id": command_id}

    @app.post("/api/commands/{command_id}/approve")
    def approve(command_id: str, request: Request = None):
        _check_token(request)
        gateway.wait_idle(timeout=5.0)
        try:
            report = session.approve(command_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no pending command '{command_id}'")
        return {"id": command_id, "status": report.status.value}

    @app.post("/api/commands/{command_id}/reject")
    def reject(command_id: str, request: Request = None):
        _check_token(request)
        gateway.wait_idle(timeout=5.0)
        try:
            session.reject(command_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no pending command '{command_id}'")
        return {"id": command_id, "status": "rejected"}

    @app.post("/api/stop")
    def stop(request: Request = None):
        _check_token(request)
        session.sim.stop()
        gateway.hub.emit("keyword", {"action": "stop", "via": "rest"})
        return {"stopped": True}

    # -- session and world -----------------------------------------------------

    @app.get("/api/session")
    def session_view(request: Request = None):
        _check_token(request)
        return session.snapshot()

    @app.get("/api/world")
    def world_view(request: Request = None):
        _check_token(request)
        return session.sim.model.snapshot()

    # -- policies ----------------------------------------------------------------

    @app.get("/api/policies")
    def list_policies(request: Request = None):
        _check_token(request)
        registry = session.registry
        return [
            {
                "name": entry.name,
                "enabled": entry.enabled,
                "learned": entry.learned,
                "loaded": entry.name in registry.loaded,
                "error": entry.error,
            }
            for entry in registry.entries
        ]

    def _find_entry(name: str) -> RegistryEntry:
        for entry in session.registry.entries:
            if entry.name == name:
                return entry
        raise HTTPException(status_code=404, detail=f"no policy named '{name}'")

    @app.get("/api/policies/{name}")
    def get_policy(name: str, request: Request = None):
        _check_token(request)
        entry = _find_entry(name)
        policy = session.registry.get(name)
        if policy is not None:
            return PlainTextResponse(serialize_policy(policy))
        try:
            return PlainTextResponse(Path(entry.file).read_text(encoding="utf-8"))
        except OSError as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.put("/api/policies/{name}")
    async def put_policy(name: str, request: Request):
        _check_token(request)
        text = (await request.body()).decode("utf-8")
        try:
            policy = parse_policy_file(text, name=name)
        except PolicyError as exc:
            return JSONResponse(status_code=422, content={"detail": str(exc)})
        registry = session.registry
        directory = Path(session.policies_dir or Path(registry.config_path).parent)
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / f"{name}.policy"
        path.write_text(serialize_policy(policy), encoding="utf-8")
        policy.source_path = str(path)
        existing = next((e for e in registry.entries if e.name == name), None)
        if existing is None:
            registry.add_entry(RegistryEntry(name=name, file=str(path), enabled=True), policy)
        else:
            existing.file = str(path)
            existing.error = ""
            policy.learned = existing.learned
            registry.loaded[name] = policy
        if registry.config_path:
            registry.save_config()
        return {"name": name, "saved": True}

    @app.delete("/api/policies/{name}")
    def delete_policy(name: str, request: Request = None):
        _check_token(request)
        _find_entry(name)
        session.registry.remove(name)
        if session.registry.config_path:
            session.registry.save_config()
        return {"name": name, "deleted": True}

    @app.post("/api/policies/{name}/enabled")
    def set_policy_enabled(name: str, payload: dict = Body(...), request: Request = None):
        _check_token(request)
        _find_entry(name)
        enabled = bool((payload or {}).get("enabled", True))
        session.registry.set_enabled(name, enabled)
        if session.registry.config_path:
            session.registry.save_config()
        return {"name": name, "enabled": enabled}

    # -- recording ------------------------------------------------------------------

    @app.post("/api/recording/start")
    def recording_start(request: Request = None):
        _check_token(request)
        from .session import KeywordAction

        session.perform_keyword(KeywordAction.RECORD_POLICY)
        return {"recording": True}

    @app.post("/api/recording/save")
    def recording_save(payload: dict = Body(...), request: Request = None):
        _check_token(request)
        name = (payload or {}).get("name", "").strip()
        hint = (payload or {}).get("hint", "").strip()
        if not name or not hint:
            raise HTTPException(status_code=400, detail="name and hint are required")
        try:
            policy = session.save_recording(name, hint)
        except PolicyError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"name": policy.name, "hint": policy.hint_utterance, "learned": True}

    @app.post("/api/recording/discard")
    def recording_discard(request: Request = None):
        _check_token(request)
        from .session import KeywordAction

        session.perform_keyword(KeywordAction.DISCARD_RECORDING)
        return {"recording": False}

    # -- event stream -----------------------------------------------------------------

    @app.websocket("/ws")
    async def stream_events(websocket: WebSocket):
        await websocket.accept()
        q = gateway.hub.subscribe()
        try:
            while True:
                try:
                    event = await run_in_threadpool(q.get, True, 1.0)
                except queue.Empty:
                    continue
                await websocket.send_text(json.dumps(event))
        except WebSocketDisconnect:
            pass
        finally:
            gateway.hub.unsubscribe(q)

    return app
