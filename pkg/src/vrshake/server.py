"""Realtime console endpoint.

Two browser clients (roles "a" and "b") share one named session over
websockets.  Each client streams {type:"input", grip, wrist_mm} at up to
60 Hz; the server feeds a per-role SessionEngine pair wired back-to-back
in process, ticks them at 100 Hz, and pushes {type:"state", ...} frames
back at 25 Hz (the contract caps state traffic at 30 Hz per client).

When a map file is loaded, every completed clasp-to-release episode is
classified and both clients get a {type:"classified", ...} message.  A
"replay" join streams a stored recording instead: its stimulus trace as
state frames and its event records (media_start first) at their recorded
timestamps.
"""

from __future__ import annotations

import asyncio
import json
import time
from dataclasses import dataclass

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import HTMLResponse
from fastapi.staticfiles import StaticFiles

from .core import ContactPhase, HandshakeConfig
from .recording import Recorder, RecordingHeader, SessionRecording, EventRecord, StimulusRecord, load
from .session import SensorReading, SessionEngine, TICK_PERIOD_US

TICKS_PER_STATE = 4          # 100 Hz engine -> 25 Hz state frames
ROLES = ("a", "b")


def _clamp(value, lo, hi):
    return max(lo, min(hi, value))


@dataclass
class _Client:
    socket: WebSocket
    role: str
    grip: float = 0.0
    wrist_mm: tuple[int, int, int] = (0, 0, 0)


class ConsoleSession:
    """One named two-person session: engines, tick task, classification."""

    def __init__(self, name: str, config: HandshakeConfig | None, emap):
        self.name = name
        self.emap = emap
        params = config.params if config else None
        calibration = config.calibration if config else None
        site_groups = config.site_groups if config else None
        self.clients: dict[str, _Client] = {}
        self.engines: dict[str, SessionEngine] = {}
        self.recorders: dict[str, Recorder] = {}
        self._engine_kwargs = {"params": params, "calibration": calibration}
        if site_groups:
            self._engine_kwargs["site_groups"] = site_groups
        for role in ROLES:
            self._reset_engine(role)
        self.t0_ns = time.monotonic_ns()
        self.task: asyncio.Task | None = None
        self.tick_count = 0

    def _reset_engine(self, role: str) -> None:
        recording = SessionRecording(RecordingHeader())
        recorder = Recorder(recording)
        engine = SessionEngine(recorder=recorder, **self._engine_kwargs)
        self.engines[role] = engine
        self.recorders[role] = recorder

    def _reset_recording(self, role: str) -> None:
        # Keep engine state (phase, remote, seq); restart the capture so the
        # next release classifies exactly one episode.
        recording = SessionRecording(RecordingHeader())
        self.recorders[role] = Recorder(recording)
        self.engines[role].recorder = self.recorders[role]

    def now_us(self) -> int:
        return (time.monotonic_ns() - self.t0_ns) // 1000

    @property
    def empty(self) -> bool:
        return not self.clients

    async def join(self, socket: WebSocket, role: str) -> _Client | None:
        if role not in ROLES:
            await socket.send_text(json.dumps({"type": "error", "reason": "bad_role"}))
            return None
        if role in self.clients:
            await socket.send_text(json.dumps({"type": "error", "reason": "role_taken"}))
            return None
        client = _Client(socket=socket, role=role)
        self.clients[role] = client
        if self.task is None or self.task.done():
            self.task = asyncio.create_task(self._tick_loop())
        return client

    def leave(self, client: _Client) -> None:
        if self.clients.get(client.role) is client:
            del self.clients[client.role]
        if self.empty and self.task is not None:
            self.task.cancel()
            self.task = None

    async def _send(self, role: str, payload: dict) -> None:
        client = self.clients.get(role)
        if client is None:
            return
        try:
            await client.socket.send_text(json.dumps(payload))
        except Exception:
            self.leave(client)

    async def _broadcast(self, payload: dict) -> None:
        for role in list(self.clients):
            await self._send(role, payload)

    async def _classify(self, role: str, now_us: int) -> None:
        from .analysis import classify_recording, extract_features

        recording = self.recorders[role].recording
        try:
            result = classify_recording(self.emap, recording)
        except ValueError:
            await self._broadcast({"type": "event", "name": "classify_skipped",
                                   "t_us": now_us})
            return
        await self._broadcast({"type": "classified", "emotion": result.label,
                               "subtendency": result.subtendency,
                               "distance": result.distance})

    async def _tick_loop(self) -> None:
        period_s = TICK_PERIOD_US / 1e6
        try:
            while True:
                now = self.now_us()
                outputs = {}
                datagrams: list[tuple[str, bytes]] = []   # (dest role, data)
                for role in ROLES:
                    engine = self.engines[role]
                    client = self.clients.get(role)
                    if client is None:
                        continue
                    reading = SensorReading(grip=client.grip, wrist_mm=client.wrist_mm)
                    sample = engine.make_own_sample(reading, now)
                    other = ROLES[1 - ROLES.index(role)]
                    for data in engine.outbound(sample, now):
                        datagrams.append((other, data))
                    was = engine.phase
                    outputs[role] = engine.run_tick(sample, now)
                    if (was is ContactPhase.CLASPED
                            and outputs[role].phase is ContactPhase.RELEASED):
                        if self.emap is not None:
                            await self._classify(role, now)
                        self._reset_recording(role)
                for dest, data in datagrams:
                    for reply in self.engines[dest].handle_datagram(data, now):
                        source = ROLES[1 - ROLES.index(dest)]
                        self.engines[source].handle_datagram(reply, now)
                self.tick_count += 1
                if self.tick_count % TICKS_PER_STATE == 0:
                    for role, out in outputs.items():
                        await self._send(role, {
                            "type": "state", "t_us": out.t_us,
                            "phase": out.phase.value,
                            "dist": list(out.dist.intensity),
                            "own_grip": out.own_grip, "opp_grip": out.opp_grip,
                            "stale": out.stale,
                        })
                await asyncio.sleep(period_s)
        except asyncio.CancelledError:
            pass


async def _stream_replay(socket: WebSocket, path: str, speed: float) -> None:
    recording = load(path)
    start = time.monotonic()
    for record in recording.records:
        if isinstance(record, (EventRecord, StimulusRecord)):
            due = start + record.t_us / 1e6 / speed
            delay = due - time.monotonic()
            if delay > 0:
                await asyncio.sleep(delay)
        if isinstance(record, EventRecord):
            await socket.send_text(json.dumps(
                {"type": "event", "name": record.name, "t_us": record.t_us}))
        elif isinstance(record, StimulusRecord):
            await socket.send_text(json.dumps({
                "type": "state", "t_us": record.t_us, "phase": record.phase.value,
                "dist": list(record.intensity),
                "own_grip": record.own_milli / 1000,
                "opp_grip": record.opp_milli / 1000,
                "stale": record.stale,
            }))
    await socket.send_text(json.dumps({"type": "event", "name": "replay_end",
                                       "t_us": recording.records[-1].t_us
                                       if recording.records else 0}))


_FALLBACK_PAGE = """<!doctype html>
<title>vrshake console</title>
<p>The console endpoint is up at <code>/ws</code>.
Build the browser client (frontend/) and pass --static to serve it here.</p>
"""


def build_app(map_path: str | None = None, config: HandshakeConfig | None = None,
              static_dir: str | None = None) -> FastAPI:
    emap = None
    if map_path is not None:
        from .analysis import load_map
        emap = load_map(map_path)

    app = FastAPI(title="vrshake console")
    sessions: dict[str, ConsoleSession] = {}

    @app.get("/healthz")
    async def healthz():
        return {"ok": True, "sessions": len(sessions)}

    @app.websocket("/ws")
    async def ws(socket: WebSocket):
        await socket.accept()
        client = None
        session = None
        try:
            raw = await socket.receive_text()
            try:
                msg = json.loads(raw)
            except json.JSONDecodeError:
                await socket.send_text(json.dumps({"type": "error", "reason": "bad_json"}))
                await socket.close()
                return
            if msg.get("type") != "join":
                await socket.send_text(json.dumps({"type": "error", "reason": "join_first"}))
                await socket.close()
                return

            if msg.get("role") == "replay":
                try:
                    await _stream_replay(socket, str(msg.get("file", "")),
                                         float(msg.get("speed", 1.0)) or 1.0)
                except (OSError, ValueError):
                    await socket.send_text(json.dumps(
                        {"type": "error", "reason": "bad_recording"}))
                await socket.close()
                return

            name = str(msg.get("session", "default"))
            session = sessions.get(name)
            if session is None or (session.empty and (session.task is None
                                                      or session.task.done())):
                session = ConsoleSession(name, config, emap)
                sessions[name] = session
            client = await session.join(socket, str(msg.get("role", "")))
            if client is None:
                await socket.close()
                return
            await socket.send_text(json.dumps(
                {"type": "event", "name": "joined", "t_us": session.now_us()}))

            while True:
                raw = await socket.receive_text()
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    continue
                if msg.get("type") != "input":
                    continue
                try:
                    client.grip = _clamp(float(msg.get("grip", 0.0)), 0.0, 1.0)
                    wrist = msg.get("wrist_mm", (0, 0, 0))
                    client.wrist_mm = tuple(
                        _clamp(int(v), -2**31, 2**31 - 1) for v in wrist)[:3]
                    if len(client.wrist_mm) != 3:
                        client.wrist_mm = (0, 0, 0)
                except (TypeError, ValueError):
                    continue
        except WebSocketDisconnect:
            pass
        finally:
            if session is not None and client is not None:
                session.leave(client)

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="console")
    else:
        @app.get("/")
        async def index():
            return HTMLResponse(_FALLBACK_PAGE)

    return app


def serve(host: str, port: int, map_path: str | None = None,
          config: HandshakeConfig | None = None, static_dir: str | None = None) -> None:
    import uvicorn

    uvicorn.run(build_app(map_path=map_path, config=config, static_dir=static_dir),
                host=host, port=port, log_level="warning")
