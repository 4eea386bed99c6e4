"""Websocket console: join protocol, live ticking, replay streaming."""

import asyncio
import json
from contextlib import ExitStack

import pytest

fastapi = pytest.importorskip("fastapi")
from fastapi.testclient import TestClient

from vrshake.analysis import (
    ClusterInfo,
    EmotionMap,
    PcaModel,
    Standardization,
    save_map,
)
from vrshake.netsim import loopback_recording
from vrshake.profiles import steady_profile
from vrshake.recording import RecordingHeader
from vrshake.server import ConsoleSession, _Client, build_app


def grip_only_map():
    """Two clusters split along grip_strength alone."""
    return EmotionMap(
        feature_names=("grip_strength", "grip_speed", "swing_range",
                       "swing_speed", "duration"),
        standardization=Standardization(mean=(0.0,) * 5, std=(1.0,) * 5,
                                        retained=(True,) * 5),
        pca=PcaModel(components=((1.0, 0.0, 0.0, 0.0, 0.0),),
                     explained_variance=(1.0,)),
        clusters=(
            ClusterInfo(0, "Happy", 1, (0.9,), 1, 1.0, False, (0,)),
            ClusterInfo(1, "Sad", 1, (0.05,), 1, 1.0, False, (1,)),
        ),
    )


def client_for(tmp_path, with_map=False):
    map_path = None
    if with_map:
        map_path = str(tmp_path / "grip.hsmap")
        save_map(grip_only_map(), map_path)
    return TestClient(build_app(map_path=map_path))


def join(sock, role, session="duo"):
    sock.send_text(json.dumps({"type": "join", "session": session, "role": role}))
    return json.loads(sock.receive_text())


def send_input(sock, grip, wrist=(0, 0, 0)):
    sock.send_text(json.dumps({"type": "input", "grip": grip,
                               "wrist_mm": list(wrist)}))


def read_until(sock, pred, limit=400):
    for _ in range(limit):
        msg = json.loads(sock.receive_text())
        if pred(msg):
            return msg
    raise AssertionError("expected message never arrived")


# --- plumbing ----------------------------------------------------------------

def test_healthz_and_fallback_page(tmp_path):
    client = client_for(tmp_path)
    assert client.get("/healthz").json() == {"ok": True, "sessions": 0}
    body = client.get("/").text
    assert "/ws" in body


def test_join_protocol_errors(tmp_path):
    client = client_for(tmp_path)
    with client.websocket_connect("/ws") as sock:
        sock.send_text("{nope")
        assert json.loads(sock.receive_text())["reason"] == "bad_json"
    with client.websocket_connect("/ws") as sock:
        sock.send_text(json.dumps({"type": "input", "grip": 1.0}))
        assert json.loads(sock.receive_text())["reason"] == "join_first"
    with client.websocket_connect("/ws") as sock:
        assert join(sock, "c")["reason"] == "bad_role"
    with ExitStack() as stack:
        first = stack.enter_context(client.websocket_connect("/ws"))
        assert join(first, "a")["name"] == "joined"
        second = stack.enter_context(client.websocket_connect("/ws"))
        assert join(second, "a")["reason"] == "role_taken"


def test_solo_client_sees_idle_stale_frames(tmp_path):
    client = client_for(tmp_path)
    with client.websocket_connect("/ws") as sock:
        assert join(sock, "a")["name"] == "joined"
        state = read_until(sock, lambda m: m["type"] == "state")
        assert state["phase"] == "Idle"
        assert state["stale"] is True
        assert state["dist"] == [0.0] * 7
        assert state["opp_grip"] == 0.0


# --- live two-person session ---------------------------------------------------

def hold_clasp(a, b, grip=0.9, frames=12):
    send_input(a, grip)
    send_input(b, grip)
    state = read_until(a, lambda m: m["type"] == "state"
                       and m["phase"] == "Clasped")
    for _ in range(frames):
        state = read_until(a, lambda m: m["type"] == "state")
    return state


def test_two_clients_clasp_and_release(tmp_path):
    client = client_for(tmp_path)
    with client.websocket_connect("/ws") as a, \
         client.websocket_connect("/ws") as b:
        join(a, "a")
        join(b, "b")
        state = hold_clasp(a, b)
        assert state["own_grip"] == pytest.approx(0.9)
        assert state["opp_grip"] == pytest.approx(0.9)
        assert state["stale"] is False
        assert max(state["dist"]) > 0.0
        send_input(a, 0.0)
        send_input(b, 0.0)
        read_until(a, lambda m: m["type"] == "state"
                   and m["phase"] in ("Released", "Idle"))


def test_release_triggers_classification(tmp_path):
    client = client_for(tmp_path, with_map=True)
    with client.websocket_connect("/ws") as a, \
         client.websocket_connect("/ws") as b:
        join(a, "a")
        join(b, "b")
        hold_clasp(a, b, frames=16)
        send_input(a, 0.0)
        send_input(b, 0.0)
        verdict = read_until(a, lambda m: m["type"] == "classified")
        assert verdict["emotion"] == "Happy"
        assert verdict["subtendency"] == 1
        assert verdict["distance"] < 0.2


def test_malformed_inputs_are_ignored(tmp_path):
    client = client_for(tmp_path)
    with client.websocket_connect("/ws") as sock:
        join(sock, "a")
        sock.send_text("junk{")
        sock.send_text(json.dumps({"type": "input", "grip": "soft"}))
        sock.send_text(json.dumps({"type": "input", "grip": 0.5,
                                   "wrist_mm": [1, 2]}))
        state = read_until(sock, lambda m: m["type"] == "state")
        assert state["phase"] == "Idle"


def test_classify_skipped_when_episode_unusable():
    session = ConsoleSession("x", None, grip_only_map())

    class _StubSocket:
        def __init__(self):
            self.sent = []

        async def send_text(self, text):
            self.sent.append(json.loads(text))

    stub = _StubSocket()
    session.clients["a"] = _Client(socket=stub, role="a")
    asyncio.run(session._classify("a", 1234))   # recording has no episode
    assert stub.sent == [{"type": "event", "name": "classify_skipped",
                          "t_us": 1234}]


# --- replay role -----------------------------------------------------------------

def test_replay_streams_recording(tmp_path):
    profile = steady_profile(1.0)
    recording, _ = loopback_recording(profile, profile, RecordingHeader(),
                                      duration_s=1.0, media_event=True)
    path = tmp_path / "r.hsrec"
    recording.save(str(path))
    stims = recording.stimulus_trace()

    client = client_for(tmp_path)
    with client.websocket_connect("/ws") as sock:
        sock.send_text(json.dumps({"type": "join", "role": "replay",
                                   "file": str(path), "speed": 40}))
        messages = []
        while True:
            msg = json.loads(sock.receive_text())
            messages.append(msg)
            if msg.get("name") == "replay_end":
                break
    assert messages[0] == {"type": "event", "name": "media_start", "t_us": 0}
    states = [m for m in messages if m["type"] == "state"]
    assert len(states) == len(stims)
    assert [s["t_us"] for s in states] == [s.t_us for s in stims]
    assert all(len(s["dist"]) == 7 for s in states)
    assert messages[-1]["t_us"] == recording.records[-1].t_us


def test_replay_of_missing_file_reports_error(tmp_path):
    client = client_for(tmp_path)
    with client.websocket_connect("/ws") as sock:
        sock.send_text(json.dumps({"type": "join", "role": "replay",
                                   "file": str(tmp_path / "ghost.hsrec")}))
        assert json.loads(sock.receive_text())["reason"] == "bad_recording"
