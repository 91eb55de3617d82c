"""Tests for the live control plane: frame stream, command intake, queries."""

from __future__ import annotations

from pathlib import Path

import pytest
from fastapi.testclient import TestClient

import swarmgov
from swarmgov.api import create_app, frame_payload, threshold_table
from swarmgov.scenario import load_scenario, parse_scenario

DATA_DIR = Path(swarmgov.__file__).parent / "data"

FRAME_KEYS = {
    "type",
    "v",
    "scenario_id",
    "final",
    "tick",
    "n",
    "raw",
    "cqs",
    "level",
    "alerts",
    "notices",
    "agents",
    "events",
    "thresholds",
}


def small_scenario(ticks: int = 6):
    return parse_scenario(
        {
            "scenario_id": "console-check",
            "seed": 21,
            "ticks": ticks,
            "config": {},
            "agents": [
                {"agent_id": "unit-1", "behavior": {"work": 1.0}},
                {"agent_id": "unit-2", "behavior": {"work": 1.0}},
            ],
            "timeline": [],
        }
    )


@pytest.fixture()
def app():
    return create_app(small_scenario(), tick_seconds=0.0)


@pytest.fixture()
def client(app):
    with TestClient(app) as client:
        yield client


def engine(client: TestClient):
    return client.app.state.engine


class TestFrameStream:
    def test_frame_carries_the_full_snapshot(self, client):
        with client.websocket_connect("/ws") as ws:
            engine(client).advance_one_tick()
            frame = ws.receive_json()
        assert set(frame) == FRAME_KEYS
        assert frame["type"] == "frame"
        assert frame["v"] == 1
        assert frame["scenario_id"] == "console-check"
        assert frame["tick"] == 0
        assert frame["final"] is False
        assert frame["cqs"] == 1.0
        assert frame["level"] == "Normal"
        assert set(frame["n"]) == {"n1", "n2", "n3", "n4", "n5", "n6"}
        assert set(frame["raw"]) == {"ias", "cir", "edi", "i_c", "sf", "scs"}
        assert [a["agent_id"] for a in frame["agents"]] == ["unit-1", "unit-2"]
        assert frame["thresholds"]["pigr_trigger"] == 0.6

    def test_frame_values_equal_the_logged_snapshot(self, client):
        state = engine(client)
        with client.websocket_connect("/ws") as ws:
            state.advance_one_tick()
            frame = ws.receive_json()
        row = state.runtime.trajectory[0]
        assert frame["cqs"] == row.cqs
        assert frame["n"]["n1"] == row.vector.n1
        assert frame["raw"]["i_c"] == row.vector.raw.i_c
        assert frame["level"] == row.level.value

    def test_late_subscriber_replays_the_backlog(self, client):
        state = engine(client)
        state.advance_one_tick()
        state.advance_one_tick()
        with client.websocket_connect("/ws") as ws:
            first = ws.receive_json()
            second = ws.receive_json()
            state.advance_one_tick()
            third = ws.receive_json()
        assert [f["tick"] for f in (first, second, third)] == [0, 1, 2]

    def test_two_subscribers_receive_the_same_frame(self, client):
        state = engine(client)
        with client.websocket_connect("/ws") as one:
            with client.websocket_connect("/ws") as two:
                state.advance_one_tick()
                assert one.receive_json() == two.receive_json()

    def test_final_tick_is_flagged(self, client):
        state = engine(client)
        frames = []
        while True:
            frame = state.advance_one_tick()
            if frame is None:
                break
            frames.append(frame)
        assert len(frames) == 6
        assert [f["final"] for f in frames] == [False] * 5 + [True]
        assert state.advance_one_tick() is None


class TestCommandIntake:
    def command(self, command_id: str = "console-1", **payload):
        return {
            "type": "command",
            "v": 1,
            "command_id": command_id,
            "kind": "flag-source",
            "payload": payload or {"source": "rumor-net"},
        }

    def test_command_is_acknowledged_and_applied_next_tick(self, client):
        state = engine(client)
        with client.websocket_connect("/ws") as ws:
            ws.send_json(self.command())
            ack = ws.receive_json()
            assert ack == {
                "type": "ack",
                "v": 1,
                "command_id": "console-1",
                "status": "accepted",
                "problems": [],
            }
            state.advance_one_tick()
            frame = ws.receive_json()
        commands = [e for e in frame["events"] if e["kind"] == "command"]
        assert commands
        assert commands[0]["payload"]["command_id"] == "console-1"
        assert commands[0]["payload"]["kind"] == "flag-source"
        assert "rumor-net" in state.runtime.flagged_sources

    def test_duplicate_submissions_are_absorbed(self, client):
        with client.websocket_connect("/ws") as ws:
            ws.send_json(self.command())
            assert ws.receive_json()["status"] == "accepted"
            ws.send_json(self.command())
            ack = ws.receive_json()
        assert ack["status"] == "duplicate"

    def test_invalid_command_is_rejected_with_reasons(self, client):
        with client.websocket_connect("/ws") as ws:
            ws.send_json(
                {
                    "type": "command",
                    "v": 1,
                    "command_id": "console-9",
                    "kind": "correction",
                    "payload": {"targets": ["ghost"], "intended": {"work": 0.5}},
                }
            )
            ack = ws.receive_json()
        assert ack["status"] == "rejected"
        assert any("unknown agent" in p for p in ack["problems"])

    def test_malformed_message_reports_field_paths(self, client):
        with client.websocket_connect("/ws") as ws:
            ws.send_json({"type": "command", "v": 2, "kind": "flag-source"})
            error = ws.receive_json()
        assert error["type"] == "error"
        joined = " ".join(error["problems"])
        assert "v" in joined
        assert "command_id" in joined

    def test_rejected_commands_leave_no_log_trace(self, client):
        state = engine(client)
        with client.websocket_connect("/ws") as ws:
            ws.send_json(
                {
                    "type": "command",
                    "v": 1,
                    "command_id": "console-3",
                    "kind": "pin-metric",
                    "payload": {"metric": "edi", "value": 0.4},
                }
            )
            ack = ws.receive_json()
        assert ack["status"] == "rejected"
        assert any("not an operator command" in p for p in ack["problems"])
        state.advance_one_tick()
        assert state.runtime.log.of_kind("command") == ()


class TestQueries:
    def test_log_window_filters_by_tick(self, client):
        state = engine(client)
        for _ in range(4):
            state.advance_one_tick()
        everything = client.get("/log").json()
        assert [e["t"] for e in everything] == sorted(e["t"] for e in everything)
        assert sum(e["kind"] == "metric-snapshot" for e in everything) == 4
        middle = client.get("/log", params={"from": 1, "to": 2}).json()
        assert middle
        assert all(1 <= e["t"] <= 2 for e in middle)
        assert sum(e["kind"] == "metric-snapshot" for e in middle) == 2

    def test_scenario_endpoint_describes_the_run(self, client):
        info = client.get("/scenario").json()
        assert info["scenario_id"] == "console-check"
        assert info["ticks"] == 6
        assert info["agents"] == ["unit-1", "unit-2"]
        assert info["thresholds"]["n4"] == 0.3
        assert info["radar_ticks"] == []

    def test_pigr_on_a_healthy_window_is_a_conflict(self, client):
        state = engine(client)
        for _ in range(4):
            state.advance_one_tick()
        response = client.get("/pigr", params={"window": "0..3"})
        assert response.status_code == 409
        assert "never crossed" in response.json()["detail"]

    def test_pigr_over_a_dip_returns_the_review(self):
        scenario = load_scenario(str(DATA_DIR / "golden_scenario.json"))
        app = create_app(scenario, tick_seconds=0.0)
        with TestClient(app) as client:
            state = engine(client)
            while state.advance_one_tick() is not None:
                pass
            response = client.get("/pigr", params={"window": "20..40"})
            assert response.status_code == 200
            review = response.json()
            assert review["binding_metric"] == "n3"
            assert review["worst_tick"] == 28
            assert any("rumor-net" in cause for cause in review["root_causes"])
            bad_window = client.get("/pigr", params={"window": "9..3"})
            assert bad_window.status_code == 422

    def test_golden_stream_matches_the_batch_run(self):
        scenario = load_scenario(str(DATA_DIR / "golden_scenario.json"))
        app = create_app(scenario, tick_seconds=0.0)
        with TestClient(app) as client:
            state = engine(client)
            frames = []
            while True:
                frame = state.advance_one_tick()
                if frame is None:
                    break
                frames.append(frame)
        assert len(frames) == 46
        assert frames[28]["level"] == "Restricted"
        assert frames[28]["cqs"] == pytest.approx(0.58, abs=1e-9)
        assert frames[45]["raw"]["sf"] == 0.0
        transitions = [
            e
            for frame in frames
            for e in frame["events"]
            if e["kind"] == "level-transition"
        ]
        assert [(e["t"], e["payload"]["to"]) for e in transitions] == [
            (23, "Elevated"),
            (28, "Restricted"),
            (33, "Elevated"),
            (45, "Normal"),
        ]


class TestFramePayload:
    def test_payload_function_is_pure_projection(self):
        scenario = small_scenario(ticks=3)
        app = create_app(scenario, tick_seconds=0.0)
        state = app.state.engine
        frame = state.advance_one_tick()
        rebuilt = frame_payload(state.runtime, state.runtime.results[0])
        assert rebuilt == frame

    def test_threshold_table_matches_config(self):
        scenario = small_scenario(ticks=3)
        app = create_app(scenario, tick_seconds=0.0)
        table = threshold_table(app.state.engine.runtime)
        assert table == {
            "n1": 0.7,
            "n2": 0.6,
            "n3": 0.6,
            "n4": 0.3,
            "n5": 0.5,
            "n6": 0.7,
            "pigr_trigger": 0.6,
        }
