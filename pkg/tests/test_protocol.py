"""Wire protocol sessions: framing, liveness, command latency, scoring."""

from __future__ import annotations

import asyncio
import json

import pytest

from mission_forge.canonical import loads_line
from mission_forge.camera import CameraModel
from mission_forge.geometry import Point3, Pose, rectangle
from mission_forge.planning import timed_path_from_polyline
from mission_forge.geometry import Point2
from mission_forge.protocol import MESSAGE_KINDS, ProtocolOptions, serve_one_async
from mission_forge.scenario import (
    AreaOfInterest,
    EntitySpec,
    EnvironmentConditions,
    MissionDescription,
    Objective,
    SimulationConfig,
    TargetSpec,
)
from mission_forge.geometry import BoundingBox3
from mission_forge.scoring import score_mission
from mission_forge.sim import RunOptions, track_id_for

NADIR = CameraModel(60.0, 60.0, 400.0, pitch=-90.0)
PORT = iter(range(45801, 45899))


def make_pair(duration=4.0, thread_target_pos=(50.0, 50.0)):
    car = EntitySpec(id="car_000", entity_class="car",
                     attributes={"color": "red", "model": "sedan"},
                     initial_pose=Pose(Point3(*thread_target_pos, 0.0), 0.0),
                     bbox=BoundingBox3(Point3(0, 0, 0.8), (2.4, 1.0, 0.8), 0.0),
                     is_target=True)
    cfg = SimulationConfig(entities=[car], obstacles=[],
                           environment=EnvironmentConditions(),
                           uav_start=Pose(Point3(0, 0, 80), 0.0),
                           cameras=[NADIR], seed=5, tick_dt=0.1)
    md = MissionDescription(objective=Objective.AREA_SEARCH,
                            target_spec=TargetSpec("car", {"color": "red", "model": "sedan"}),
                            aois=[AreaOfInterest("aoi_000", rectangle(0, 0, 200, 200))],
                            mission_duration=duration)
    return md, cfg


async def run_session(md, cfg, options, client):
    port = next(PORT)
    server = asyncio.create_task(serve_one_async(md, cfg, f"127.0.0.1:{port}", options))
    await asyncio.sleep(0.05)
    client_task = asyncio.create_task(client(port))
    log = await server
    client_result = await client_task
    return log, client_result


async def reading_client(port, script=None):
    """Read every message; ``script`` maps tick -> list of raw lines to send."""
    reader, writer = await asyncio.open_connection("127.0.0.1", port)
    messages = []
    try:
        while True:
            line = await asyncio.wait_for(reader.readline(), timeout=10.0)
            if not line:
                break
            msg = loads_line(line.decode())
            messages.append(msg)
            if script and msg.get("kind") == "tick" and msg["tick"] in script:
                for raw in script.pop(msg["tick"]):
                    writer.write((raw + "\n").encode())
                await writer.drain()
            if msg.get("kind") == "end":
                break
    finally:
        writer.close()
    return messages


class TestNoOpClient:
    def test_full_session_reaches_end(self):
        md, cfg = make_pair(duration=3.0)
        log, messages = asyncio.run(run_session(
            md, cfg, ProtocolOptions(run=RunOptions(thread="maneuver")),
            lambda port: reading_client(port)))
        kinds = [m["kind"] for m in messages]
        assert kinds[0] == "hello"
        assert kinds[-1] == "end"
        assert set(kinds) <= MESSAGE_KINDS
        ticks = [m for m in messages if m["kind"] == "tick"]
        assert len(ticks) <= md.mission_duration / cfg.tick_dt + 2
        assert [t["tick"] for t in ticks] == sorted(t["tick"] for t in ticks)
        assert log.status == "COMPLETED"

    def test_hello_carries_mission(self):
        md, cfg = make_pair(duration=1.0)
        _, messages = asyncio.run(run_session(
            md, cfg, ProtocolOptions(run=RunOptions(thread="maneuver")),
            lambda port: reading_client(port)))
        hello = messages[0]
        assert hello["schema_version"] == "1"
        assert hello["mission"]["objective"] == "area_search"
        assert hello["thread"] == "maneuver"

    def test_end_report_matches_offline_score(self):
        md, cfg = make_pair(duration=2.0)
        log, messages = asyncio.run(run_session(
            md, cfg, ProtocolOptions(run=RunOptions(thread="maneuver")),
            lambda port: reading_client(port)))
        end = messages[-1]
        assert end["report"] == score_mission(log, md).to_dict()
        assert end["mission_failed"] is False


class TestPerceptionThread:
    def test_detections_never_leak_ground_truth(self):
        md, cfg = make_pair(duration=6.0)
        path = timed_path_from_polyline([Point2(0, 0), Point2(50, 50), Point2(90, 90)],
                                        speed=20.0, z_start=80.0)
        options = ProtocolOptions(run=RunOptions(thread="perception"),
                                  scripted_path=path)
        log, messages = asyncio.run(run_session(md, cfg, options,
                                                lambda port: reading_client(port)))
        dets = [m for m in messages if m["kind"] == "detection"]
        assert dets, "scripted overflight should produce detections"
        for d in dets:
            assert "true_entity_id" not in d
            assert d["track_id"].startswith("trk_")
        # the server-side log keeps ground truth
        assert any(e.get("true_entity_id") == "car_000" for e in log.events
                   if e["kind"] == "detection")


class TestCommands:
    def test_waypoint_applies_next_tick(self):
        md, cfg = make_pair(duration=3.0)
        opts = ProtocolOptions(run=RunOptions(thread="maneuver"), lockstep=True)

        async def client(port):
            reader, writer = await asyncio.open_connection("127.0.0.1", port)
            messages = []
            command_tick = None
            while True:
                line = await asyncio.wait_for(reader.readline(), timeout=10.0)
                if not line:
                    break
                msg = loads_line(line.decode())
                messages.append(msg)
                if msg["kind"] == "tick":
                    if msg["tick"] == 5 and command_tick is None:
                        command_tick = msg["tick"]
                        writer.write((json.dumps(
                            {"kind": "command",
                             "waypoints": [{"x": 0.0, "y": 100.0, "z": 80.0}]}) + "\n"
                        ).encode())
                    else:
                        writer.write(b'{"kind":"ack"}\n')
                    await writer.drain()
                if msg["kind"] == "end":
                    break
            writer.close()
            return messages

        log, messages = asyncio.run(run_session(md, cfg, opts, client))
        command_events = [e for e in log.events if e["kind"] == "command"]
        assert command_events and command_events[0]["tick"] == 6
        # pose stationary through tick 6 (command applied during tick 6's step),
        # moving from tick 6 onward
        ticks = {m["tick"]: m for m in messages if m["kind"] == "tick"}
        assert ticks[5]["uav"]["position"]["y"] == pytest.approx(0.0)
        assert ticks[6]["uav"]["position"]["y"] > 0.0
        acks = [m for m in messages if m["kind"] == "ack"]
        assert acks and acks[0]["tick"] == 6

    def test_declare_target_scores_disambiguation(self):
        md, cfg = make_pair(duration=2.0)
        track = track_id_for(cfg.seed, "car_000")

        async def client(port):
            return await reading_client(port, script={
                3: [json.dumps({"kind": "command", "declare_target": track})]})

        log, messages = asyncio.run(run_session(
            md, cfg, ProtocolOptions(run=RunOptions(thread="maneuver"),
                                     tick_interval=0.005), client))
        report = score_mission(log, md)
        assert report.correct_disambiguation is True

    def test_malformed_line_gets_error_and_session_continues(self):
        md, cfg = make_pair(duration=2.0)

        async def client(port):
            return await reading_client(port, script={
                2: ["this is not json"],
                4: [json.dumps({"kind": "command", "waypoints": "nope"})],
            })

        log, messages = asyncio.run(run_session(
            md, cfg, ProtocolOptions(run=RunOptions(thread="maneuver"),
                                     tick_interval=0.005), client))
        errors = [m for m in messages if m["kind"] == "error"]
        assert len(errors) == 2
        assert all(e["reason"] == "BAD_MESSAGE" for e in errors)
        assert messages[-1]["kind"] == "end"
        assert log.status == "COMPLETED"

    def test_client_disconnect_flags_client_error(self):
        md, cfg = make_pair(duration=30.0)

        async def quitter(port):
            reader, writer = await asyncio.open_connection("127.0.0.1", port)
            await reader.readline()  # hello
            writer.close()
            try:
                await writer.wait_closed()
            except ConnectionError:
                pass
            return []

        log, _ = asyncio.run(run_session(
            md, cfg, ProtocolOptions(run=RunOptions(thread="maneuver")), quitter))
        assert log.status in ("COMPLETED", "CLIENT_ERROR")

    def test_session_log_deterministic_for_same_commands(self):
        md, cfg = make_pair(duration=2.0)
        script = {3: [json.dumps({"kind": "command",
                                  "waypoints": [{"x": 10.0, "y": 0.0, "z": 80.0}]})]}
        opts = ProtocolOptions(run=RunOptions(thread="maneuver"), lockstep=False)

        async def client(port):
            return await reading_client(port, script=dict(script))

        log1, _ = asyncio.run(run_session(md, cfg, opts, client))

        async def client2(port):
            return await reading_client(port, script=dict(script))

        log2, _ = asyncio.run(run_session(md, cfg, opts, client2))
        k1 = [(e["kind"], e["tick"]) for e in log1.events if e["kind"] != "tick"]
        k2 = [(e["kind"], e["tick"]) for e in log2.events if e["kind"] != "tick"]
        assert k1 == k2
