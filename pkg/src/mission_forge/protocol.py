"""Line-delimited wire protocol for external algorithm clients.

One UTF-8 JSON object per line, first field ``kind``. The server opens
with ``hello`` (schema version plus the full mission description), streams
``tick`` messages (the heartbeat) with per-thread ``detection`` or
``perfect_report`` payloads, accepts ``command`` lines (waypoint lists or
a target declaration) that take effect on the next tick, and closes with
``end`` carrying the metrics report. Detections never contain ground-truth
entity ids; ground truth reaches clients only via ``perfect_report`` in
maneuver mode.
"""

from __future__ import annotations

import asyncio
import sys
from dataclasses import dataclass, field

from .canonical import loads_line, message_dumps
from .errors import DocumentError, ProtocolError
from .geometry import Point3, TimedPath
from .scenario import MissionDescription, SimulationConfig
from .scoring import score_mission
from .serde import mission_to_dict, point2_to_dict, pose_to_dict
from .sim import MissionEngine, MissionLog, RunOptions

MESSAGE_KINDS = frozenset(
    {"hello", "tick", "detection", "perfect_report", "command", "ack", "error", "end"})


@dataclass
class ProtocolOptions:
    run: RunOptions = field(default_factory=RunOptions)
    scripted_path: TimedPath | None = None
    lockstep: bool = False
    # Wall seconds to pause between ticks; 0 runs as fast as possible.
    # Interactive (non-lockstep) clients need a nonzero value to get their
    # commands in at predictable ticks.
    tick_interval: float = 0.0


def parse_command(obj: dict) -> dict:
    """Validate a client message; returns a normalized command dict."""
    kind = obj.get("kind")
    if kind not in MESSAGE_KINDS:
        raise ProtocolError(f"unknown message kind {obj.get('kind')!r}", code="BAD_MESSAGE")
    if kind == "ack":
        return {"kind": "ack"}
    if kind != "command":
        raise ProtocolError(f"clients may only send command/ack, got {kind!r}",
                            code="BAD_MESSAGE")
    if "waypoints" in obj:
        wps = obj["waypoints"]
        if not isinstance(wps, list) or not wps:
            raise ProtocolError("waypoints must be a non-empty array", code="BAD_MESSAGE")
        out = []
        for w in wps:
            if not (isinstance(w, dict) and all(
                    isinstance(w.get(k), (int, float)) and not isinstance(w.get(k), bool)
                    for k in ("x", "y", "z"))):
                raise ProtocolError("each waypoint needs numeric x, y, z", code="BAD_MESSAGE")
            out.append(Point3(float(w["x"]), float(w["y"]), float(w["z"])))
        return {"kind": "command", "waypoints": out}
    if "declare_target" in obj:
        track = obj["declare_target"]
        if not isinstance(track, str):
            raise ProtocolError("declare_target must be a track id string", code="BAD_MESSAGE")
        return {"kind": "command", "declare_target": track}
    raise ProtocolError("command needs waypoints or declare_target", code="BAD_MESSAGE")


class MissionSession:
    """One client connection driving (or observing) one mission."""

    def __init__(self, md: MissionDescription, cfg: SimulationConfig,
                 options: ProtocolOptions):
        self.md = md
        self.cfg = cfg
        self.options = options
        policy = options.scripted_path
        self.engine = MissionEngine(md, cfg, policy, options.run,
                                    policy_label="client" if policy is None else "scripted")

    async def run(self, reader: asyncio.StreamReader,
                  writer: asyncio.StreamWriter) -> MissionLog:
        engine = self.engine
        queue: asyncio.Queue = asyncio.Queue()
        eof = asyncio.Event()

        async def pump():
            while True:
                try:
                    line = await reader.readline()
                except (ConnectionError, asyncio.IncompleteReadError):
                    break
                if not line:
                    break
                await queue.put(line.decode("utf-8", errors="replace").strip())
            eof.set()
            await queue.put(None)

        pump_task = asyncio.create_task(pump())

        def send(obj: dict) -> None:
            writer.write((message_dumps(obj) + "\n").encode("utf-8"))

        status = "COMPLETED"
        try:
            send({"kind": "hello", "schema_version": "1",
                  "thread": engine.options.thread,
                  "tick_dt": self.cfg.tick_dt,
                  "mission_duration": self.md.mission_duration,
                  "total_ticks": engine.total_ticks,
                  "mission": mission_to_dict(self.md)})
            await writer.drain()

            sent_first_tick = False
            while not engine.finished:
                # In lockstep mode, wait for one client message per tick (the
                # reply to the tick just sent) before advancing the world.
                if self.options.lockstep and sent_first_tick and not eof.is_set():
                    line = await queue.get()
                    if line is not None:
                        self._handle_line(line, send)
                while not queue.empty():
                    line = queue.get_nowait()
                    if line is not None:
                        self._handle_line(line, send)
                bundle = engine.tick_once()
                send({"kind": "tick", "tick": bundle["tick"], "t": bundle["t"],
                      "uav": pose_to_dict(bundle["uav"])})
                sent_first_tick = True
                for det in bundle["detections"]:
                    send({"kind": "detection", "tick": bundle["tick"], "t": bundle["t"],
                          "track_id": det.track_id,
                          "observed_class": det.observed_class,
                          "observed_attributes": det.observed_attributes,
                          "position_estimate": point2_to_dict(det.position_estimate),
                          "confidence": det.confidence})
                if bundle["report"] is not None:
                    rep = bundle["report"]
                    send({"kind": "perfect_report", "tick": bundle["tick"],
                          "t": bundle["t"], "entity_id": rep.entity_id,
                          "pose": pose_to_dict(rep.pose)})
                await writer.drain()
                if self.options.tick_interval > 0.0:
                    await asyncio.sleep(self.options.tick_interval)
        except (ConnectionError, BrokenPipeError):
            status = "CLIENT_ERROR"
        finally:
            pump_task.cancel()

        log = engine.finish(status)
        if status == "COMPLETED":
            report = score_mission(log, self.md)
            try:
                send({"kind": "end", "tick": engine.world.tick, "t": engine.world.time,
                      "status": status, "mission_failed": log.mission_failed,
                      "report": report.to_dict()})
                await writer.drain()
            except (ConnectionError, BrokenPipeError):
                log.status = "CLIENT_ERROR"
        return log

    def _handle_line(self, line: str, send) -> None:
        if not line:
            return
        try:
            obj = loads_line(line)
            cmd = parse_command(obj)
        except (DocumentError, ProtocolError) as exc:
            send({"kind": "error", "reason": "BAD_MESSAGE", "detail": str(exc)})
            return
        if cmd["kind"] == "ack":
            return
        if "waypoints" in cmd:
            applies_at = self.engine.submit_waypoints(cmd["waypoints"])
            send({"kind": "ack", "tick": applies_at})
        elif "declare_target" in cmd:
            self.engine.submit_declaration(cmd["declare_target"])
            send({"kind": "ack", "tick": self.engine.world.tick})


def _parse_endpoint(endpoint: str) -> tuple[str, int]:
    host, sep, port = endpoint.rpartition(":")
    if not sep or not port.isdigit():
        raise ProtocolError(f"endpoint must be host:port, got {endpoint!r}",
                            code="BAD_ENDPOINT")
    return host or "127.0.0.1", int(port)


async def serve_one_async(md: MissionDescription, cfg: SimulationConfig, endpoint: str,
                          options: ProtocolOptions | None = None) -> MissionLog:
    """Listen on endpoint, serve exactly one client session, return its log."""
    options = options or ProtocolOptions()
    done: asyncio.Future = asyncio.get_running_loop().create_future()

    async def handler(reader, writer):
        try:
            session = MissionSession(md, cfg, options)
            log = await session.run(reader, writer)
            if not done.done():
                done.set_result(log)
        except Exception as exc:  # surface session bugs to the caller
            if not done.done():
                done.set_exception(exc)
        finally:
            writer.close()

    host, port = _parse_endpoint(endpoint)
    server = await asyncio.start_server(handler, host, port)
    try:
        return await done
    finally:
        server.close()
        await server.wait_closed()


def serve_client(md: MissionDescription, cfg: SimulationConfig, endpoint: str,
                 options: ProtocolOptions | None = None) -> MissionLog:
    """Blocking wrapper: serve one session over TCP (host:port) or stdio ("-")."""
    if endpoint == "-":
        return asyncio.run(serve_stdio(md, cfg, options))
    return asyncio.run(serve_one_async(md, cfg, endpoint, options))


async def serve_stdio(md: MissionDescription, cfg: SimulationConfig,
                      options: ProtocolOptions | None = None) -> MissionLog:
    """One session over this process's stdin/stdout."""
    options = options or ProtocolOptions()
    loop = asyncio.get_running_loop()
    reader = asyncio.StreamReader()
    await loop.connect_read_pipe(lambda: asyncio.StreamReaderProtocol(reader), sys.stdin)
    w_transport, w_protocol = await loop.connect_write_pipe(
        lambda: asyncio.streams.FlowControlMixin(), sys.stdout)
    writer = asyncio.StreamWriter(w_transport, w_protocol, None, loop)
    session = MissionSession(md, cfg, options)
    return await session.run(reader, writer)


async def serve_forever_async(md: MissionDescription, cfg: SimulationConfig, endpoint: str,
                              options: ProtocolOptions | None = None,
                              on_log=None) -> None:
    """Host concurrent sessions, one fresh mission per connection."""
    options = options or ProtocolOptions()

    async def handler(reader, writer):
        try:
            session = MissionSession(md, cfg, options)
            log = await session.run(reader, writer)
            if on_log is not None:
                on_log(log)
        finally:
            writer.close()

    host, port = _parse_endpoint(endpoint)
    server = await asyncio.start_server(handler, host, port)
    async with server:
        await server.serve_forever()
