"""Deterministic tick-based 2.5D world.

Entities replay their configured trajectories, the UAV moves under one of
four command types, cameras detect entities with environment-degraded
range and attribute corruption, and every event lands in a line-delimited
mission log whose hash is a pure function of (mission, config, policy,
seed, tick_dt).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

from . import profile
from .camera import CameraModel, camera_footprint
from .canonical import canonical_dumps, content_hash, loads_line
from .constraints import inside_active_aoi
from .errors import DocumentError, SimulationError
from .geometry import Point2, Point3, Pose, TimedPath, line_of_sight, point_in_polygon
from .planning import FollowStep, UavKinematics, follow_waypoints
from .relations import SceneSnapshot, SceneTimeline, make_entity
from .scenario import (
    EnvironmentConditions,
    KeepOutZone,
    MissionDescription,
    SimulationConfig,
    validate_config,
    validate_mission,
    validate_pair,
)
from .seeding import derive_seed, make_rng
from .serde import pose_to_dict, point2_to_dict, serialize_config, serialize_mission

# ---------------------------------------------------------------------------
# commands


@dataclass(frozen=True)
class WaypointCommand:
    waypoints: tuple[Point3, ...]
    kin: UavKinematics = UavKinematics()


@dataclass(frozen=True)
class VelocityCommand:
    velocity: tuple[float, float, float]
    kin: UavKinematics = UavKinematics()


@dataclass(frozen=True)
class PlaybackCommand:
    """Position-held trajectory playback; wind does not perturb it."""

    path: TimedPath


Command = WaypointCommand | VelocityCommand | PlaybackCommand | None


# ---------------------------------------------------------------------------
# world state


@dataclass(frozen=True)
class WorldState:
    """Tick-stepped world snapshot.

    Randomness is counter-based: generators are re-derived from
    (cfg.seed, tick, entity id) wherever they are consumed, so the tick
    index itself is the RNG state and replays are order-independent.
    """

    time: float
    tick: int
    uav: Pose
    entity_poses: dict[str, Pose]
    inside_koz_ids: frozenset[str]
    cfg: SimulationConfig
    kozs: tuple[KeepOutZone, ...] = ()


@dataclass(frozen=True)
class Detection:
    track_id: str
    observed_class: str
    observed_attributes: dict[str, object]
    position_estimate: Point2
    confidence: float
    true_entity_id: str
    camera_index: int


@dataclass(frozen=True)
class GroundTruthReport:
    entity_id: str
    pose: Pose
    time: float


def init_world(cfg: SimulationConfig) -> WorldState:
    """World at t=0: entities at initial poses, UAV at its start pose."""
    report = validate_config(cfg)
    if not report.ok:
        raise SimulationError(f"config does not validate: {report}", code="INVALID_CONFIG")
    return WorldState(
        time=0.0,
        tick=0,
        uav=cfg.uav_start,
        entity_poses={e.id: e.initial_pose for e in cfg.entities},
        inside_koz_ids=frozenset(),
        cfg=cfg,
    )


def track_id_for(seed: int, entity_id: str) -> str:
    """Stable anonymous track id; does not reveal the entity id."""
    return f"trk_{derive_seed(seed, 'track', entity_id):016x}"


def step(world: WorldState, command: Command, cfg: SimulationConfig) -> tuple[WorldState, list[dict], FollowStep | None]:
    """Advance one tick.

    Mobile entities take their interpolated trajectory poses. The UAV
    moves per the command; hover, waypoint, and velocity modes also drift
    with the wind (wind_speed_norm * 3 m/s along wind_direction), while
    trajectory playback is position-held. KOZ enter/exit transitions are
    returned as events.
    """
    dt = cfg.tick_dt
    t_new = world.time + dt
    tick_new = world.tick + 1
    follow: FollowStep | None = None

    if isinstance(command, PlaybackCommand):
        uav = command.path.pose_at(t_new)
    else:
        if isinstance(command, WaypointCommand):
            follow = follow_waypoints(world.uav, command.waypoints, command.kin, dt)
            uav = follow.pose
        elif isinstance(command, VelocityCommand):
            vx, vy, vz = command.velocity
            speed = math.sqrt(vx * vx + vy * vy + vz * vz)
            limit = command.kin.max_speed
            scale = limit / speed if speed > limit else 1.0
            p = world.uav.position
            uav = Pose(Point3(p.x + vx * scale * dt, p.y + vy * scale * dt,
                              p.z + vz * scale * dt), world.uav.yaw)
        elif command is None:
            uav = world.uav
        else:
            raise SimulationError(f"unknown command type {type(command).__name__}",
                                  code="BAD_COMMAND")
        env = cfg.environment
        drift = env.wind_speed_norm * profile.WIND_DRIFT_FULL * dt
        if drift != 0.0:
            rad = math.radians(env.wind_direction)
            p = uav.position
            uav = Pose(Point3(p.x + drift * math.cos(rad), p.y + drift * math.sin(rad), p.z),
                       uav.yaw)

    poses = {e.id: e.pose_at(t_new) for e in cfg.entities}

    now_inside = frozenset(
        k.id for k in world.kozs
        if k.active_at(t_new) and point_in_polygon(uav.position.xy, k.polygon))
    events: list[dict] = []
    for koz_id in sorted(now_inside - world.inside_koz_ids):
        events.append({"kind": "violation_enter", "tick": tick_new, "t": t_new,
                       "koz_id": koz_id})
    for koz_id in sorted(world.inside_koz_ids - now_inside):
        events.append({"kind": "violation_exit", "tick": tick_new, "t": t_new,
                       "koz_id": koz_id})

    new_world = replace(world, time=t_new, tick=tick_new, uav=uav,
                        entity_poses=poses, inside_koz_ids=now_inside)
    return new_world, events, follow


# ---------------------------------------------------------------------------
# perception


def detect(world: WorldState, cam: CameraModel, env: EnvironmentConditions,
           camera_index: int = 0) -> list[Detection]:
    """Entities visible to one camera this tick.

    Detectable = plan-view bbox center inside the camera footprint, slant
    range within the weather-degraded effective range, and clear line of
    sight to the entity's top center. Attributes are independently
    corrupted with probability p_corrupt from the seeded counter RNG.
    """
    cfg = world.cfg
    try:
        fp = camera_footprint(world.uav, cam)
    except SimulationError:
        return []
    effective_range = cam.max_range * (1.0 - profile.WEATHER_RANGE_PENALTY * env.weather_severity)
    p_corrupt = min(1.0, profile.CORRUPT_NOISE_COEFF * env.camera_noise +
                    profile.CORRUPT_WEATHER_COEFF * env.weather_severity)
    out: list[Detection] = []
    for spec in cfg.entities:
        pose = world.entity_poses[spec.id]
        bbox = spec.bbox_at(pose)
        center = bbox.center
        slant = math.dist(world.uav.position, center)
        if slant > effective_range:
            continue
        if not point_in_polygon(center.xy, fp):
            continue
        top = Point3(center.x, center.y, bbox.max_z)
        if not line_of_sight(world.uav.position, top, tuple(cfg.obstacles)):
            continue
        rng = make_rng(cfg.seed, "detect", world.tick, spec.id)
        observed: dict[str, object] = {}
        for name in sorted(spec.attributes):
            true_value = spec.attributes[name]
            if p_corrupt > 0.0 and rng.random() < p_corrupt:
                observed[name] = profile.decoy_value(name, true_value, rng)
            else:
                observed[name] = true_value
        out.append(Detection(
            track_id=track_id_for(cfg.seed, spec.id),
            observed_class=spec.entity_class,
            observed_attributes=observed,
            position_estimate=center.xy,
            confidence=1.0 - p_corrupt,
            true_entity_id=spec.id,
            camera_index=camera_index,
        ))
    return out


def target_in_any_footprint(world: WorldState, cams: Sequence[CameraModel]) -> bool:
    """Frame-only visibility of the target (no range or occlusion test)."""
    target = world.cfg.target_entity()
    if target is None:
        return False
    center = target.bbox_at(world.entity_poses[target.id]).center
    for cam in cams:
        try:
            fp = camera_footprint(world.uav, cam)
        except SimulationError:
            continue
        if point_in_polygon(center.xy, fp):
            return True
    return False


def perfect_perception_report(world: WorldState, cams: Sequence[CameraModel],
                              require_los: bool = True) -> GroundTruthReport | None:
    """Ground-truth report for the maneuver-only thread.

    Fires when the target's center sits inside at least one camera
    footprint; by default a clear line of sight is also required
    (toggleable, since frame membership alone is the other defensible
    reading).
    """
    target = world.cfg.target_entity()
    if target is None:
        return None
    pose = world.entity_poses[target.id]
    bbox = target.bbox_at(pose)
    center = bbox.center
    for cam in cams:
        try:
            fp = camera_footprint(world.uav, cam)
        except SimulationError:
            continue
        if not point_in_polygon(center.xy, fp):
            continue
        if require_los:
            top = Point3(center.x, center.y, bbox.max_z)
            if not line_of_sight(world.uav.position, top, tuple(world.cfg.obstacles)):
                continue
        return GroundTruthReport(entity_id=target.id, pose=pose, time=world.time)
    return None


def scene_at(cfg: SimulationConfig, t: float) -> SceneSnapshot:
    """Ground-truth scene snapshot from a sim config at time t."""
    entities = {}
    for spec in cfg.entities:
        pose = spec.pose_at(t)
        entities[spec.id] = make_entity(pose=pose, bbox=spec.bbox,
                                        entity_class=spec.entity_class,
                                        attributes=dict(spec.attributes))
    return SceneSnapshot(time=t, entities=entities, obstacles=tuple(cfg.obstacles))


def timeline_from_config(cfg: SimulationConfig, times: Sequence[float]) -> SceneTimeline:
    return SceneTimeline(tuple(scene_at(cfg, t) for t in sorted(set(times))))


# ---------------------------------------------------------------------------
# mission log


@dataclass
class MissionLog:
    meta: dict
    events: list[dict] = field(default_factory=list)
    status: str = "INCOMPLETE"
    mission_failed: bool = False

    def to_lines(self) -> list[str]:
        lines = [canonical_dumps({"kind": "meta", **self.meta})]
        lines.extend(canonical_dumps(e) for e in self.events)
        lines.append(canonical_dumps({"kind": "end", "status": self.status,
                                      "mission_failed": self.mission_failed}))
        return lines

    def log_hash(self) -> str:
        return content_hash(("\n".join(self.to_lines()) + "\n").encode("utf-8"))

    def write(self, path: str | Path) -> None:
        Path(path).write_text("\n".join(self.to_lines()) + "\n", encoding="utf-8")

    @classmethod
    def read(cls, path: str | Path) -> "MissionLog":
        lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
        if not lines:
            raise DocumentError("empty mission log", code="BAD_LOG")
        head = loads_line(lines[0])
        if head.get("kind") != "meta":
            raise DocumentError("mission log must start with a meta line", code="BAD_LOG")
        head.pop("kind")
        log = cls(meta=head)
        for ln in lines[1:]:
            evt = loads_line(ln)
            if evt.get("kind") == "end":
                log.status = evt.get("status", "INCOMPLETE")
                log.mission_failed = bool(evt.get("mission_failed", False))
            else:
                log.events.append(evt)
        return log


# ---------------------------------------------------------------------------
# mission engine


@dataclass
class RunOptions:
    thread: str = "perception"  # "perception" | "maneuver"
    perfect_perception_los: bool = True
    baseline_declare: bool = False
    kin: UavKinematics = field(default_factory=UavKinematics)
    max_ticks: int | None = None


class MissionEngine:
    """Single-mission tick driver shared by offline runs and the protocol
    server; one engine instance per mission, never shared."""

    def __init__(self, md: MissionDescription, cfg: SimulationConfig,
                 policy: TimedPath | Sequence[Point3] | None,
                 options: RunOptions | None = None,
                 policy_label: str | None = None):
        self.options = options or RunOptions()
        if self.options.thread not in ("perception", "maneuver"):
            raise SimulationError(f"unknown thread {self.options.thread!r}",
                                  code="BAD_OPTIONS")
        for name, rep in (("mission", validate_mission(md)),
                          ("config", validate_config(cfg)),
                          ("pair", validate_pair(md, cfg))):
            if not rep.ok:
                raise SimulationError(f"{name} does not validate: {rep}",
                                      code="INVALID_INPUT")
        self.md = md
        self.cfg = cfg
        world = init_world(cfg)
        self.world = replace(world, kozs=tuple(md.kozs))

        self.playback: TimedPath | None = None
        self.waypoints: list[Point3] = []
        if isinstance(policy, TimedPath):
            self.playback = policy
            label = "scripted"
        elif policy is None:
            label = "hover"
        else:
            self.waypoints = [Point3(*map(float, w)) for w in policy]
            label = "waypoints"
        self.policy_label = policy_label or label

        target = cfg.target_entity()
        assert target is not None  # guaranteed by validate_config
        self.target_id = target.id
        self.target_track = track_id_for(cfg.seed, target.id)
        n = int(round(md.mission_duration / cfg.tick_dt))
        if self.options.max_ticks is not None:
            n = min(n, self.options.max_ticks)
        self.total_ticks = max(1, n)
        self.pending_waypoints: list[Point3] | None = None
        self.declared_track: str | None = None
        self.events: list[dict] = []
        self.meta = {
            "schema_version": "1",
            "mission_hash": content_hash(serialize_mission(md)),
            "config_hash": content_hash(serialize_config(cfg)),
            "seed": cfg.seed,
            "tick_dt": cfg.tick_dt,
            "thread": self.options.thread,
            "policy": self.policy_label,
            "perfect_perception_los": self.options.perfect_perception_los,
            "target_entity_id": self.target_id,
            "target_track_id": self.target_track,
            "total_ticks": self.total_ticks,
        }

    @property
    def finished(self) -> bool:
        return self.world.tick >= self.total_ticks

    def submit_waypoints(self, waypoints: Sequence[Point3]) -> int:
        """Queue a client waypoint list; applied at the next tick."""
        self.pending_waypoints = [Point3(*map(float, w)) for w in waypoints]
        return self.world.tick + 1

    def submit_declaration(self, track_id: str) -> None:
        self.declared_track = track_id
        self.events.append({"kind": "declare", "tick": self.world.tick,
                            "t": self.world.time, "track_id": track_id})

    def tick_once(self) -> dict:
        """Advance one tick; returns the per-tick bundle for protocol use."""
        if self.pending_waypoints is not None:
            self.waypoints = self.pending_waypoints
            self.pending_waypoints = None
            self.events.append({"kind": "command", "tick": self.world.tick + 1,
                                "t": self.world.time + self.cfg.tick_dt,
                                "waypoints": [{"x": w.x, "y": w.y, "z": w.z}
                                              for w in self.waypoints]})
        if self.playback is not None:
            command: Command = PlaybackCommand(self.playback)
        elif self.waypoints:
            command = WaypointCommand(tuple(self.waypoints), self.options.kin)
        else:
            command = None
        self.world, events, follow = step(self.world, command, self.cfg)
        if follow is not None and follow.consumed:
            self.waypoints = list(follow.remaining)
        self.events.extend(events)

        detections: list[Detection] = []
        report: GroundTruthReport | None = None
        if self.options.thread == "perception":
            seen: set[str] = set()
            for ci, cam in enumerate(self.cfg.cameras):
                for det in detect(self.world, cam, self.cfg.environment, camera_index=ci):
                    if det.true_entity_id in seen:
                        continue
                    seen.add(det.true_entity_id)
                    detections.append(det)
                    self.events.append({
                        "kind": "detection", "tick": self.world.tick, "t": self.world.time,
                        "camera": det.camera_index, "track_id": det.track_id,
                        "observed_class": det.observed_class,
                        "observed_attributes": det.observed_attributes,
                        "position_estimate": point2_to_dict(det.position_estimate),
                        "confidence": det.confidence,
                        "true_entity_id": det.true_entity_id,
                    })
        else:
            report = perfect_perception_report(self.world, self.cfg.cameras,
                                               self.options.perfect_perception_los)
            if report is not None:
                self.events.append({"kind": "perfect_report", "tick": self.world.tick,
                                    "t": self.world.time, "entity_id": report.entity_id,
                                    "pose": pose_to_dict(report.pose)})

        in_view = target_in_any_footprint(self.world, self.cfg.cameras)
        in_aoi = inside_active_aoi(self.md.aois, self.world.uav.position.xy, self.world.time)
        self.events.append({"kind": "tick", "tick": self.world.tick, "t": self.world.time,
                            "uav": pose_to_dict(self.world.uav),
                            "target_in_view": in_view, "uav_in_aoi": in_aoi})
        return {"tick": self.world.tick, "t": self.world.time, "uav": self.world.uav,
                "detections": detections, "report": report}

    def finish(self, status: str = "COMPLETED") -> MissionLog:
        if self.options.baseline_declare and self.declared_track is None:
            self._baseline_declare()
        violated = any(e["kind"] == "violation_enter" for e in self.events)
        log = MissionLog(meta=self.meta, events=self.events, status=status,
                         mission_failed=violated)
        return log

    def _baseline_declare(self) -> None:
        from .relations import disambiguate  # local import to keep module graph flat

        spec = self.md.target_spec
        candidates = [
            (e.id, dict(e.attributes)) for e in self.cfg.entities
            if e.entity_class == spec.entity_class
            and all(e.attributes.get(k) == v for k, v in spec.attributes.items())
        ]
        if not candidates:
            return
        times = [0.0]
        for e in self.cfg.entities:
            if e.trajectory is not None:
                times.extend(t for t, _ in e.trajectory.samples)
        timeline = timeline_from_config(self.cfg, times)
        result = disambiguate(candidates, self.md.relations, timeline)
        best = result.ranking[0][0]
        self.submit_declaration(track_id_for(self.cfg.seed, best))


def run_mission(md: MissionDescription, cfg: SimulationConfig,
                policy: TimedPath | Sequence[Point3] | None,
                options: RunOptions | None = None) -> MissionLog:
    """Step the world to mission_duration and return the event log.

    Identical (mission, config, policy, options, seed) always produce an
    identical log hash.
    """
    engine = MissionEngine(md, cfg, policy, options)
    while not engine.finished:
        engine.tick_once()
    return engine.finish("COMPLETED")
