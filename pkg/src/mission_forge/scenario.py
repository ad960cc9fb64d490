"""The two scenario documents: mission description and simulation config.

Document objects are plain data holders; structural problems surface as
parse errors during deserialization while semantic invariants are reported
as coded findings by ``validate_mission`` / ``validate_config`` so that a
document can be loaded, inspected, and repaired.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import shapely

from .camera import CameraModel
from .errors import GeometryError
from .geometry import (
    ExtrudedObstacle,
    Point2,
    Point3,
    Polygon,
    Pose,
    BoundingBox3,
    TimedPath,
    bbox_world,
    polygon_from_shapely,
)
from .relations import ALL_OPERATORS, SymbolicRelation

SCHEMA_VERSION = "1"
DEFAULT_MISSION_DURATION = 600.0
DEFAULT_TICK_DT = 0.1
PRIOR_SUM_TOL = 1e-9
TRAJECTORY_START_TOL = 1e-6


class Objective(str, Enum):
    AREA_SEARCH = "area_search"
    ROUTE_SEARCH = "route_search"
    MOVING_TARGET_PURSUIT = "moving_target_pursuit"


@dataclass(frozen=True)
class TimeWindow:
    """No-earlier-than / no-later-than activation bounds, seconds."""

    net: float
    nlt: float

    def contains(self, t: float) -> bool:
        return self.net <= t <= self.nlt


@dataclass
class AreaOfInterest:
    id: str
    polygon: Polygon
    window: TimeWindow | None = None


@dataclass
class KeepOutZone:
    id: str
    polygon: Polygon
    window: TimeWindow | None = None

    def active_at(self, t: float) -> bool:
        return self.window is None or self.window.contains(t)

    @property
    def always_active(self) -> bool:
        return self.window is None


@dataclass
class PriorCell:
    polygon: Polygon
    prob: float


@dataclass
class AreaPriorMap:
    cells: list[PriorCell]


@dataclass
class RouteOfInterest:
    polyline: list[Point2]
    band_width: float


@dataclass
class TargetSpec:
    entity_class: str
    attributes: dict[str, object] = field(default_factory=dict)


@dataclass
class MissionDescription:
    objective: Objective
    target_spec: TargetSpec
    aois: list[AreaOfInterest] = field(default_factory=list)
    route: RouteOfInterest | None = None
    kozs: list[KeepOutZone] = field(default_factory=list)
    priors: AreaPriorMap | None = None
    relations: list[SymbolicRelation] = field(default_factory=list)
    mission_duration: float = DEFAULT_MISSION_DURATION


@dataclass
class EntitySpec:
    """One scene entity. ``bbox`` is body-frame: its center and yaw are
    offsets from the entity pose, so the box follows a moving entity."""

    id: str
    entity_class: str
    initial_pose: Pose
    bbox: BoundingBox3
    attributes: dict[str, object] = field(default_factory=dict)
    trajectory: TimedPath | None = None
    is_target: bool = False
    is_confuser: bool = False

    def pose_at(self, t: float) -> Pose:
        if self.trajectory is None:
            return self.initial_pose
        return self.trajectory.pose_at(t)

    def bbox_at(self, pose: Pose) -> BoundingBox3:
        """World-frame bounding box when the entity is at the given pose."""
        return bbox_world(self.bbox, pose)


@dataclass
class EnvironmentConditions:
    snow: float = 0.0
    rain: float = 0.0
    fog: float = 0.0
    wind_speed_norm: float = 0.0
    foliage: float = 0.0
    camera_noise: float = 0.0
    wind_direction: float = 0.0
    time_of_day: float = 12.0

    @property
    def weather_severity(self) -> float:
        return max(self.snow, self.rain, self.fog)


@dataclass
class SimulationConfig:
    entities: list[EntitySpec]
    obstacles: list[ExtrudedObstacle]
    environment: EnvironmentConditions
    uav_start: Pose
    cameras: list[CameraModel]
    seed: int
    tick_dt: float = DEFAULT_TICK_DT

    def target_entity(self) -> EntitySpec | None:
        targets = [e for e in self.entities if e.is_target]
        return targets[0] if len(targets) == 1 else None


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Finding:
    code: str
    path: str
    message: str


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.findings

    def codes(self) -> set[str]:
        return {f.code for f in self.findings}

    def add(self, code: str, path: str, message: str) -> None:
        self.findings.append(Finding(code, path, message))

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return "; ".join(f"{f.code}@{f.path}" for f in self.findings)


def _check_window(window: TimeWindow | None, path: str, report: ValidationReport) -> None:
    if window is None:
        return
    if not (math.isfinite(window.net) and math.isfinite(window.nlt)):
        report.add("WINDOW_INVERTED", path, "window bounds must be finite")
    elif not (0.0 <= window.net <= window.nlt):
        report.add("WINDOW_INVERTED", path,
                   f"expected 0 <= net <= nlt, got [{window.net}, {window.nlt}]")


def _route_degenerate(route: RouteOfInterest) -> str | None:
    if len(route.polyline) < 2:
        return "polyline needs at least 2 points"
    for i, (a, b) in enumerate(zip(route.polyline, route.polyline[1:])):
        if a == b:
            return f"consecutive points {i} and {i + 1} coincide"
    if not (math.isfinite(route.band_width) and route.band_width > 0.0):
        return "band_width must be > 0"
    return None


def validate_mission(md: MissionDescription) -> ValidationReport:
    """Check every mission-description invariant; findings are data, not errors."""
    report = ValidationReport()
    if not (math.isfinite(md.mission_duration) and md.mission_duration > 0.0):
        report.add("MISSION_DURATION_INVALID", "mission_duration",
                   "mission_duration must be a positive number")

    seen: set[str] = set()
    for i, aoi in enumerate(md.aois):
        if aoi.id in seen:
            report.add("DUPLICATE_ID", f"aois[{i}].id", f"duplicate AOI id {aoi.id!r}")
        seen.add(aoi.id)
        _check_window(aoi.window, f"aois[{i}].window", report)
    seen = set()
    for i, koz in enumerate(md.kozs):
        if koz.id in seen:
            report.add("DUPLICATE_ID", f"kozs[{i}].id", f"duplicate KOZ id {koz.id!r}")
        seen.add(koz.id)
        _check_window(koz.window, f"kozs[{i}].window", report)

    if md.objective is Objective.AREA_SEARCH and not md.aois:
        report.add("AREA_SEARCH_WITHOUT_AOI", "aois", "area search requires at least one AOI")
    if md.objective is Objective.ROUTE_SEARCH and md.route is None:
        report.add("ROUTE_SEARCH_WITHOUT_ROUTE", "route", "route search requires a route")

    if md.route is not None:
        reason = _route_degenerate(md.route)
        if reason:
            report.add("ROUTE_DEGENERATE", "route", reason)

    if md.priors is not None:
        cells = md.priors.cells
        total = 0.0
        for i, cell in enumerate(cells):
            if not (math.isfinite(cell.prob) and 0.0 <= cell.prob <= 1.0):
                report.add("PRIOR_PROB_RANGE", f"priors.cells[{i}].prob",
                           f"probability {cell.prob} outside [0, 1]")
            else:
                total += cell.prob
        if abs(total - 1.0) > PRIOR_SUM_TOL:
            report.add("PRIOR_NOT_NORMALIZED", "priors",
                       f"cell probabilities sum to {total!r}, expected 1")
        shp = [c.polygon.to_shapely() for c in cells]
        for i in range(len(shp)):
            for j in range(i + 1, len(shp)):
                if shp[i].intersection(shp[j]).area > 1e-6:
                    report.add("PRIOR_CELLS_OVERLAP", f"priors.cells[{i}]",
                               f"cells {i} and {j} overlap")
        if md.aois:
            union = shapely.unary_union([a.polygon.to_shapely() for a in md.aois]).buffer(1e-6)
            for i, g in enumerate(shp):
                if not union.contains(g):
                    report.add("PRIOR_CELL_OUTSIDE_AOI", f"priors.cells[{i}]",
                               "cell extends outside the AOI union")
        else:
            for i in range(len(cells)):
                report.add("PRIOR_CELL_OUTSIDE_AOI", f"priors.cells[{i}]",
                           "priors present but no AOI is defined")

    target_ids = {rel.target_id for rel in md.relations}
    if len(target_ids) > 1:
        report.add("RELATION_TARGET_INCONSISTENT", "relations",
                   f"relations reference multiple targets: {sorted(target_ids)}")
    for i, rel in enumerate(md.relations):
        if rel.operator not in ALL_OPERATORS:
            report.add("RELATION_BAD_OPERATOR", f"relations[{i}].operator",
                       f"unknown operator {rel.operator!r}")
    return report


def validate_config(cfg: SimulationConfig) -> ValidationReport:
    report = ValidationReport()
    seen: set[str] = set()
    targets = 0
    for i, ent in enumerate(cfg.entities):
        if ent.id in seen:
            report.add("DUPLICATE_ENTITY_ID", f"entities[{i}].id",
                       f"duplicate entity id {ent.id!r}")
        seen.add(ent.id)
        if ent.is_target:
            targets += 1
        if ent.trajectory is not None:
            p0 = ent.trajectory.samples[0][1].position
            q = ent.initial_pose.position
            if math.dist(p0, q) > TRAJECTORY_START_TOL:
                report.add("TRAJECTORY_START_MISMATCH", f"entities[{i}].trajectory",
                           "trajectory must start at initial_pose")
    if targets == 0:
        report.add("NO_TARGET", "entities", "exactly one entity must be marked is_target")
    elif targets > 1:
        report.add("MULTIPLE_TARGETS", "entities",
                   f"{targets} entities marked is_target, expected 1")

    env = cfg.environment
    for name in ("snow", "rain", "fog", "wind_speed_norm", "foliage", "camera_noise"):
        v = getattr(env, name)
        if not (math.isfinite(v) and 0.0 <= v <= 1.0):
            report.add("ENV_OUT_OF_RANGE", f"environment.{name}", f"{name}={v} outside [0, 1]")
    if not math.isfinite(env.wind_direction):
        report.add("ENV_OUT_OF_RANGE", "environment.wind_direction", "must be finite")
    if not (math.isfinite(env.time_of_day) and 0.0 <= env.time_of_day < 24.0):
        report.add("ENV_OUT_OF_RANGE", "environment.time_of_day",
                   f"time_of_day={env.time_of_day} outside [0, 24)")

    if not (isinstance(cfg.seed, int) and 0 <= cfg.seed < (1 << 64)):
        report.add("SEED_RANGE", "seed", "seed must be an unsigned 64-bit integer")
    if not (math.isfinite(cfg.tick_dt) and cfg.tick_dt > 0.0):
        report.add("TICK_DT_INVALID", "tick_dt", "tick_dt must be > 0")

    for i, cam in enumerate(cfg.cameras):
        if not (0.0 < cam.hfov < 180.0 and 0.0 < cam.vfov < 180.0):
            report.add("CAMERA_INVALID", f"cameras[{i}]", "fov must lie in (0, 180)")
        if not (math.isfinite(cam.max_range) and cam.max_range > 0.0):
            report.add("CAMERA_INVALID", f"cameras[{i}].max_range", "max_range must be > 0")
        if not (-90.0 <= cam.pitch <= 90.0):
            report.add("CAMERA_INVALID", f"cameras[{i}].pitch", "pitch must lie in [-90, 90]")
    return report


def validate_pair(md: MissionDescription, cfg: SimulationConfig) -> ValidationReport:
    """Cross-document consistency between a mission and its sim config."""
    report = ValidationReport()
    target = cfg.target_entity()
    if target is None:
        report.add("NO_TARGET", "entities", "config lacks a unique target entity")
        return report
    if target.entity_class != md.target_spec.entity_class:
        report.add("TARGET_SPEC_MISMATCH", "target_spec.entity_class",
                   f"target entity is {target.entity_class!r}, "
                   f"spec says {md.target_spec.entity_class!r}")
    for key, value in md.target_spec.attributes.items():
        if target.attributes.get(key) != value:
            report.add("TARGET_SPEC_MISMATCH", f"target_spec.attributes.{key}",
                       "target entity attributes do not match the target spec")
    for i, rel in enumerate(md.relations):
        if rel.target_id != target.id:
            report.add("RELATION_TARGET_UNKNOWN", f"relations[{i}].target_id",
                       f"relation targets {rel.target_id!r} but target entity is {target.id!r}")
    return report


# ---------------------------------------------------------------------------
# route band


def route_band(route: RouteOfInterest, quad_segs: int = 16) -> Polygon:
    """Search band: all points within band_width/2 of the route polyline.

    Round joins and caps; returned as a simple polygon approximation (any
    interior holes a self-crossing route would enclose are filled).
    """
    reason = _route_degenerate(route)
    if reason:
        raise GeometryError(f"degenerate route: {reason}", code="INVALID_ROUTE")
    line = shapely.LineString([(p.x, p.y) for p in route.polyline])
    buffered = line.buffer(route.band_width / 2.0, quad_segs=quad_segs)
    if buffered.geom_type == "MultiPolygon":  # cannot happen for a connected line
        buffered = max(buffered.geoms, key=lambda g: g.area)
    return polygon_from_shapely(buffered)
