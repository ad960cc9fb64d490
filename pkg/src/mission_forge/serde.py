"""Canonical JSON (de)serialization for every on-disk document.

Deserialization is strict: unknown fields, missing fields, and wrong types
raise ``DocumentError`` carrying the path of the offending field. All
writers emit canonical bytes (sorted keys, shortest float repr), so equal
documents always serialize to identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Callable

from .camera import CameraModel
from .canonical import canonical_bytes
from .errors import DocumentError, GeometryError
from .geometry import (
    BoundingBox3,
    ExtrudedObstacle,
    Point2,
    Point3,
    Polygon,
    Pose,
    TimedPath,
)
from .relations import SceneSnapshot, SymbolicRelation, make_entity
from .scenario import (
    SCHEMA_VERSION,
    AreaOfInterest,
    AreaPriorMap,
    EntitySpec,
    EnvironmentConditions,
    KeepOutZone,
    MissionDescription,
    Objective,
    PriorCell,
    RouteOfInterest,
    SimulationConfig,
    TargetSpec,
    TimeWindow,
    DEFAULT_MISSION_DURATION,
    DEFAULT_TICK_DT,
    validate_config,
    validate_mission,
)

# ---------------------------------------------------------------------------
# low-level helpers


def _expect_obj(v: Any, path: str) -> dict:
    if not isinstance(v, dict):
        raise DocumentError(f"expected object, got {type(v).__name__}",
                            code="BAD_TYPE", path=path)
    return v


def _expect_list(v: Any, path: str) -> list:
    if not isinstance(v, list):
        raise DocumentError(f"expected array, got {type(v).__name__}",
                            code="BAD_TYPE", path=path)
    return v


def _expect_str(v: Any, path: str) -> str:
    if not isinstance(v, str):
        raise DocumentError(f"expected string, got {type(v).__name__}",
                            code="BAD_TYPE", path=path)
    return v


def _expect_float(v: Any, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise DocumentError(f"expected number, got {type(v).__name__}",
                            code="BAD_TYPE", path=path)
    return float(v)


def _expect_int(v: Any, path: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise DocumentError(f"expected integer, got {type(v).__name__}",
                            code="BAD_TYPE", path=path)
    return v


def _expect_bool(v: Any, path: str) -> bool:
    if not isinstance(v, bool):
        raise DocumentError(f"expected boolean, got {type(v).__name__}",
                            code="BAD_TYPE", path=path)
    return v


def _get(d: dict, key: str, path: str) -> Any:
    if key not in d:
        raise DocumentError(f"missing required field {key!r}",
                            code="MISSING_FIELD", path=f"{path}.{key}")
    return d[key]


def _check_unknown(d: dict, allowed: set[str], path: str) -> None:
    extra = set(d) - allowed
    if extra:
        key = sorted(extra)[0]
        raise DocumentError(f"unknown field {key!r}", code="UNKNOWN_FIELD",
                            path=f"{path}.{key}")


def _attr_value(v: Any, path: str) -> Any:
    if isinstance(v, (str, bool)) or (isinstance(v, (int, float)) and not isinstance(v, bool)):
        return v
    if isinstance(v, list):
        return [_attr_value(x, f"{path}[{i}]") for i, x in enumerate(v)]
    raise DocumentError("attribute values must be scalars or lists of scalars",
                        code="BAD_TYPE", path=path)


def _attrs_from(v: Any, path: str) -> dict[str, Any]:
    d = _expect_obj(v, path)
    return {_expect_str(k, path): _attr_value(val, f"{path}.{k}") for k, val in d.items()}


# ---------------------------------------------------------------------------
# geometry <-> dict


def point2_to_dict(p: Point2) -> dict:
    return {"x": p.x, "y": p.y}


def point2_from(v: Any, path: str) -> Point2:
    d = _expect_obj(v, path)
    _check_unknown(d, {"x", "y"}, path)
    return Point2(_expect_float(_get(d, "x", path), f"{path}.x"),
                  _expect_float(_get(d, "y", path), f"{path}.y"))


def point3_to_dict(p: Point3) -> dict:
    return {"x": p.x, "y": p.y, "z": p.z}


def point3_from(v: Any, path: str) -> Point3:
    d = _expect_obj(v, path)
    _check_unknown(d, {"x", "y", "z"}, path)
    return Point3(_expect_float(_get(d, "x", path), f"{path}.x"),
                  _expect_float(_get(d, "y", path), f"{path}.y"),
                  _expect_float(_get(d, "z", path), f"{path}.z"))


def polygon_to_dict(poly: Polygon) -> dict:
    return {"vertices": [point2_to_dict(p) for p in poly.vertices]}


def polygon_from(v: Any, path: str) -> Polygon:
    d = _expect_obj(v, path)
    _check_unknown(d, {"vertices"}, path)
    verts = [point2_from(x, f"{path}.vertices[{i}]")
             for i, x in enumerate(_expect_list(_get(d, "vertices", path), f"{path}.vertices"))]
    try:
        return Polygon(verts)
    except GeometryError as exc:
        raise DocumentError(str(exc), code="INVALID_POLYGON", path=path) from exc


def pose_to_dict(p: Pose) -> dict:
    return {"position": point3_to_dict(p.position), "yaw": p.yaw}


def pose_from(v: Any, path: str) -> Pose:
    d = _expect_obj(v, path)
    _check_unknown(d, {"position", "yaw"}, path)
    try:
        return Pose(point3_from(_get(d, "position", path), f"{path}.position"),
                    _expect_float(_get(d, "yaw", path), f"{path}.yaw"))
    except GeometryError as exc:
        raise DocumentError(str(exc), code="INVALID_POSE", path=path) from exc


def bbox_to_dict(b: BoundingBox3) -> dict:
    ex, ey, ez = b.extents
    return {"center": point3_to_dict(b.center),
            "extents": {"x": ex, "y": ey, "z": ez},
            "yaw": b.yaw}


def bbox_from(v: Any, path: str) -> BoundingBox3:
    d = _expect_obj(v, path)
    _check_unknown(d, {"center", "extents", "yaw"}, path)
    e = _expect_obj(_get(d, "extents", path), f"{path}.extents")
    _check_unknown(e, {"x", "y", "z"}, f"{path}.extents")
    try:
        return BoundingBox3(
            center=point3_from(_get(d, "center", path), f"{path}.center"),
            extents=(_expect_float(_get(e, "x", f"{path}.extents"), f"{path}.extents.x"),
                     _expect_float(_get(e, "y", f"{path}.extents"), f"{path}.extents.y"),
                     _expect_float(_get(e, "z", f"{path}.extents"), f"{path}.extents.z")),
            yaw=_expect_float(_get(d, "yaw", path), f"{path}.yaw"))
    except GeometryError as exc:
        raise DocumentError(str(exc), code="INVALID_BBOX", path=path) from exc


def timed_path_to_dict(tp: TimedPath) -> dict:
    return {"samples": [{"t": t, "pose": pose_to_dict(p)} for t, p in tp.samples]}


def timed_path_from(v: Any, path: str) -> TimedPath:
    d = _expect_obj(v, path)
    _check_unknown(d, {"samples"}, path)
    samples = []
    for i, s in enumerate(_expect_list(_get(d, "samples", path), f"{path}.samples")):
        sp = f"{path}.samples[{i}]"
        so = _expect_obj(s, sp)
        _check_unknown(so, {"t", "pose"}, sp)
        samples.append((_expect_float(_get(so, "t", sp), f"{sp}.t"),
                        pose_from(_get(so, "pose", sp), f"{sp}.pose")))
    try:
        return TimedPath(samples)
    except GeometryError as exc:
        raise DocumentError(str(exc), code="INVALID_PATH", path=path) from exc


def obstacle_to_dict(o: ExtrudedObstacle) -> dict:
    return {"footprint": polygon_to_dict(o.footprint), "height": o.height}


def obstacle_from(v: Any, path: str) -> ExtrudedObstacle:
    d = _expect_obj(v, path)
    _check_unknown(d, {"footprint", "height"}, path)
    try:
        return ExtrudedObstacle(polygon_from(_get(d, "footprint", path), f"{path}.footprint"),
                                _expect_float(_get(d, "height", path), f"{path}.height"))
    except GeometryError as exc:
        raise DocumentError(str(exc), code="INVALID_OBSTACLE", path=path) from exc


def window_to_dict(w: TimeWindow | None) -> dict | None:
    return None if w is None else {"net": w.net, "nlt": w.nlt}


def window_from(v: Any, path: str) -> TimeWindow | None:
    if v is None:
        return None
    d = _expect_obj(v, path)
    _check_unknown(d, {"net", "nlt"}, path)
    return TimeWindow(_expect_float(_get(d, "net", path), f"{path}.net"),
                      _expect_float(_get(d, "nlt", path), f"{path}.nlt"))


def camera_to_dict(c: CameraModel) -> dict:
    return {"hfov": c.hfov, "vfov": c.vfov, "max_range": c.max_range,
            "pitch": c.pitch, "mount_yaw": c.mount_yaw}


def camera_from(v: Any, path: str) -> CameraModel:
    d = _expect_obj(v, path)
    _check_unknown(d, {"hfov", "vfov", "max_range", "pitch", "mount_yaw"}, path)
    return CameraModel(hfov=_expect_float(_get(d, "hfov", path), f"{path}.hfov"),
                       vfov=_expect_float(_get(d, "vfov", path), f"{path}.vfov"),
                       max_range=_expect_float(_get(d, "max_range", path), f"{path}.max_range"),
                       pitch=_expect_float(_get(d, "pitch", path), f"{path}.pitch"),
                       mount_yaw=_expect_float(_get(d, "mount_yaw", path), f"{path}.mount_yaw"))


def relation_to_dict(r: SymbolicRelation) -> dict:
    return {"related_class": r.related_class, "operator": r.operator,
            "target_id": r.target_id, "related_attributes": dict(r.related_attributes)}


def relation_from(v: Any, path: str) -> SymbolicRelation:
    d = _expect_obj(v, path)
    _check_unknown(d, {"related_class", "operator", "target_id", "related_attributes"}, path)
    return SymbolicRelation(
        related_class=_expect_str(_get(d, "related_class", path), f"{path}.related_class"),
        operator=_expect_str(_get(d, "operator", path), f"{path}.operator"),
        target_id=_expect_str(_get(d, "target_id", path), f"{path}.target_id"),
        related_attributes=_attrs_from(d.get("related_attributes", {}),
                                       f"{path}.related_attributes"))


# ---------------------------------------------------------------------------
# mission description


def _zone_to_dict(z: AreaOfInterest | KeepOutZone) -> dict:
    return {"id": z.id, "polygon": polygon_to_dict(z.polygon), "window": window_to_dict(z.window)}


def mission_to_dict(md: MissionDescription) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "objective": md.objective.value,
        "target_spec": {"entity_class": md.target_spec.entity_class,
                        "attributes": dict(md.target_spec.attributes)},
        "aois": [_zone_to_dict(a) for a in md.aois],
        "route": None if md.route is None else {
            "polyline": [point2_to_dict(p) for p in md.route.polyline],
            "band_width": md.route.band_width,
        },
        "kozs": [_zone_to_dict(k) for k in md.kozs],
        "priors": None if md.priors is None else {
            "cells": [{"polygon": polygon_to_dict(c.polygon), "prob": c.prob}
                      for c in md.priors.cells],
        },
        "relations": [relation_to_dict(r) for r in md.relations],
        "mission_duration": md.mission_duration,
    }


def _check_schema_version(d: dict, path: str) -> None:
    v = _expect_str(_get(d, "schema_version", path), f"{path}.schema_version")
    if v != SCHEMA_VERSION:
        raise DocumentError(f"unsupported schema_version {v!r}",
                            code="SCHEMA_VERSION", path=f"{path}.schema_version")


def mission_from_dict(data: dict) -> MissionDescription:
    path = "$"
    d = _expect_obj(data, path)
    _check_unknown(d, {"schema_version", "objective", "target_spec", "aois", "route",
                       "kozs", "priors", "relations", "mission_duration"}, path)
    _check_schema_version(d, path)

    raw_obj = _expect_str(_get(d, "objective", path), f"{path}.objective")
    try:
        objective = Objective(raw_obj)
    except ValueError:
        raise DocumentError(f"unknown objective {raw_obj!r}", code="BAD_OBJECTIVE",
                            path=f"{path}.objective") from None

    ts = _expect_obj(_get(d, "target_spec", path), f"{path}.target_spec")
    _check_unknown(ts, {"entity_class", "attributes"}, f"{path}.target_spec")
    target_spec = TargetSpec(
        entity_class=_expect_str(_get(ts, "entity_class", f"{path}.target_spec"),
                                 f"{path}.target_spec.entity_class"),
        attributes=_attrs_from(ts.get("attributes", {}), f"{path}.target_spec.attributes"))

    def zone(cls: Callable, v: Any, zp: str):
        zo = _expect_obj(v, zp)
        _check_unknown(zo, {"id", "polygon", "window"}, zp)
        return cls(id=_expect_str(_get(zo, "id", zp), f"{zp}.id"),
                   polygon=polygon_from(_get(zo, "polygon", zp), f"{zp}.polygon"),
                   window=window_from(zo.get("window"), f"{zp}.window"))

    aois = [zone(AreaOfInterest, v, f"{path}.aois[{i}]")
            for i, v in enumerate(_expect_list(d.get("aois", []), f"{path}.aois"))]
    kozs = [zone(KeepOutZone, v, f"{path}.kozs[{i}]")
            for i, v in enumerate(_expect_list(d.get("kozs", []), f"{path}.kozs"))]

    route = None
    if d.get("route") is not None:
        rp = f"{path}.route"
        ro = _expect_obj(d["route"], rp)
        _check_unknown(ro, {"polyline", "band_width"}, rp)
        route = RouteOfInterest(
            polyline=[point2_from(v, f"{rp}.polyline[{i}]")
                      for i, v in enumerate(_expect_list(_get(ro, "polyline", rp),
                                                         f"{rp}.polyline"))],
            band_width=_expect_float(_get(ro, "band_width", rp), f"{rp}.band_width"))

    priors = None
    if d.get("priors") is not None:
        pp = f"{path}.priors"
        po = _expect_obj(d["priors"], pp)
        _check_unknown(po, {"cells"}, pp)
        cells = []
        for i, v in enumerate(_expect_list(_get(po, "cells", pp), f"{pp}.cells")):
            cp = f"{pp}.cells[{i}]"
            co = _expect_obj(v, cp)
            _check_unknown(co, {"polygon", "prob"}, cp)
            cells.append(PriorCell(polygon_from(_get(co, "polygon", cp), f"{cp}.polygon"),
                                   _expect_float(_get(co, "prob", cp), f"{cp}.prob")))
        priors = AreaPriorMap(cells)

    relations = [relation_from(v, f"{path}.relations[{i}]")
                 for i, v in enumerate(_expect_list(d.get("relations", []),
                                                    f"{path}.relations"))]
    duration = _expect_float(d.get("mission_duration", DEFAULT_MISSION_DURATION),
                             f"{path}.mission_duration")
    return MissionDescription(objective=objective, target_spec=target_spec, aois=aois,
                              route=route, kozs=kozs, priors=priors, relations=relations,
                              mission_duration=duration)


# ---------------------------------------------------------------------------
# simulation config


def entity_to_dict(e: EntitySpec) -> dict:
    return {
        "id": e.id,
        "entity_class": e.entity_class,
        "attributes": dict(e.attributes),
        "initial_pose": pose_to_dict(e.initial_pose),
        "bbox": bbox_to_dict(e.bbox),
        "trajectory": None if e.trajectory is None else timed_path_to_dict(e.trajectory),
        "is_target": e.is_target,
        "is_confuser": e.is_confuser,
    }


def entity_from(v: Any, path: str) -> EntitySpec:
    d = _expect_obj(v, path)
    _check_unknown(d, {"id", "entity_class", "attributes", "initial_pose", "bbox",
                       "trajectory", "is_target", "is_confuser"}, path)
    return EntitySpec(
        id=_expect_str(_get(d, "id", path), f"{path}.id"),
        entity_class=_expect_str(_get(d, "entity_class", path), f"{path}.entity_class"),
        attributes=_attrs_from(d.get("attributes", {}), f"{path}.attributes"),
        initial_pose=pose_from(_get(d, "initial_pose", path), f"{path}.initial_pose"),
        bbox=bbox_from(_get(d, "bbox", path), f"{path}.bbox"),
        trajectory=None if d.get("trajectory") is None
        else timed_path_from(d["trajectory"], f"{path}.trajectory"),
        is_target=_expect_bool(d.get("is_target", False), f"{path}.is_target"),
        is_confuser=_expect_bool(d.get("is_confuser", False), f"{path}.is_confuser"))


def environment_to_dict(env: EnvironmentConditions) -> dict:
    return {"snow": env.snow, "rain": env.rain, "fog": env.fog,
            "wind_speed_norm": env.wind_speed_norm, "foliage": env.foliage,
            "camera_noise": env.camera_noise, "wind_direction": env.wind_direction,
            "time_of_day": env.time_of_day}


def environment_from(v: Any, path: str) -> EnvironmentConditions:
    d = _expect_obj(v, path)
    fields = {"snow", "rain", "fog", "wind_speed_norm", "foliage", "camera_noise",
              "wind_direction", "time_of_day"}
    _check_unknown(d, fields, path)
    return EnvironmentConditions(
        **{name: _expect_float(_get(d, name, path), f"{path}.{name}") for name in fields})


def config_to_dict(cfg: SimulationConfig) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "entities": [entity_to_dict(e) for e in cfg.entities],
        "obstacles": [obstacle_to_dict(o) for o in cfg.obstacles],
        "environment": environment_to_dict(cfg.environment),
        "uav_start": pose_to_dict(cfg.uav_start),
        "cameras": [camera_to_dict(c) for c in cfg.cameras],
        "seed": cfg.seed,
        "tick_dt": cfg.tick_dt,
    }


def config_from_dict(data: dict) -> SimulationConfig:
    path = "$"
    d = _expect_obj(data, path)
    _check_unknown(d, {"schema_version", "entities", "obstacles", "environment",
                       "uav_start", "cameras", "seed", "tick_dt"}, path)
    _check_schema_version(d, path)
    entities = []
    seen: set[str] = set()
    for i, v in enumerate(_expect_list(_get(d, "entities", path), f"{path}.entities")):
        ent = entity_from(v, f"{path}.entities[{i}]")
        if ent.id in seen:
            raise DocumentError(f"duplicate entity id {ent.id!r}", code="DUPLICATE_ID",
                                path=f"{path}.entities[{i}].id")
        seen.add(ent.id)
        entities.append(ent)
    obstacles = [obstacle_from(v, f"{path}.obstacles[{i}]")
                 for i, v in enumerate(_expect_list(d.get("obstacles", []),
                                                    f"{path}.obstacles"))]
    return SimulationConfig(
        entities=entities,
        obstacles=obstacles,
        environment=environment_from(_get(d, "environment", path), f"{path}.environment"),
        uav_start=pose_from(_get(d, "uav_start", path), f"{path}.uav_start"),
        cameras=[camera_from(v, f"{path}.cameras[{i}]")
                 for i, v in enumerate(_expect_list(_get(d, "cameras", path),
                                                    f"{path}.cameras"))],
        seed=_expect_int(_get(d, "seed", path), f"{path}.seed"),
        tick_dt=_expect_float(d.get("tick_dt", DEFAULT_TICK_DT), f"{path}.tick_dt"))


# ---------------------------------------------------------------------------
# scene snapshots (standalone document for relation evaluation)


def scene_to_dict(scene: SceneSnapshot) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "time": scene.time,
        "entities": [{
            "id": eid,
            "entity_class": ent.entity_class,
            "attributes": ent.attr_map(),
            "pose": pose_to_dict(ent.pose),
            "bbox": bbox_to_dict(ent.bbox),
        } for eid, ent in sorted(scene.entities.items())],
        "obstacles": [obstacle_to_dict(o) for o in scene.obstacles],
    }


def scene_from_dict(data: dict) -> SceneSnapshot:
    path = "$"
    d = _expect_obj(data, path)
    _check_unknown(d, {"schema_version", "time", "entities", "obstacles"}, path)
    _check_schema_version(d, path)
    entities = {}
    for i, v in enumerate(_expect_list(_get(d, "entities", path), f"{path}.entities")):
        ep = f"{path}.entities[{i}]"
        eo = _expect_obj(v, ep)
        _check_unknown(eo, {"id", "entity_class", "attributes", "pose", "bbox"}, ep)
        eid = _expect_str(_get(eo, "id", ep), f"{ep}.id")
        if eid in entities:
            raise DocumentError(f"duplicate entity id {eid!r}", code="DUPLICATE_ID",
                                path=f"{ep}.id")
        # scene documents carry world-frame boxes, so no pose attachment here
        entities[eid] = make_entity(
            pose=pose_from(_get(eo, "pose", ep), f"{ep}.pose"),
            bbox=bbox_from(_get(eo, "bbox", ep), f"{ep}.bbox"),
            entity_class=_expect_str(_get(eo, "entity_class", ep), f"{ep}.entity_class"),
            attributes=_attrs_from(eo.get("attributes", {}), f"{ep}.attributes"),
            body_frame=False)
    obstacles = tuple(obstacle_from(v, f"{path}.obstacles[{i}]")
                      for i, v in enumerate(_expect_list(d.get("obstacles", []),
                                                         f"{path}.obstacles")))
    return SceneSnapshot(time=_expect_float(d.get("time", 0.0), f"{path}.time"),
                         entities=entities, obstacles=obstacles)


# ---------------------------------------------------------------------------
# byte-level entry points


def _parse_bytes(data: bytes | str) -> dict:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"invalid JSON: {exc.msg} (line {exc.lineno})",
                            code="BAD_JSON", path="$") from exc
    if not isinstance(obj, dict):
        raise DocumentError("top-level value must be an object", code="BAD_TYPE", path="$")
    return obj


def _checked(report_factory, doc, check: bool):
    if check:
        report = report_factory(doc)
        if not report.ok:
            raise DocumentError(f"document has validation findings: {report}",
                                code="DOCUMENT_INVALID",
                                path=report.findings[0].path)


def serialize_mission(md: MissionDescription, check: bool = True) -> bytes:
    _checked(validate_mission, md, check)
    return canonical_bytes(mission_to_dict(md))


def deserialize_mission(data: bytes | str) -> MissionDescription:
    return mission_from_dict(_parse_bytes(data))


def serialize_config(cfg: SimulationConfig, check: bool = True) -> bytes:
    _checked(validate_config, cfg, check)
    return canonical_bytes(config_to_dict(cfg))


def deserialize_config(data: bytes | str) -> SimulationConfig:
    return config_from_dict(_parse_bytes(data))


def serialize_timed_path(tp: TimedPath) -> bytes:
    doc = {"schema_version": SCHEMA_VERSION, **timed_path_to_dict(tp)}
    return canonical_bytes(doc)


def deserialize_timed_path(data: bytes | str) -> TimedPath:
    d = _parse_bytes(data)
    _check_unknown(d, {"schema_version", "samples"}, "$")
    _check_schema_version(d, "$")
    return timed_path_from({"samples": _get(d, "samples", "$")}, "$")


def serialize_scene(scene: SceneSnapshot) -> bytes:
    return canonical_bytes(scene_to_dict(scene))


def deserialize_scene(data: bytes | str) -> SceneSnapshot:
    return scene_from_dict(_parse_bytes(data))


def load_document(path: str | Path) -> tuple[str, MissionDescription | SimulationConfig]:
    """Load a mission or sim-config file, detecting the kind from its fields."""
    raw = Path(path).read_bytes()
    d = _parse_bytes(raw)
    if "objective" in d:
        return "mission", mission_from_dict(d)
    if "entities" in d:
        return "sim_config", config_from_dict(d)
    raise DocumentError("cannot tell mission from sim config (no objective/entities)",
                        code="UNKNOWN_DOCUMENT", path="$")


def relations_to_bytes(relations: list[SymbolicRelation]) -> bytes:
    return canonical_bytes([relation_to_dict(r) for r in relations])


def relations_from_bytes(data: bytes | str) -> list[SymbolicRelation]:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"invalid JSON: {exc.msg}", code="BAD_JSON", path="$") from exc
    if not isinstance(obj, list):
        raise DocumentError("relations document must be an array", code="BAD_TYPE", path="$")
    return [relation_from(v, f"$[{i}]") for i, v in enumerate(obj)]
