"""Seeded scenario sampling and batch dataset generation.

A template pins the world geometry and the ranges every scenario axis is
drawn from; a 64-bit seed then fully determines one (mission description,
simulation config) pair. Batch generation derives per-item seeds with a
keyed hash, so worker count and scheduling never change the output.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import shapely

from .camera import CameraModel
from .canonical import canonical_bytes, content_hash
from .constraints import polygon_occupancy_intervals
from .errors import DocumentError, SamplingError
from .geometry import (
    BoundingBox3,
    ExtrudedObstacle,
    Point2,
    Point3,
    Polygon,
    Pose,
    point_in_polygon,
    polygon_from_shapely,
    rectangle,
)
from .planning import RrtConfig, plan_entity_route
from .relations import (
    EVENTUALLY_PREFIX,
    SymbolicRelation,
    disambiguate,
    eval_relation,
    extract_relations,
)
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
    validate_config,
    validate_mission,
    validate_pair,
)
from .seeding import derive_seed, make_rng
from .serde import (
    _check_unknown,
    _expect_float,
    _expect_int,
    _expect_list,
    _expect_obj,
    _expect_str,
    _get,
    camera_from,
    camera_to_dict,
    obstacle_from,
    obstacle_to_dict,
    point2_from,
    point2_to_dict,
    polygon_from,
    polygon_to_dict,
    serialize_config,
    serialize_mission,
)
from .sim import scene_at, timeline_from_config

MAX_SAMPLE_ATTEMPTS = 100
MAX_ITEM_ATTEMPTS = 8

ENV_AXES = ("snow", "rain", "fog", "wind_speed_norm", "foliage", "camera_noise",
            "wind_direction", "time_of_day")

# Static context objects that relations can reference, with plan half-sizes,
# height, and attribute pools.
CONTEXT_LIBRARY: dict[str, dict] = {
    "garage": {"extents": (3.0, 3.0, 1.75),
               "attrs": {"color": ["brown", "gray", "white"], "number_of_doors": [1, 2]}},
    "shed": {"extents": (1.8, 1.8, 1.25), "attrs": {"color": ["brown", "gray", "green"]}},
    "dumpster": {"extents": (1.6, 1.0, 0.8), "attrs": {"color": ["blue", "green"]}},
    "fountain": {"extents": (1.5, 1.5, 1.0), "attrs": {}},
}

TARGET_LIBRARY: dict[str, dict] = {
    "car": {"extents": (2.4, 1.0, 0.8),
            "attr_names": ("color", "model")},
    "pedestrian": {"extents": (0.4, 0.4, 0.9),
                   "attr_names": ("shirt_color",)},
}

DEFAULT_ATTRIBUTE_POOLS: dict[str, list[str]] = {
    "color": ["black", "blue", "gray", "red", "silver", "white"],
    "model": ["hatchback", "impala", "pickup", "sedan", "suv"],
    "shirt_color": ["black", "blue", "green", "red", "yellow"],
}


class _RetrySampling(Exception):
    """Internal: this attempt cannot be completed; try the next seed."""


@dataclass
class WorldModel:
    bounds: tuple[float, float, float, float]
    obstacles: list[ExtrudedObstacle]
    streets: list[Polygon]
    street_paths: list[list[Point2]]
    districts: list[Polygon]
    uav_start_region: Polygon

    def placement_blocked(self):
        """Union of inflated obstacle footprints, prepared for fast contains()."""
        cached = getattr(self, "_blocked", None)
        if cached is None:
            union = shapely.unary_union(
                [o.footprint.to_shapely() for o in self.obstacles]) if self.obstacles \
                else shapely.Polygon()
            cached = union.buffer(1.5)
            shapely.prepare(cached)
            object.__setattr__(self, "_blocked", cached)
        return cached


@dataclass
class ScenarioTemplate:
    name: str
    world: WorldModel
    objective: Objective
    target_classes: list[str]
    attribute_pools: dict[str, list[str]]
    confuser_range: tuple[int, int]
    context_count_range: tuple[int, int]
    moving_entity_range: tuple[int, int]
    environment_ranges: dict[str, tuple[float, float]]
    uav_altitude_range: tuple[float, float]
    camera_pool: list[CameraModel]
    aoi_depth: int = 1
    koz_count_range: tuple[int, int] = (0, 2)
    relation_count_range: tuple[int, int] = (1, 3)
    mission_duration: float = 600.0
    tick_dt: float = 0.1


@dataclass
class DatasetManifest:
    base_seed: int
    count: int
    template: str
    entries: list[dict] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)
    manifest_hash: str = ""

    def core_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "base_seed": self.base_seed,
                "count": self.count, "template": self.template,
                "entries": self.entries, "failures": self.failures}

    def compute_hash(self) -> str:
        return content_hash(canonical_bytes(self.core_dict()))

    def to_dict(self) -> dict:
        return {**self.core_dict(), "manifest_hash": self.manifest_hash}

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetManifest":
        return cls(base_seed=d["base_seed"], count=d["count"], template=d["template"],
                   entries=list(d["entries"]), failures=list(d["failures"]),
                   manifest_hash=d.get("manifest_hash", ""))


# ---------------------------------------------------------------------------
# AOI decomposition


def decompose_aoi(aoi: AreaOfInterest, depth: int, target_pos: Point2,
                  seed: int) -> AreaPriorMap:
    """Quadtree-split the AOI into prior cells with the target cell on top.

    Cells are the AOI's bounding-box quadrants (to ``depth`` levels)
    clipped to the AOI polygon; probabilities are Dirichlet(1,...,1) with
    the probabilities of the argmax cell and the target's cell swapped so
    the cell containing the target always carries the highest prior.
    """
    if depth < 1:
        raise SamplingError("depth must be >= 1", code="INVALID_DEPTH")
    target_pos = Point2(float(target_pos[0]), float(target_pos[1]))
    if not point_in_polygon(target_pos, aoi.polygon):
        raise SamplingError("target lies outside the AOI", code="INVALID_TARGET")
    x0, y0, x1, y1 = aoi.polygon.bounds
    n = 2 ** depth
    dx, dy = (x1 - x0) / n, (y1 - y0) / n
    shp = aoi.polygon.to_shapely()
    cells: list[Polygon] = []
    for iy in range(n):
        for ix in range(n):
            box = shapely.box(x0 + ix * dx, y0 + iy * dy,
                              x0 + (ix + 1) * dx, y0 + (iy + 1) * dy)
            inter = shp.intersection(box)
            parts = list(getattr(inter, "geoms", [inter]))
            parts = [g for g in parts if g.geom_type == "Polygon" and g.area > 1e-9]
            parts.sort(key=lambda g: -g.area)
            for g in parts:
                cells.append(polygon_from_shapely(g))
    if not cells:
        raise SamplingError("AOI decomposed to nothing", code="INVALID_TARGET")

    target_idx = None
    for i, cell in enumerate(cells):
        if point_in_polygon(target_pos, cell):
            target_idx = i
            break
    if target_idx is None:  # numerical sliver: fall back to nearest centroid
        target_idx = min(range(len(cells)),
                         key=lambda i: math.dist(cells[i].centroid(), target_pos))

    rng = make_rng(seed, "priors")
    probs = rng.dirichlet(np.ones(len(cells)))
    top = int(np.argmax(probs))
    probs[target_idx], probs[top] = probs[top], probs[target_idx]
    probs = probs / probs.sum()
    return AreaPriorMap([PriorCell(c, float(p)) for c, p in zip(cells, probs)])


# ---------------------------------------------------------------------------
# scenario sampling


def _uniform(rng: np.random.Generator, lo: float, hi: float) -> float:
    return float(lo) if lo == hi else float(rng.uniform(lo, hi))


def _int_in(rng: np.random.Generator, span: tuple[int, int]) -> int:
    lo, hi = span
    return int(lo) if lo == hi else int(rng.integers(lo, hi + 1))


def _pick(rng: np.random.Generator, items: Sequence):
    return items[int(rng.integers(0, len(items)))]


def _sample_point_in(rng: np.random.Generator, poly: Polygon, world: WorldModel,
                     tries: int = 60) -> Point2:
    x0, y0, x1, y1 = poly.bounds
    blocked = world.placement_blocked()
    for _ in range(tries):
        p = Point2(_uniform(rng, x0, x1), _uniform(rng, y0, y1))
        if not point_in_polygon(p, poly):
            continue
        if blocked.contains(shapely.Point(p)):
            continue
        return p
    raise _RetrySampling


def _entity(eid: str, cls: str, attrs: dict, pos: Point2, yaw: float,
            extents: tuple[float, float, float], trajectory=None,
            is_target=False, is_confuser=False) -> EntitySpec:
    pose = Pose(Point3(pos.x, pos.y, 0.0), yaw)
    if trajectory is not None:
        pose = trajectory.samples[0][1]
    return EntitySpec(
        id=eid, entity_class=cls, attributes=attrs,
        initial_pose=pose,
        bbox=BoundingBox3(Point3(0.0, 0.0, extents[2]), extents, 0.0),
        trajectory=trajectory, is_target=is_target, is_confuser=is_confuser)


def _sample_environment(rng: np.random.Generator, tpl: ScenarioTemplate) -> EnvironmentConditions:
    values = {}
    for axis in ENV_AXES:
        lo, hi = tpl.environment_ranges.get(axis, (0.0, 0.0))
        values[axis] = _uniform(rng, lo, hi)
    return EnvironmentConditions(**values)


def _context_near_target(rng, world, target_pos: Point2, target_yaw: float,
                         count: int, id_counter: dict) -> list[EntitySpec]:
    """Place context objects at relation-friendly bearings around the target."""
    out = []
    blocked = world.placement_blocked()
    anchor_bearings = (90.0, 180.0, 270.0)
    classes = sorted(CONTEXT_LIBRARY)
    for _ in range(count):
        cls = _pick(rng, classes)
        lib = CONTEXT_LIBRARY[cls]
        placed = False
        for _try in range(12):
            bearing = _pick(rng, anchor_bearings) + _uniform(rng, -10.0, 10.0)
            dist = _uniform(rng, 4.5, 9.0)
            world_angle = math.radians(target_yaw + bearing)
            p = Point2(target_pos.x + dist * math.cos(world_angle),
                       target_pos.y + dist * math.sin(world_angle))
            if blocked.contains(shapely.Point(p)):
                continue
            bx0, by0, bx1, by1 = world.bounds
            if not (bx0 <= p.x <= bx1 and by0 <= p.y <= by1):
                continue
            attrs = {k: _pick(rng, v) for k, v in sorted(lib["attrs"].items())}
            idx = id_counter.setdefault(cls, 0)
            id_counter[cls] = idx + 1
            out.append(_entity(f"{cls}_{idx:03d}", cls, attrs, p,
                               _uniform(rng, 0.0, 360.0), lib["extents"]))
            placed = True
            break
        if not placed:
            continue
    return out


def _street_route(rng, world: WorldModel, seed: int, tag: str, speed: float):
    """Plan a ground route between two points on the street network.

    Half the trips run one street end to end; the rest connect two
    different streets so the route turns corners.
    """
    if not world.street_paths:
        raise _RetrySampling
    path = _pick(rng, world.street_paths)
    if len(path) < 2:
        raise _RetrySampling
    start, goal = path[0], path[-1]
    if len(world.street_paths) > 1 and rng.random() < 0.5:
        other = _pick(rng, world.street_paths)
        alt_goal = other[-1] if rng.random() < 0.5 else other[0]
        if math.dist(start, alt_goal) > 30.0:
            goal = alt_goal
    elif rng.random() < 0.5:
        start, goal = goal, start
    cfg = RrtConfig(step_size=10.0, goal_bias=0.2, max_iters=4000, goal_radius=3.0,
                    seed=derive_seed(seed, tag))
    try:
        return plan_entity_route(start, goal, world.obstacles, cfg, speed=speed)
    except Exception:
        raise _RetrySampling from None


def _sample_koz(rng, world: WorldModel, forbidden: list[Point2], koz_id: str) -> KeepOutZone | None:
    x0, y0, x1, y1 = world.bounds
    for _ in range(20):
        w = _uniform(rng, 20.0, 50.0)
        h = _uniform(rng, 20.0, 50.0)
        cx = _uniform(rng, x0 + w / 2, x1 - w / 2)
        cy = _uniform(rng, y0 + h / 2, y1 - h / 2)
        poly = rectangle(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2)
        if any(point_in_polygon(p, poly) for p in forbidden):
            continue
        return KeepOutZone(id=koz_id, polygon=poly, window=None)
    return None


def sample_scenario(tpl: ScenarioTemplate, seed: int) -> tuple[MissionDescription, SimulationConfig]:
    """Draw one scenario; identical (template, seed) give identical documents."""
    for attempt in range(MAX_SAMPLE_ATTEMPTS):
        rng = make_rng(seed, "scenario", attempt)
        try:
            return _sample_once(tpl, seed, attempt, rng)
        except _RetrySampling:
            continue
    raise SamplingError(f"no feasible scenario after {MAX_SAMPLE_ATTEMPTS} attempts",
                        code="SAMPLING_EXHAUSTED")


def _sample_once(tpl: ScenarioTemplate, seed: int, attempt: int,
                 rng: np.random.Generator) -> tuple[MissionDescription, SimulationConfig]:
    world = tpl.world
    env = _sample_environment(rng, tpl)
    cameras = [_pick(rng, tpl.camera_pool)]
    pools = {**DEFAULT_ATTRIBUTE_POOLS, **tpl.attribute_pools}

    target_class = _pick(rng, sorted(tpl.target_classes))
    lib = TARGET_LIBRARY[target_class]
    target_attrs = {name: _pick(rng, pools[name]) for name in lib["attr_names"]}

    id_counter: dict[str, int] = {}

    def next_id(cls: str) -> str:
        idx = id_counter.setdefault(cls, 0)
        id_counter[cls] = idx + 1
        return f"{cls}_{idx:03d}"

    aois: list[AreaOfInterest] = []
    route = None
    priors = None
    target_traj = None
    mission_duration = tpl.mission_duration

    if tpl.objective is Objective.AREA_SEARCH:
        district = _pick(rng, world.districts)
        aois.append(AreaOfInterest(id="aoi_000", polygon=district, window=None))
        target_pos = _sample_point_in(rng, district, world)
        target_yaw = _uniform(rng, 0.0, 360.0)
    else:
        speed = _uniform(rng, 6.0, 10.0)
        target_traj = _street_route(rng, world, seed, f"route{attempt}", speed)
        start_pose = target_traj.samples[0][1]
        target_pos = start_pose.position.xy
        target_yaw = start_pose.yaw
        mission_duration = max(tpl.mission_duration, target_traj.t_last + 30.0)
        if tpl.objective is Objective.ROUTE_SEARCH:
            polyline = [s[1].position.xy for s in target_traj.samples]
            route = RouteOfInterest(polyline=polyline,
                                    band_width=_uniform(rng, 25.0, 40.0))

    target = _entity(next_id(target_class), target_class, dict(target_attrs),
                     target_pos, target_yaw, lib["extents"],
                     trajectory=target_traj, is_target=True)

    entities = [target]

    # confusers share the target's salient attributes
    n_confusers = _int_in(rng, tpl.confuser_range)
    for _ in range(n_confusers):
        for _try in range(30):
            region = _pick(rng, world.districts)
            p = _sample_point_in(rng, region, world)
            if math.dist(p, target_pos) >= 25.0:
                break
        else:
            raise _RetrySampling
        entities.append(_entity(next_id(target_class), target_class, dict(target_attrs),
                                p, _uniform(rng, 0.0, 360.0), lib["extents"],
                                is_confuser=True))

    # context objects around the target anchor the symbolic relations
    n_context = max(1, _int_in(rng, tpl.context_count_range)) if n_confusers else \
        _int_in(rng, tpl.context_count_range)
    entities.extend(_context_near_target(rng, world, target_pos, target_yaw,
                                         n_context, id_counter))

    # ambient movers; their salient attributes always differ from the target's
    for _ in range(_int_in(rng, tpl.moving_entity_range)):
        try:
            traj = _street_route(rng, world, seed, f"ambient{attempt}{id_counter.get('car', 0)}",
                                 speed=_uniform(rng, 6.0, 10.0))
        except _RetrySampling:
            continue
        attrs = {n: _pick(rng, pools[n]) for n in TARGET_LIBRARY["car"]["attr_names"]}
        if target_class == "car" and attrs.get("color") == target_attrs.get("color"):
            others = [c for c in pools["color"] if c != target_attrs["color"]]
            attrs["color"] = _pick(rng, others)
        entities.append(_entity(next_id("car"), "car", attrs, traj.samples[0][1].position.xy,
                                0.0, TARGET_LIBRARY["car"]["extents"], trajectory=traj))

    # keep-out zones: random boxes away from the principals, plus street
    # denial windows for moving targets
    uav_pos = _sample_point_in(rng, world.uav_start_region, world)
    kozs: list[KeepOutZone] = []
    forbidden = [target_pos, uav_pos]
    for _ in range(_int_in(rng, tpl.koz_count_range)):
        koz = _sample_koz(rng, world, forbidden, f"koz_{len(kozs):03d}")
        if koz is not None:
            kozs.append(koz)
    if target_traj is not None:
        pad = _uniform(rng, 0.0, 5.0)
        denied = 0
        for si, street in enumerate(world.streets):
            if denied >= 2:
                break
            if polygon_occupancy_intervals(target_traj, street):
                from .constraints import street_denial_koz
                kozs.append(street_denial_koz(street, target_traj, pad=pad,
                                              koz_id=f"koz_street_{si:03d}"))
                denied += 1

    uav_start = Pose(Point3(uav_pos.x, uav_pos.y,
                            _uniform(rng, *tpl.uav_altitude_range)),
                     _uniform(rng, 0.0, 360.0))

    cfg = SimulationConfig(entities=entities, obstacles=list(world.obstacles),
                           environment=env, uav_start=uav_start, cameras=cameras,
                           seed=seed, tick_dt=tpl.tick_dt)

    # relations: extract ground truth, keep context-backed ones, and verify
    # they single out the target against every confuser
    scene0 = scene_at(cfg, 0.0)
    extracted = [r for r in extract_relations(target.id, scene0)
                 if r.related_class in CONTEXT_LIBRARY]
    if n_confusers and not extracted:
        raise _RetrySampling
    relations: list[SymbolicRelation] = []
    if extracted:
        want = min(len(extracted), max(1, _int_in(rng, tpl.relation_count_range)))
        order = rng.permutation(len(extracted))
        relations = [extracted[int(i)] for i in order[:want]]
        relations.sort(key=lambda r: (r.related_class, r.operator))

    timeline = None
    if target_traj is not None:
        times = sorted({0.0, *(t for t, _ in target_traj.samples), target_traj.t_last})
        timeline = timeline_from_config(cfg, times)
        # optionally one relation that only becomes true along the route
        if rng.random() < 0.5:
            for snap in timeline.snapshots[1:]:
                later = [r for r in extract_relations(target.id, snap)
                         if r.related_class in CONTEXT_LIBRARY]
                fresh = [r for r in later
                         if not eval_relation(r, _resolve_related(r, scene0), scene0)
                         ] if later else []
                if fresh:
                    rel = fresh[int(rng.integers(0, len(fresh)))]
                    rel.operator = EVENTUALLY_PREFIX + rel.operator
                    relations.append(rel)
                    break

    if n_confusers:
        candidates = [(e.id, dict(e.attributes)) for e in entities
                      if e.entity_class == target_class and e.attributes == target_attrs
                      and (e.is_target or e.is_confuser)]
        scene_for_check = timeline if timeline is not None else scene0
        result = disambiguate(candidates, relations, scene_for_check)
        ranking = result.ranking
        if result.vacuous or ranking[0][0] != target.id or \
                (len(ranking) > 1 and ranking[0][1] <= ranking[1][1]):
            raise _RetrySampling

    if tpl.objective is Objective.AREA_SEARCH:
        priors = decompose_aoi(aois[0], tpl.aoi_depth, target_pos,
                               derive_seed(seed, "priors", attempt))

    md = MissionDescription(
        objective=tpl.objective,
        target_spec=TargetSpec(entity_class=target_class, attributes=dict(target_attrs)),
        aois=aois, route=route, kozs=kozs, priors=priors, relations=relations,
        mission_duration=mission_duration)

    for rep in (validate_mission(md), validate_config(cfg), validate_pair(md, cfg)):
        if not rep.ok:
            raise SamplingError(f"generated documents do not validate: {rep}",
                                code="GENERATION_BUG")
    return md, cfg


def _resolve_related(rel: SymbolicRelation, scene) -> str:
    """Id of the first scene entity matching the relation's class+attributes."""
    for rid in sorted(scene.entities):
        ent = scene.entities[rid]
        if ent.entity_class == rel.related_class and \
                all(ent.attr_map().get(k) == v for k, v in rel.related_attributes.items()):
            return rid
    raise _RetrySampling


# ---------------------------------------------------------------------------
# batch generation


def _generate_item(tpl: ScenarioTemplate, base_seed: int, index: int,
                   out_dir: Path) -> tuple[dict, list[dict]]:
    failures: list[dict] = []
    for attempt in range(MAX_ITEM_ATTEMPTS):
        item_seed = derive_seed(base_seed, index, attempt)
        try:
            md, cfg = sample_scenario(tpl, item_seed)
        except SamplingError:
            failures.append({"index": index, "attempt": attempt, "seed": item_seed})
            continue
        scn_id = f"scn_{index:06d}"
        mission_bytes = serialize_mission(md)
        config_bytes = serialize_config(cfg)
        scn_dir = out_dir / scn_id
        scn_dir.mkdir(parents=True, exist_ok=True)
        (scn_dir / "mission.json").write_bytes(mission_bytes)
        (scn_dir / "sim_config.json").write_bytes(config_bytes)
        entry = {"id": scn_id, "seed": item_seed,
                 "mission_path": f"{scn_id}/mission.json",
                 "config_path": f"{scn_id}/sim_config.json",
                 "content_hash": content_hash(mission_bytes, config_bytes)}
        return entry, failures
    raise SamplingError(f"item {index} failed {MAX_ITEM_ATTEMPTS} derived seeds",
                        code="SAMPLING_EXHAUSTED")


_WORKER_STATE: dict = {}


def _worker_init(tpl_doc: dict, out_dir: str) -> None:
    _WORKER_STATE["tpl"] = template_from_dict(tpl_doc)
    _WORKER_STATE["out"] = Path(out_dir)


def _worker_item(args: tuple[int, int]) -> tuple[dict, list[dict]]:
    index, base_seed = args
    return _generate_item(_WORKER_STATE["tpl"], base_seed, index, _WORKER_STATE["out"])


def generate_dataset(tpl: ScenarioTemplate, n: int, base_seed: int,
                     out_dir: str | Path, workers: int = 1) -> DatasetManifest:
    """Write n scenario pairs plus a manifest; reruns reproduce the manifest
    hash exactly, independent of the worker count."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = DatasetManifest(base_seed=base_seed, count=n, template=tpl.name)
    if n > 0:
        if workers <= 1:
            results = [_generate_item(tpl, base_seed, i, out) for i in range(n)]
        else:
            tpl_doc = template_to_dict(tpl)
            with ProcessPoolExecutor(max_workers=workers, initializer=_worker_init,
                                     initargs=(tpl_doc, str(out))) as pool:
                chunk = max(1, n // (workers * 8))
                results = list(pool.map(_worker_item,
                                        [(i, base_seed) for i in range(n)],
                                        chunksize=chunk))
        for entry, failures in results:
            manifest.entries.append(entry)
            manifest.failures.extend(failures)
    manifest.entries.sort(key=lambda e: e["id"])
    manifest.failures.sort(key=lambda f: (f["index"], f["attempt"]))
    manifest.manifest_hash = manifest.compute_hash()
    (out / "manifest.json").write_bytes(canonical_bytes(manifest.to_dict()))
    return manifest


def load_manifest(path: str | Path) -> DatasetManifest:
    import json

    d = json.loads(Path(path).read_text(encoding="utf-8"))
    return DatasetManifest.from_dict(d)


# ---------------------------------------------------------------------------
# template serialization


def template_to_dict(tpl: ScenarioTemplate) -> dict:
    w = tpl.world
    return {
        "schema_version": SCHEMA_VERSION,
        "name": tpl.name,
        "world": {
            "bounds": list(w.bounds),
            "obstacles": [obstacle_to_dict(o) for o in w.obstacles],
            "streets": [polygon_to_dict(s) for s in w.streets],
            "street_paths": [[point2_to_dict(p) for p in path] for path in w.street_paths],
            "districts": [polygon_to_dict(d) for d in w.districts],
            "uav_start_region": polygon_to_dict(w.uav_start_region),
        },
        "objective": tpl.objective.value,
        "target_classes": list(tpl.target_classes),
        "attribute_pools": {k: list(v) for k, v in sorted(tpl.attribute_pools.items())},
        "confuser_range": list(tpl.confuser_range),
        "context_count_range": list(tpl.context_count_range),
        "moving_entity_range": list(tpl.moving_entity_range),
        "environment_ranges": {k: list(v) for k, v in sorted(tpl.environment_ranges.items())},
        "uav_altitude_range": list(tpl.uav_altitude_range),
        "camera_pool": [camera_to_dict(c) for c in tpl.camera_pool],
        "aoi_depth": tpl.aoi_depth,
        "koz_count_range": list(tpl.koz_count_range),
        "relation_count_range": list(tpl.relation_count_range),
        "mission_duration": tpl.mission_duration,
        "tick_dt": tpl.tick_dt,
    }


def _int_pair(v, path) -> tuple[int, int]:
    lst = _expect_list(v, path)
    if len(lst) != 2:
        raise DocumentError("expected [lo, hi]", code="BAD_TYPE", path=path)
    return (_expect_int(lst[0], f"{path}[0]"), _expect_int(lst[1], f"{path}[1]"))


def _float_pair(v, path) -> tuple[float, float]:
    lst = _expect_list(v, path)
    if len(lst) != 2:
        raise DocumentError("expected [lo, hi]", code="BAD_TYPE", path=path)
    return (_expect_float(lst[0], f"{path}[0]"), _expect_float(lst[1], f"{path}[1]"))


def template_from_dict(d: dict) -> ScenarioTemplate:
    path = "$"
    _expect_obj(d, path)
    _check_unknown(d, {"schema_version", "name", "world", "objective", "target_classes",
                       "attribute_pools", "confuser_range", "context_count_range",
                       "moving_entity_range", "environment_ranges", "uav_altitude_range",
                       "camera_pool", "aoi_depth", "koz_count_range",
                       "relation_count_range", "mission_duration", "tick_dt"}, path)
    wd = _expect_obj(_get(d, "world", path), "$.world")
    _check_unknown(wd, {"bounds", "obstacles", "streets", "street_paths", "districts",
                        "uav_start_region"}, "$.world")
    bounds_list = _expect_list(_get(wd, "bounds", "$.world"), "$.world.bounds")
    if len(bounds_list) != 4:
        raise DocumentError("bounds must be [x_min, y_min, x_max, y_max]",
                            code="BAD_TYPE", path="$.world.bounds")
    world = WorldModel(
        bounds=tuple(_expect_float(b, f"$.world.bounds[{i}]")
                     for i, b in enumerate(bounds_list)),
        obstacles=[obstacle_from(o, f"$.world.obstacles[{i}]")
                   for i, o in enumerate(_expect_list(wd.get("obstacles", []),
                                                      "$.world.obstacles"))],
        streets=[polygon_from(s, f"$.world.streets[{i}]")
                 for i, s in enumerate(_expect_list(wd.get("streets", []),
                                                    "$.world.streets"))],
        street_paths=[[point2_from(p, f"$.world.street_paths[{i}][{j}]")
                       for j, p in enumerate(_expect_list(sp, f"$.world.street_paths[{i}]"))]
                      for i, sp in enumerate(_expect_list(wd.get("street_paths", []),
                                                          "$.world.street_paths"))],
        districts=[polygon_from(p, f"$.world.districts[{i}]")
                   for i, p in enumerate(_expect_list(wd.get("districts", []),
                                                      "$.world.districts"))],
        uav_start_region=polygon_from(_get(wd, "uav_start_region", "$.world"),
                                      "$.world.uav_start_region"))
    return ScenarioTemplate(
        name=_expect_str(_get(d, "name", path), "$.name"),
        world=world,
        objective=Objective(_expect_str(_get(d, "objective", path), "$.objective")),
        target_classes=[_expect_str(c, f"$.target_classes[{i}]")
                        for i, c in enumerate(_expect_list(_get(d, "target_classes", path),
                                                           "$.target_classes"))],
        attribute_pools={k: [_expect_str(x, f"$.attribute_pools.{k}[{i}]")
                             for i, x in enumerate(_expect_list(v, f"$.attribute_pools.{k}"))]
                         for k, v in _expect_obj(d.get("attribute_pools", {}),
                                                 "$.attribute_pools").items()},
        confuser_range=_int_pair(_get(d, "confuser_range", path), "$.confuser_range"),
        context_count_range=_int_pair(_get(d, "context_count_range", path),
                                      "$.context_count_range"),
        moving_entity_range=_int_pair(_get(d, "moving_entity_range", path),
                                      "$.moving_entity_range"),
        environment_ranges={k: _float_pair(v, f"$.environment_ranges.{k}")
                            for k, v in _expect_obj(d.get("environment_ranges", {}),
                                                    "$.environment_ranges").items()},
        uav_altitude_range=_float_pair(_get(d, "uav_altitude_range", path),
                                       "$.uav_altitude_range"),
        camera_pool=[camera_from(c, f"$.camera_pool[{i}]")
                     for i, c in enumerate(_expect_list(_get(d, "camera_pool", path),
                                                        "$.camera_pool"))],
        aoi_depth=_expect_int(d.get("aoi_depth", 1), "$.aoi_depth"),
        koz_count_range=_int_pair(d.get("koz_count_range", [0, 2]), "$.koz_count_range"),
        relation_count_range=_int_pair(d.get("relation_count_range", [1, 3]),
                                       "$.relation_count_range"),
        mission_duration=_expect_float(d.get("mission_duration", 600.0),
                                       "$.mission_duration"),
        tick_dt=_expect_float(d.get("tick_dt", 0.1), "$.tick_dt"))


def save_template(tpl: ScenarioTemplate, path: str | Path) -> None:
    Path(path).write_bytes(canonical_bytes(template_to_dict(tpl)))


def load_template(path: str | Path) -> ScenarioTemplate:
    import json

    return template_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# ---------------------------------------------------------------------------
# built-in suburban grid


def suburban_grid_template(objective: Objective = Objective.AREA_SEARCH,
                           blocks: int = 3, name: str | None = None) -> ScenarioTemplate:
    """Blocks of houses separated by streets, in the spirit of a typical
    suburban neighborhood: houses occlude, streets carry traffic, each
    block doubles as a candidate AOI district."""
    street_w = 12.0
    block_w = 80.0
    pitch = block_w + street_w
    extent = blocks * pitch + street_w
    obstacles: list[ExtrudedObstacle] = []
    districts: list[Polygon] = []
    streets: list[Polygon] = []
    street_paths: list[list[Point2]] = []

    heights = [5.0, 6.5, 8.0, 7.0]
    for by in range(blocks):
        for bx in range(blocks):
            ox = street_w + bx * pitch
            oy = street_w + by * pitch
            districts.append(rectangle(ox, oy, ox + block_w, oy + block_w))
            for hy in range(2):
                for hx in range(2):
                    cx = ox + 20.0 + hx * 40.0
                    cy = oy + 20.0 + hy * 40.0
                    h = heights[(bx + by + hx + 2 * hy) % len(heights)]
                    obstacles.append(ExtrudedObstacle(
                        rectangle(cx - 7.0, cy - 5.0, cx + 7.0, cy + 5.0), h))

    for k in range(blocks + 1):
        offset = k * pitch
        streets.append(rectangle(offset, 0.0, offset + street_w, extent))
        streets.append(rectangle(0.0, offset, extent, offset + street_w))
        cx = offset + street_w / 2.0
        street_paths.append([Point2(cx, street_w / 2.0), Point2(cx, extent - street_w / 2.0)])
        street_paths.append([Point2(street_w / 2.0, cx), Point2(extent - street_w / 2.0, cx)])

    return ScenarioTemplate(
        name=name or f"suburban-grid-{objective.value}",
        world=WorldModel(bounds=(0.0, 0.0, extent, extent), obstacles=obstacles,
                         streets=streets, street_paths=street_paths, districts=districts,
                         uav_start_region=rectangle(0.0, 0.0, street_w, street_w)),
        objective=objective,
        target_classes=["car"],
        attribute_pools={},
        confuser_range=(2, 3),
        context_count_range=(1, 3),
        moving_entity_range=(0, 1) if objective is Objective.AREA_SEARCH else (0, 0),
        environment_ranges={"snow": (0.0, 0.6), "rain": (0.0, 0.6), "fog": (0.0, 0.6),
                            "wind_speed_norm": (0.0, 1.0), "foliage": (0.0, 1.0),
                            "camera_noise": (0.0, 0.5), "wind_direction": (0.0, 360.0),
                            "time_of_day": (6.0, 20.0)},
        uav_altitude_range=(40.0, 90.0),
        camera_pool=[CameraModel(hfov=60.0, vfov=45.0, max_range=250.0, pitch=-90.0),
                     CameraModel(hfov=70.0, vfov=50.0, max_range=300.0, pitch=-60.0)],
        aoi_depth=1,
        koz_count_range=(0, 2),
        relation_count_range=(1, 3),
        mission_duration=600.0,
        tick_dt=0.1)
