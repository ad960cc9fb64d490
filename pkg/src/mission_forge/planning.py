"""Offline planners: RRT paths, entity routes, look-guarantee UAV paths,
prior-weighted area-search sweeps, and a simple waypoint follower.

All planners are pure functions of their inputs and seed; identical calls
return identical outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import shapely

from .camera import CameraModel, camera_footprint
from .errors import PlanningError, SimulationError
from .geometry import (
    Point2,
    Point3,
    Polygon,
    Pose,
    ExtrudedObstacle,
    TimedPath,
    circ_diff_deg,
    line_of_sight,
    normalize_deg,
    point_in_polygon,
)
from .scenario import EntitySpec, KeepOutZone

DEFAULT_CAR_SPEED = 8.0
WAYPOINT_RADIUS = 1.0
LOOK_HOVER_WINDOW = 20.0


@dataclass(frozen=True)
class RrtConfig:
    step_size: float = 5.0
    goal_bias: float = 0.1
    max_iters: int = 20000
    goal_radius: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if min(self.step_size, self.goal_radius) <= 0.0 or self.max_iters <= 0:
            raise PlanningError("RRT parameters must be positive", code="INVALID_CONFIG")
        if not 0.0 <= self.goal_bias <= 1.0:
            raise PlanningError("goal_bias must lie in [0, 1]", code="INVALID_CONFIG")


@dataclass(frozen=True)
class UavKinematics:
    max_speed: float = 10.0
    max_yaw_rate: float = 90.0
    z_min: float = 20.0
    z_max: float = 120.0

    def __post_init__(self):
        if min(self.max_speed, self.max_yaw_rate) <= 0.0 or self.z_min > self.z_max:
            raise PlanningError("invalid UAV kinematic limits", code="INVALID_CONFIG")


class FreeSpace:
    """Vectorized collision queries against a set of blocked polygons.

    Blocked regions are boundary-inclusive: touching an edge counts as a
    collision, matching the conservative keep-out semantics.
    """

    def __init__(self, polygons: Sequence[Polygon]):
        self.polygons = list(polygons)
        edges_a: list[tuple[float, float]] = []
        edges_b: list[tuple[float, float]] = []
        starts: list[int] = []
        for poly in self.polygons:
            starts.append(len(edges_a))
            n = len(poly.vertices)
            for i in range(n):
                edges_a.append(tuple(poly.vertices[i]))
                edges_b.append(tuple(poly.vertices[(i + 1) % n]))
        self._n_edges = len(edges_a)
        if self._n_edges:
            self._a = np.asarray(edges_a)
            self._b = np.asarray(edges_b)
            self._starts = np.asarray(starts, dtype=np.intp)
            self._ab = self._b - self._a
            lo = np.minimum(self._a, self._b)
            hi = np.maximum(self._a, self._b)
            self._lo = lo
            self._hi = hi

    def point_free(self, p: Sequence[float]) -> bool:
        return not self._point_blocked(float(p[0]), float(p[1]))

    def _point_blocked(self, px: float, py: float) -> bool:
        if not self._n_edges:
            return False
        ap = np.array([px, py]) - self._a
        cross = self._ab[:, 0] * ap[:, 1] - self._ab[:, 1] * ap[:, 0]
        len2 = np.einsum("ij,ij->i", self._ab, self._ab)
        dot = np.einsum("ij,ij->i", ap, self._ab)
        on_edge = (cross * cross <= (1e-9 ** 2) * len2) & (dot >= -1e-9) & (dot <= len2 + 1e-9)
        if on_edge.any():
            return True
        y1 = self._a[:, 1]
        y2 = self._b[:, 1]
        cond = (y1 > py) != (y2 > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_cross = (self._b[:, 0] - self._a[:, 0]) * (py - y1) / (y2 - y1) + self._a[:, 0]
        crossed = np.where(cond, px < x_cross, False).astype(np.int64)
        counts = np.add.reduceat(crossed, self._starts)
        return bool((counts % 2 == 1).any())

    def segment_free(self, p: Sequence[float], q: Sequence[float]) -> bool:
        if not self._n_edges:
            return True
        px, py = float(p[0]), float(p[1])
        qx, qy = float(q[0]), float(q[1])
        # bbox prefilter
        sx_lo, sx_hi = min(px, qx), max(px, qx)
        sy_lo, sy_hi = min(py, qy), max(py, qy)
        mask = ~((self._hi[:, 0] < sx_lo) | (self._lo[:, 0] > sx_hi) |
                 (self._hi[:, 1] < sy_lo) | (self._lo[:, 1] > sy_hi))
        if mask.any():
            a = self._a[mask]
            b = self._b[mask]
            d1 = (b[:, 0] - a[:, 0]) * (py - a[:, 1]) - (b[:, 1] - a[:, 1]) * (px - a[:, 0])
            d2 = (b[:, 0] - a[:, 0]) * (qy - a[:, 1]) - (b[:, 1] - a[:, 1]) * (qx - a[:, 0])
            d3 = (qx - px) * (a[:, 1] - py) - (qy - py) * (a[:, 0] - px)
            d4 = (qx - px) * (b[:, 1] - py) - (qy - py) * (b[:, 0] - px)
            proper = (((d1 > 0) & (d2 < 0)) | ((d1 < 0) & (d2 > 0))) & \
                     (((d3 > 0) & (d4 < 0)) | ((d3 < 0) & (d4 > 0)))
            if proper.any():
                return False

            def on_seg(x, y, ax, ay, bx, by):
                return (np.minimum(ax, bx) <= x) & (x <= np.maximum(ax, bx)) & \
                       (np.minimum(ay, by) <= y) & (y <= np.maximum(ay, by))

            touch = ((d1 == 0) & on_seg(px, py, a[:, 0], a[:, 1], b[:, 0], b[:, 1])) | \
                    ((d2 == 0) & on_seg(qx, qy, a[:, 0], a[:, 1], b[:, 0], b[:, 1])) | \
                    ((d3 == 0) & on_seg(a[:, 0], a[:, 1], px, py, qx, qy)) | \
                    ((d4 == 0) & on_seg(b[:, 0], b[:, 1], px, py, qx, qy))
            if touch.any():
                return False
        # no edge contact: segment is either fully outside or fully inside
        return not self._point_blocked(0.5 * (px + qx), 0.5 * (py + qy))


def blocked_regions(obstacles: Sequence[ExtrudedObstacle],
                    kozs: Sequence[KeepOutZone] = ()) -> FreeSpace:
    """Free-space model for UAV planning: obstacle footprints plus KOZs
    that are active at all times (windowed KOZs are runtime concerns)."""
    polys = [o.footprint for o in obstacles]
    polys.extend(k.polygon for k in kozs if k.always_active)
    return FreeSpace(polys)


def rrt_plan(start: Point2, goal: Point2, obstacles: Sequence[ExtrudedObstacle],
             kozs: Sequence[KeepOutZone], cfg: RrtConfig) -> list[Point2]:
    """Rapidly-exploring random tree with greedy shortcut smoothing.

    Returns a collision-free polyline from start to goal (the goal is
    appended once a node lands within goal_radius and the closing segment
    is free). Deterministic for a fixed cfg.seed.
    """
    fs = blocked_regions(obstacles, kozs)
    start = Point2(float(start[0]), float(start[1]))
    goal = Point2(float(goal[0]), float(goal[1]))
    if not fs.point_free(start):
        raise PlanningError("start pose lies in blocked space", code="INVALID_ENDPOINT")
    if not fs.point_free(goal):
        raise PlanningError("goal pose lies in blocked space", code="INVALID_ENDPOINT")

    rng = np.random.Generator(np.random.Philox(cfg.seed))
    pts = [start, goal]
    for poly in fs.polygons:
        pts.extend(poly.vertices)
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    pad = max(4.0 * cfg.step_size, 10.0)
    x_lo, x_hi = min(xs) - pad, max(xs) + pad
    y_lo, y_hi = min(ys) - pad, max(ys) + pad

    nodes = np.empty((cfg.max_iters + 1, 2))
    nodes[0] = start
    parents = np.empty(cfg.max_iters + 1, dtype=np.intp)
    parents[0] = -1
    count = 1

    def backtrack(idx: int) -> list[Point2]:
        chain = []
        while idx >= 0:
            chain.append(Point2(*nodes[idx]))
            idx = parents[idx]
        chain.reverse()
        return chain

    goal_arr = np.asarray(goal)
    if math.dist(start, goal) <= cfg.goal_radius or \
       (math.dist(start, goal) <= cfg.step_size and fs.segment_free(start, goal)):
        path = [start, goal] if fs.segment_free(start, goal) else None
        if path:
            return path

    for _ in range(cfg.max_iters):
        if rng.random() < cfg.goal_bias:
            sample = goal_arr
        else:
            sample = np.array([rng.uniform(x_lo, x_hi), rng.uniform(y_lo, y_hi)])
        diffs = nodes[:count] - sample
        nearest = int(np.argmin(np.einsum("ij,ij->i", diffs, diffs)))
        base = nodes[nearest]
        delta = sample - base
        dist = float(np.hypot(delta[0], delta[1]))
        if dist < 1e-9:
            continue
        new = base + delta * (min(cfg.step_size, dist) / dist)
        if not fs.segment_free(base, new):
            continue
        nodes[count] = new
        parents[count] = nearest
        count += 1
        if math.dist(new, goal) <= cfg.goal_radius:
            path = backtrack(count - 1)
            if path[-1] != goal and fs.segment_free(path[-1], goal):
                path.append(goal)
            return _shortcut(path, fs)

    raise PlanningError(f"no path after {cfg.max_iters} iterations", code="NO_PATH")


def _shortcut(path: list[Point2], fs: FreeSpace) -> list[Point2]:
    """Greedy deterministic smoothing; keeps endpoints and collision-freedom."""
    if len(path) <= 2:
        return path
    out = [path[0]]
    i = 0
    while i < len(path) - 1:
        j = len(path) - 1
        while j > i + 1 and not fs.segment_free(path[i], path[j]):
            j -= 1
        out.append(path[j])
        i = j
    return out


def _polyline_length(pts: Sequence[Sequence[float]]) -> float:
    return sum(math.dist(a, b) for a, b in zip(pts, pts[1:]))


def _segment_yaws(pts: Sequence[Point2]) -> list[float]:
    yaws = []
    for a, b in zip(pts, pts[1:]):
        yaws.append(normalize_deg(math.degrees(math.atan2(b.y - a.y, b.x - a.x))))
    return yaws


def timed_path_from_polyline(pts: Sequence[Point2], speed: float,
                             z_start: float = 0.0, z_end: float | None = None,
                             t0: float = 0.0) -> TimedPath:
    """Constant ground-speed parameterization; yaw follows segment headings
    and altitude ramps linearly with arc length."""
    if speed <= 0.0:
        raise PlanningError("speed must be positive", code="INVALID_CONFIG")
    z_end = z_start if z_end is None else z_end
    if len(pts) == 1:
        return TimedPath([(t0, Pose(Point3(pts[0].x, pts[0].y, z_start), 0.0))])
    total = _polyline_length(pts)
    yaws = _segment_yaws(pts)
    samples = []
    run = 0.0
    for i, p in enumerate(pts):
        if i > 0:
            run += math.dist(pts[i - 1], p)
        frac = run / total if total > 0 else 0.0
        yaw = yaws[min(i, len(yaws) - 1)]
        samples.append((t0 + run / speed, Pose(Point3(p.x, p.y, z_start + frac * (z_end - z_start)), yaw)))
    return TimedPath(samples)


def plan_entity_route(start: Point2, goal: Point2, obstacles: Sequence[ExtrudedObstacle],
                      cfg: RrtConfig, speed: float = DEFAULT_CAR_SPEED) -> TimedPath:
    """Obstacle-avoiding ground route, time-parameterized at constant speed."""
    pts = rrt_plan(start, goal, obstacles, [], cfg)
    return timed_path_from_polyline(pts, speed=speed, z_start=0.0)


# ---------------------------------------------------------------------------
# waypoint follower (Nav2 stand-in)


@dataclass(frozen=True)
class FollowStep:
    pose: Pose
    consumed: int
    remaining: tuple[Point3, ...]


def follow_waypoints(pose: Pose, waypoints: Sequence[Point3], kin: UavKinematics,
                     dt: float) -> FollowStep:
    """Advance one tick toward the current waypoint.

    Moves straight at up to max_speed, slews yaw at up to max_yaw_rate,
    and consumes waypoints within WAYPOINT_RADIUS. An empty list leaves
    the pose unchanged.
    """
    if dt <= 0.0:
        raise PlanningError("dt must be positive", code="INVALID_CONFIG")
    remaining = [Point3(*map(float, w)) for w in waypoints]
    consumed = 0
    while remaining and math.dist(pose.position, remaining[0]) <= WAYPOINT_RADIUS:
        remaining.pop(0)
        consumed += 1
    if not remaining:
        return FollowStep(pose=pose, consumed=consumed, remaining=())

    wp = remaining[0]
    pos = pose.position
    dist = math.dist(pos, wp)
    step = min(kin.max_speed * dt, dist)
    f = step / dist if dist > 0 else 0.0
    new_pos = Point3(pos.x + f * (wp.x - pos.x),
                     pos.y + f * (wp.y - pos.y),
                     min(kin.z_max, max(kin.z_min, pos.z + f * (wp.z - pos.z))))
    dx, dy = wp.x - pos.x, wp.y - pos.y
    if math.hypot(dx, dy) > 1e-9:
        desired = normalize_deg(math.degrees(math.atan2(dy, dx)))
        err = desired - pose.yaw
        err = (err + 180.0) % 360.0 - 180.0
        max_turn = kin.max_yaw_rate * dt
        yaw = normalize_deg(pose.yaw + max(-max_turn, min(max_turn, err)))
    else:
        yaw = pose.yaw
    return FollowStep(pose=Pose(new_pos, yaw), consumed=consumed, remaining=tuple(remaining))


# ---------------------------------------------------------------------------
# area-search sweep


def _sweep_polygon(poly: Polygon, spacing: float, altitude: float,
                   overshoot: float) -> list[Point3]:
    """Boustrophedon rows across one polygon, rows evenly spaced <= spacing."""
    x_min, y_min, x_max, y_max = poly.bounds
    height = y_max - y_min
    n_rows = max(1, math.ceil(height / spacing))
    dy = height / n_rows
    shp = poly.to_shapely()
    waypoints: list[Point3] = []
    for row in range(n_rows):
        y = y_min + dy * (row + 0.5)
        cut = shp.intersection(shapely.LineString([(x_min - 1.0, y), (x_max + 1.0, y)]))
        segs: list[tuple[float, float]] = []
        geoms = getattr(cut, "geoms", [cut])
        for g in geoms:
            if g.geom_type == "LineString" and g.length > 0:
                xs = [c[0] for c in g.coords]
                segs.append((min(xs) - overshoot, max(xs) + overshoot))
        segs.sort()
        if row % 2 == 1:
            segs = [(b, a) for a, b in reversed(segs)]
        for a, b in segs:
            waypoints.append(Point3(a, y, altitude))
            waypoints.append(Point3(b, y, altitude))
    return waypoints


def plan_area_search(aois, priors, cam: CameraModel, altitude: float) -> list[Point3]:
    """Lawnmower sweep of the search area.

    Track spacing equals the camera footprint width at the given altitude.
    With priors, cells are swept in descending-probability order and the
    highest-prior cell gets one repeat visit appended at the end.
    """
    if not aois:
        raise PlanningError("area search needs at least one AOI", code="INVALID_CONFIG")
    try:
        fp = camera_footprint(Pose(Point3(0.0, 0.0, altitude), 0.0), cam)
    except SimulationError as exc:
        raise PlanningError(f"camera yields no footprint: {exc}", code="INVALID_CAMERA") from exc
    _, fy_min, _, fy_max = fp.bounds
    spacing = fy_max - fy_min
    if spacing <= 1e-6:
        raise PlanningError("camera footprint width is degenerate", code="INVALID_CAMERA")

    if priors is not None and priors.cells:
        order = sorted(range(len(priors.cells)),
                       key=lambda i: (-priors.cells[i].prob, i))
        units = [priors.cells[i].polygon for i in order]
        units.append(priors.cells[order[0]].polygon)  # revisit the hottest cell
    else:
        units = [a.polygon for a in aois]

    waypoints: list[Point3] = []
    for poly in units:
        waypoints.extend(_sweep_polygon(poly, spacing, altitude, overshoot=spacing / 2.0))
    return waypoints


# ---------------------------------------------------------------------------
# look-guarantee planning


@dataclass(frozen=True)
class LookPlan:
    path: TimedPath
    guarantee_time: float
    vantage: Pose


def _vantage_pose(target_xy: Point2, angle_deg: float, offset: float, altitude: float,
                  cam: CameraModel) -> Pose:
    rad = math.radians(angle_deg)
    vx = target_xy.x + offset * math.cos(rad)
    vy = target_xy.y + offset * math.sin(rad)
    if offset > 1e-9:
        boresight = normalize_deg(angle_deg + 180.0)
    else:
        boresight = 0.0
    return Pose(Point3(vx, vy, altitude), normalize_deg(boresight - cam.mount_yaw))


def _visible_from(uav: Pose, cam: CameraModel, center: Point3,
                  obstacles: Sequence[ExtrudedObstacle]) -> bool:
    try:
        fp = camera_footprint(uav, cam)
    except SimulationError:
        return False
    if not point_in_polygon(center.xy, fp):
        return False
    return line_of_sight(uav.position, center, obstacles)


def plan_look_guarantee_path(uav_start: Pose, target: EntitySpec, cam: CameraModel,
                             obstacles: Sequence[ExtrudedObstacle],
                             kozs: Sequence[KeepOutZone], kin: UavKinematics,
                             cfg: RrtConfig) -> LookPlan:
    """Plan a UAV path certified to put the target in the camera footprint.

    Candidate vantages sit on a ring around the (time-interpolated) target
    where the boresight hits the target; each is filtered by free space,
    connected with rrt_plan, and the resulting timed path is verified
    geometrically. The first verified plan is returned along with the tick
    time at which the look is guaranteed.
    """
    if cam.pitch >= 0.0:
        raise PlanningError("camera never sees the ground", code="INVALID_CAMERA")
    fs = blocked_regions(obstacles, kozs)
    sin_p = math.sin(math.radians(-cam.pitch))
    tan_p = math.tan(math.radians(-cam.pitch))

    altitudes = []
    for z in ((kin.z_min + kin.z_max) / 2.0, kin.z_min, kin.z_max):
        if z > 0 and z / sin_p <= 0.95 * cam.max_range and z not in altitudes:
            altitudes.append(z)
    if not altitudes:
        z = 0.95 * cam.max_range * sin_p
        if z >= kin.z_min:
            altitudes.append(min(z, kin.z_max))
    if not altitudes:
        raise PlanningError("altitude band puts the target beyond camera range",
                            code="NO_VANTAGE")

    def target_center(t: float) -> Point3:
        return target.bbox_at(target.pose_at(t)).center

    tick = 0.1
    t_est = 0.0
    for _ in range(2):
        c = target_center(t_est)
        t_est = math.dist(uav_start.position.xy, c.xy) / kin.max_speed

    ref = target_center(t_est)
    try:
        home_bearing = normalize_deg(math.degrees(
            math.atan2(uav_start.position.y - ref.y, uav_start.position.x - ref.x)))
    except ValueError:
        home_bearing = 0.0
    ring = sorted((normalize_deg(home_bearing + k * 30.0) for k in range(12)),
                  key=lambda a: (circ_diff_deg(a, home_bearing), a))

    for altitude in altitudes:
        offset = altitude / tan_p if tan_p > 1e-9 else 0.0
        for angle in ring:
            vantage = _vantage_pose(ref.xy, angle, offset, altitude, cam)
            if not fs.point_free(vantage.position.xy):
                continue
            if not _visible_from(vantage, cam, ref, obstacles):
                continue
            try:
                pts = rrt_plan(uav_start.position.xy, vantage.position.xy,
                               obstacles, kozs, cfg)
            except PlanningError:
                continue
            flight = timed_path_from_polyline(pts, speed=kin.max_speed,
                                              z_start=uav_start.position.z,
                                              z_end=altitude)
            t_arr = flight.t_last
            samples = list(flight.samples)
            last_pose = samples[-1][1]
            turn = circ_diff_deg(last_pose.yaw, vantage.yaw)
            t_turn = t_arr + max(tick, turn / kin.max_yaw_rate)
            # turn in place where the flight actually ended (the RRT may stop
            # within goal_radius of the vantage when the closing edge is blocked)
            settled = Pose(last_pose.position, vantage.yaw)
            samples.append((t_turn, settled))
            samples.append((t_turn + LOOK_HOVER_WINDOW, settled))
            path = TimedPath(samples)

            guarantee = None
            n_ticks = int(math.ceil(path.t_last / tick))
            # scan on the simulator's tick grid; tick 0 is never evaluated there
            for k in range(1, n_ticks + 1):
                t = k * tick
                uav = path.pose_at(t)
                if _visible_from(uav, cam, target_center(t), obstacles):
                    guarantee = t
                    break
            if guarantee is not None:
                return LookPlan(path=path, guarantee_time=guarantee, vantage=settled)

    raise PlanningError("no feasible vantage found", code="NO_VANTAGE")
