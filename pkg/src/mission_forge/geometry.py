"""Planar / 2.5D geometric primitives and predicates.

Conventions used throughout the package:

* coordinates are meters in a fixed local east-north-up frame,
* angles are degrees, yaw 0 points along +x and grows counterclockwise,
* containment tests are boundary-inclusive (touching an edge counts as
  inside), which gives conservative keep-out semantics.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np
import shapely

from .errors import GeometryError

# Perpendicular distance below which a point counts as lying on a boundary.
BOUNDARY_EPS = 1e-9


class Point2(NamedTuple):
    x: float
    y: float


class Point3(NamedTuple):
    x: float
    y: float
    z: float

    @property
    def xy(self) -> Point2:
        return Point2(self.x, self.y)


def normalize_deg(angle: float) -> float:
    """Wrap an angle to [0, 360)."""
    a = math.fmod(angle, 360.0)
    if a < 0.0:
        a += 360.0
    return 0.0 if a == 360.0 else a


def circ_diff_deg(a: float, b: float) -> float:
    """Smallest absolute angular difference between two angles, in [0, 180]."""
    d = abs(normalize_deg(a) - normalize_deg(b))
    return 360.0 - d if d > 180.0 else d


def _is_finite_xy(p: Sequence[float]) -> bool:
    return all(math.isfinite(v) for v in p)


def signed_area(vertices: Sequence[Point2]) -> float:
    """Shoelace area; positive for counterclockwise winding."""
    acc = 0.0
    n = len(vertices)
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        acc += x1 * y2 - x2 * y1
    return 0.5 * acc


@dataclass(frozen=True)
class Polygon:
    """Simple polygon with counterclockwise winding and nonzero area."""

    vertices: tuple[Point2, ...]

    def __init__(self, vertices: Iterable[Sequence[float]]):
        verts = tuple(Point2(float(p[0]), float(p[1])) for p in vertices)
        if len(verts) < 3:
            raise GeometryError("polygon needs at least 3 vertices", code="INVALID_POLYGON")
        for v in verts:
            if not _is_finite_xy(v):
                raise GeometryError("polygon vertices must be finite", code="INVALID_POLYGON")
        n = len(verts)
        for i in range(n):
            if verts[i] == verts[(i + 1) % n]:
                raise GeometryError("consecutive vertices coincide", code="INVALID_POLYGON")
        area = signed_area(verts)
        if area <= 0.0:
            raise GeometryError(
                "polygon must be counterclockwise with nonzero area", code="INVALID_POLYGON"
            )
        if not shapely.Polygon(verts).is_valid:
            raise GeometryError("polygon must be simple (no self-intersection)", code="INVALID_POLYGON")
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "_xy", np.asarray(verts, dtype=np.float64))

    @property
    def xy(self) -> np.ndarray:
        """Vertices as an (n, 2) float array."""
        return self._xy  # type: ignore[attr-defined]

    @property
    def area(self) -> float:
        return signed_area(self.vertices)

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        xs = self.xy[:, 0]
        ys = self.xy[:, 1]
        return float(xs.min()), float(ys.min()), float(xs.max()), float(ys.max())

    def centroid(self) -> Point2:
        a = signed_area(self.vertices)
        cx = cy = 0.0
        n = len(self.vertices)
        for i in range(n):
            x1, y1 = self.vertices[i]
            x2, y2 = self.vertices[(i + 1) % n]
            w = x1 * y2 - x2 * y1
            cx += (x1 + x2) * w
            cy += (y1 + y2) * w
        return Point2(cx / (6.0 * a), cy / (6.0 * a))

    def edges(self) -> list[tuple[Point2, Point2]]:
        n = len(self.vertices)
        return [(self.vertices[i], self.vertices[(i + 1) % n]) for i in range(n)]

    def scaled(self, factor: float) -> "Polygon":
        """Scale about the centroid; factor > 0."""
        c = self.centroid()
        return Polygon(
            [(c.x + (v.x - c.x) * factor, c.y + (v.y - c.y) * factor) for v in self.vertices]
        )

    def to_shapely(self) -> shapely.Polygon:
        return shapely.Polygon(self.vertices)


def rectangle(x_min: float, y_min: float, x_max: float, y_max: float) -> Polygon:
    """Axis-aligned rectangle as a CCW polygon."""
    if not (x_max > x_min and y_max > y_min):
        raise GeometryError("rectangle must have positive extent", code="INVALID_POLYGON")
    return Polygon([(x_min, y_min), (x_max, y_min), (x_max, y_max), (x_min, y_max)])


def polygon_from_shapely(geom: shapely.Polygon) -> Polygon:
    coords = list(geom.exterior.coords)[:-1]
    if signed_area([Point2(*c) for c in coords]) < 0.0:
        coords.reverse()
    # Drop duplicate consecutive points that shapely sometimes emits.
    cleaned: list[tuple[float, float]] = []
    for c in coords:
        if not cleaned or (abs(c[0] - cleaned[-1][0]) > 1e-12 or abs(c[1] - cleaned[-1][1]) > 1e-12):
            cleaned.append((c[0], c[1]))
    return Polygon(cleaned)


@dataclass(frozen=True)
class ExtrudedObstacle:
    """Vertical prism: a footprint polygon extruded to ``height`` meters."""

    footprint: Polygon
    height: float

    def __post_init__(self):
        if not (math.isfinite(self.height) and self.height >= 0.0):
            raise GeometryError("obstacle height must be >= 0", code="INVALID_OBSTACLE")


@dataclass(frozen=True)
class Pose:
    """Position plus heading; yaw normalized to [0, 360)."""

    position: Point3
    yaw: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.position) or not math.isfinite(self.yaw):
            raise GeometryError("pose must be finite", code="INVALID_POSE")
        object.__setattr__(self, "position", Point3(*map(float, self.position)))
        object.__setattr__(self, "yaw", normalize_deg(float(self.yaw)))


@dataclass(frozen=True)
class BoundingBox3:
    """Oriented box: center, per-axis half-sizes, yaw about +z."""

    center: Point3
    extents: tuple[float, float, float]
    yaw: float = 0.0

    def __post_init__(self):
        ext = tuple(float(e) for e in self.extents)
        if len(ext) != 3 or any(not math.isfinite(e) or e <= 0.0 for e in ext):
            raise GeometryError("bbox extents must be positive", code="INVALID_BBOX")
        object.__setattr__(self, "center", Point3(*map(float, self.center)))
        object.__setattr__(self, "extents", ext)
        object.__setattr__(self, "yaw", normalize_deg(float(self.yaw)))

    @property
    def min_z(self) -> float:
        return self.center.z - self.extents[2]

    @property
    def max_z(self) -> float:
        return self.center.z + self.extents[2]

    def footprint(self) -> Polygon:
        """Plan-view rectangle of the box."""
        ex, ey, _ = self.extents
        rad = math.radians(self.yaw)
        c, s = math.cos(rad), math.sin(rad)
        pts = []
        for dx, dy in ((-ex, -ey), (ex, -ey), (ex, ey), (-ex, ey)):
            pts.append((self.center.x + dx * c - dy * s, self.center.y + dx * s + dy * c))
        return Polygon(pts)


def bbox_world(bbox: BoundingBox3, pose: Pose) -> BoundingBox3:
    """World-frame box for a body-frame box attached to a pose."""
    rad = math.radians(pose.yaw)
    c, s = math.cos(rad), math.sin(rad)
    off = bbox.center
    return BoundingBox3(
        center=Point3(pose.position.x + off.x * c - off.y * s,
                      pose.position.y + off.x * s + off.y * c,
                      pose.position.z + off.z),
        extents=bbox.extents,
        yaw=pose.yaw + bbox.yaw)


# ---------------------------------------------------------------------------
# scalar predicates


def _point_on_segment(px: float, py: float, ax: float, ay: float, bx: float, by: float,
                      tol: float = BOUNDARY_EPS) -> bool:
    abx, aby = bx - ax, by - ay
    apx, apy = px - ax, py - ay
    seg_len = math.hypot(abx, aby)
    if seg_len == 0.0:
        return math.hypot(apx, apy) <= tol
    # perpendicular distance from the segment's carrier line
    if abs(abx * apy - aby * apx) / seg_len > tol:
        return False
    dot = apx * abx + apy * aby
    return -tol * seg_len <= dot <= seg_len * seg_len + tol * seg_len

def point_in_polygon(p: Sequence[float], poly: Polygon) -> bool:
    """Boundary-inclusive containment test (even-odd rule plus edge check)."""
    px, py = float(p[0]), float(p[1])
    verts = poly.vertices
    n = len(verts)
    for i in range(n):
        a = verts[i]
        b = verts[(i + 1) % n]
        if _point_on_segment(px, py, a.x, a.y, b.x, b.y):
            return True
    inside = False
    j = n - 1
    for i in range(n):
        xi, yi = verts[i]
        xj, yj = verts[j]
        if (yi > py) != (yj > py):
            x_cross = (xj - xi) * (py - yi) / (yj - yi) + xi
            if px < x_cross:
                inside = not inside
        j = i
    return inside


def _orient(ax, ay, bx, by, cx, cy) -> float:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def segments_intersect(a1: Sequence[float], a2: Sequence[float],
                       b1: Sequence[float], b2: Sequence[float]) -> bool:
    """Closed-segment intersection, touching and collinear overlap included."""
    d1 = _orient(b1[0], b1[1], b2[0], b2[1], a1[0], a1[1])
    d2 = _orient(b1[0], b1[1], b2[0], b2[1], a2[0], a2[1])
    d3 = _orient(a1[0], a1[1], a2[0], a2[1], b1[0], b1[1])
    d4 = _orient(a1[0], a1[1], a2[0], a2[1], b2[0], b2[1])
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and \
       ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)):
        return True
    if d1 == 0.0 and _point_on_segment(a1[0], a1[1], b1[0], b1[1], b2[0], b2[1], 0.0):
        return True
    if d2 == 0.0 and _point_on_segment(a2[0], a2[1], b1[0], b1[1], b2[0], b2[1], 0.0):
        return True
    if d3 == 0.0 and _point_on_segment(b1[0], b1[1], a1[0], a1[1], a2[0], a2[1], 0.0):
        return True
    if d4 == 0.0 and _point_on_segment(b2[0], b2[1], a1[0], a1[1], a2[0], a2[1], 0.0):
        return True
    return False


def segment_polygon_overlap(a: Sequence[float], b: Sequence[float], poly: Polygon) -> bool:
    """True iff the closed segment a-b intersects the closed polygon region."""
    if point_in_polygon(a, poly) or point_in_polygon(b, poly):
        return True
    for e1, e2 in poly.edges():
        if segments_intersect(a, b, e1, e2):
            return True
    return False


def _segment_crossing_params(a: Sequence[float], b: Sequence[float], poly: Polygon) -> list[float]:
    """Parameters t in [0, 1] where segment a-b meets the polygon boundary."""
    ax, ay = float(a[0]), float(a[1])
    bx, by = float(b[0]), float(b[1])
    dx, dy = bx - ax, by - ay
    params: list[float] = []
    for (e1, e2) in poly.edges():
        ex, ey = e2.x - e1.x, e2.y - e1.y
        denom = dx * ey - dy * ex
        if denom != 0.0:
            t = ((e1.x - ax) * ey - (e1.y - ay) * ex) / denom
            u = ((e1.x - ax) * dy - (e1.y - ay) * dx) / denom
            if -1e-12 <= t <= 1.0 + 1e-12 and -1e-12 <= u <= 1.0 + 1e-12:
                params.append(min(1.0, max(0.0, t)))
        else:
            # parallel; collinear touch contributes the projected overlap ends
            if _orient(ax, ay, bx, by, e1.x, e1.y) == 0.0:
                seg2 = dx * dx + dy * dy
                if seg2 > 0.0:
                    for q in (e1, e2):
                        t = ((q.x - ax) * dx + (q.y - ay) * dy) / seg2
                        if 0.0 <= t <= 1.0:
                            params.append(t)
                    for q, t in (((ax, ay), 0.0), ((bx, by), 1.0)):
                        if _point_on_segment(q[0], q[1], e1.x, e1.y, e2.x, e2.y, 0.0):
                            params.append(t)
    return sorted(params)


def line_of_sight(a: Point3, b: Point3, obstacles: Sequence[ExtrudedObstacle]) -> bool:
    """True iff the 3D segment a-b clears every extruded obstacle.

    The segment is blocked by an obstacle when its plan-view projection
    meets the footprint at some point where the interpolated segment
    height does not exceed the obstacle height.
    """
    a = Point3(*map(float, a))
    b = Point3(*map(float, b))
    if not (_is_finite_xy(a) and _is_finite_xy(b) and math.isfinite(a.z) and math.isfinite(b.z)):
        raise GeometryError("line_of_sight endpoints must be finite")
    for obs in obstacles:
        x_min, y_min, x_max, y_max = obs.footprint.bounds
        if max(a.x, b.x) < x_min or min(a.x, b.x) > x_max or \
           max(a.y, b.y) < y_min or min(a.y, b.y) > y_max:
            continue
        params = _segment_crossing_params(a.xy, b.xy, obs.footprint)
        if point_in_polygon(a.xy, obs.footprint):
            params.append(0.0)
        if point_in_polygon(b.xy, obs.footprint):
            params.append(1.0)
        for t in params:
            z = a.z + t * (b.z - a.z)
            if z <= obs.height:
                return False
    return True


def relative_bearing(target: Pose, related: Sequence[float]) -> float:
    """Plan-view bearing from a pose to a point, CCW degrees from the heading.

    0 means dead ahead, 90 left, 180 behind, 270 right.
    """
    dx = float(related[0]) - target.position.x
    dy = float(related[1]) - target.position.y
    if math.hypot(dx, dy) < 1e-12:
        raise GeometryError("bearing undefined for coincident points",
                            code="DEGENERATE_GEOMETRY")
    return normalize_deg(math.degrees(math.atan2(dy, dx)) - target.yaw)


def polygons_overlap(a: Polygon, b: Polygon) -> bool:
    """Boundary-inclusive overlap of two polygon regions."""
    for v in a.vertices:
        if point_in_polygon(v, b):
            return True
    for v in b.vertices:
        if point_in_polygon(v, a):
            return True
    for a1, a2 in a.edges():
        for b1, b2 in b.edges():
            if segments_intersect(a1, a2, b1, b2):
                return True
    return False


# ---------------------------------------------------------------------------
# timed paths


@dataclass(frozen=True)
class TimedPath:
    """Time-stamped pose sequence; linear interpolation between samples.

    Outside [t_first, t_last] the path clamps to its end poses, which lets
    the simulator hold the final pose once a trajectory is exhausted.
    """

    samples: tuple[tuple[float, Pose], ...]
    _t: np.ndarray = field(init=False, repr=False, compare=False)

    def __init__(self, samples: Iterable[tuple[float, Pose]]):
        ss = tuple((float(t), p) for t, p in samples)
        if not ss:
            raise GeometryError("timed path needs at least one sample", code="EMPTY_PATH")
        for (t1, _), (t2, _) in zip(ss, ss[1:]):
            if not t2 > t1:
                raise GeometryError("timed path timestamps must strictly increase",
                                    code="NON_MONOTONIC_PATH")
        if ss[0][0] < 0.0:
            raise GeometryError("timed path timestamps must be >= 0", code="NEGATIVE_TIME")
        object.__setattr__(self, "samples", ss)
        object.__setattr__(self, "_t", np.array([t for t, _ in ss], dtype=np.float64))
        xyz = np.array([[p.position.x, p.position.y, p.position.z] for _, p in ss])
        object.__setattr__(self, "_xyz", xyz)
        yaw = np.array([p.yaw for _, p in ss], dtype=np.float64)
        object.__setattr__(self, "_yaw_unwrapped", np.degrees(np.unwrap(np.radians(yaw))))

    @property
    def t_first(self) -> float:
        return float(self._t[0])

    @property
    def t_last(self) -> float:
        return float(self._t[-1])

    @property
    def duration(self) -> float:
        return self.t_last - self.t_first

    def pose_at(self, t: float) -> Pose:
        ts = self._t
        if t <= ts[0]:
            return self.samples[0][1]
        if t >= ts[-1]:
            return self.samples[-1][1]
        i = bisect_right(ts.tolist(), t) - 1
        t0, p0 = self.samples[i]
        t1, p1 = self.samples[i + 1]
        w = (t - t0) / (t1 - t0)
        x = p0.position.x + w * (p1.position.x - p0.position.x)
        y = p0.position.y + w * (p1.position.y - p0.position.y)
        z = p0.position.z + w * (p1.position.z - p0.position.z)
        y0 = self._yaw_unwrapped[i]  # type: ignore[attr-defined]
        y1 = self._yaw_unwrapped[i + 1]  # type: ignore[attr-defined]
        return Pose(Point3(x, y, z), normalize_deg(y0 + w * (y1 - y0)))

    def positions_at(self, times: np.ndarray) -> np.ndarray:
        """Vectorized (n, 3) positions, clamped outside the time span."""
        t = np.asarray(times, dtype=np.float64)
        xyz = self._xyz  # type: ignore[attr-defined]
        out = np.empty((t.size, 3))
        for k in range(3):
            out[:, k] = np.interp(t, self._t, xyz[:, k])
        return out
