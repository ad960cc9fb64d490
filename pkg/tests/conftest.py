"""Shared test helpers: independent geometric oracles and scene builders."""

from __future__ import annotations

import math

import numpy as np
import pytest
import shapely

from mission_forge.geometry import (
    BoundingBox3,
    ExtrudedObstacle,
    Point3,
    Polygon,
    Pose,
    rectangle,
)
from mission_forge.relations import SceneSnapshot, make_entity


# ---------------------------------------------------------------------------
# oracles (kept independent of the library implementations they check)


def winding_number_inside(px: float, py: float, vertices, eps: float = 1e-9) -> bool:
    """Winding-number containment with an explicit boundary epsilon."""
    n = len(vertices)
    for i in range(n):
        ax, ay = vertices[i]
        bx, by = vertices[(i + 1) % n]
        abx, aby = bx - ax, by - ay
        apx, apy = px - ax, py - ay
        seg = math.hypot(abx, aby)
        if seg > 0 and abs(abx * apy - aby * apx) / seg <= eps:
            t = (apx * abx + apy * aby) / (seg * seg)
            if -eps <= t <= 1 + eps:
                return True
    wn = 0
    for i in range(n):
        ax, ay = vertices[i]
        bx, by = vertices[(i + 1) % n]
        if ay <= py:
            if by > py and (bx - ax) * (py - ay) - (by - ay) * (px - ax) > 0:
                wn += 1
        else:
            if by <= py and (bx - ax) * (py - ay) - (by - ay) * (px - ax) < 0:
                wn -= 1
    return wn != 0


def los_sampling_oracle(a: Point3, b: Point3, obstacles, n: int = 4000) -> bool:
    """Dense 3D ray sampling: blocked iff any sample sits inside a prism."""
    for i in range(n + 1):
        t = i / n
        x = a.x + t * (b.x - a.x)
        y = a.y + t * (b.y - a.y)
        z = a.z + t * (b.z - a.z)
        for obs in obstacles:
            if z <= obs.height and shapely.intersects_xy(obs.footprint.to_shapely(), x, y):
                return False
    return True


def koz_occupancy_oracle(path, poly, dt: float = 0.001):
    """Dense time sampling of plan-view containment; returns merged intervals."""
    t0, t1 = path.t_first, path.t_last
    times = np.arange(t0, t1 + dt / 2, dt)
    pos = path.positions_at(times)
    inside = shapely.intersects_xy(poly.to_shapely(), pos[:, 0], pos[:, 1])
    intervals = []
    start = None
    for t, flag in zip(times, inside):
        if flag and start is None:
            start = t
        elif not flag and start is not None:
            intervals.append((start, prev))
            start = None
        prev = t
    if start is not None:
        intervals.append((start, times[-1]))
    return intervals


def random_convex_polygon(rng: np.random.Generator, center, radius: float,
                          n: int = 6) -> Polygon:
    """Random convex polygon: points on a jittered circle, hull order."""
    for _ in range(20):
        angles = np.sort(rng.uniform(0, 2 * math.pi, n))
        radii = rng.uniform(0.4 * radius, radius, n)
        pts = [(center[0] + r * math.cos(a), center[1] + r * math.sin(a))
               for a, r in zip(angles, radii)]
        hull = shapely.MultiPoint(pts).convex_hull
        if hull.geom_type != "Polygon" or hull.area < 1e-6:
            continue
        coords = list(hull.exterior.coords)[:-1]
        area2 = sum(coords[i][0] * coords[(i + 1) % len(coords)][1] -
                    coords[(i + 1) % len(coords)][0] * coords[i][1]
                    for i in range(len(coords)))
        if area2 < 0:
            coords.reverse()
        return Polygon(coords)
    raise AssertionError("could not build a random convex polygon")


def random_scene(rng: np.random.Generator, n_entities: int,
                 with_obstacles: bool = True) -> tuple[str, SceneSnapshot]:
    """Scene with one car target plus assorted context entities."""
    classes = ["garage", "shed", "tree", "car", "dumpster"]
    entities = {}
    target_id = "car_000"
    entities[target_id] = make_entity(
        pose=Pose(Point3(0.0, 0.0, 0.0), float(rng.uniform(0, 360))),
        bbox=BoundingBox3(Point3(0, 0, 0.8), (2.4, 1.0, 0.8), 0.0),
        entity_class="car", attributes={"color": "red", "model": "sedan"})
    for i in range(n_entities - 1):
        cls = classes[int(rng.integers(0, len(classes)))]
        pos = Point3(float(rng.uniform(-25, 25)), float(rng.uniform(-25, 25)),
                     float(rng.uniform(0, 4)) if cls != "car" else 0.0)
        entities[f"{cls}_{i + 1:03d}"] = make_entity(
            pose=Pose(pos, float(rng.uniform(0, 360))),
            bbox=BoundingBox3(Point3(0, 0, 1.0), (2.0, 1.5, 1.0),
                              float(rng.uniform(0, 360))),
            entity_class=cls, attributes={"color": "white"})
    obstacles = ()
    if with_obstacles and rng.random() < 0.5:
        cx, cy = rng.uniform(-15, 15, 2)
        obstacles = (ExtrudedObstacle(
            rectangle(cx, cy, cx + rng.uniform(2, 8), cy + rng.uniform(2, 8)),
            float(rng.uniform(1, 12))),)
    return target_id, SceneSnapshot(time=0.0, entities=entities, obstacles=obstacles)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.Generator(np.random.Philox(20260811))
