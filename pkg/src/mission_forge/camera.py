"""Camera payload model and ground-footprint projection."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import SimulationError
from .geometry import Point2, Polygon, Pose, signed_area


@dataclass(frozen=True)
class CameraModel:
    """Pinhole-style frustum: fields of view, range limit, and mounting.

    pitch is the boresight elevation in degrees: -90 looks straight down
    (nadir), 0 at the horizon. mount_yaw rotates the boresight relative to
    the vehicle heading.
    """

    hfov: float
    vfov: float
    max_range: float
    pitch: float = -90.0
    mount_yaw: float = 0.0


def camera_footprint(uav: Pose, cam: CameraModel) -> Polygon:
    """Plan-view ground footprint of the camera frustum.

    Projects the four corner rays onto the ground plane and clamps each
    corner to the max_range disk around the UAV's ground point. Raises
    EMPTY_FOOTPRINT when the boresight does not look below the horizon or
    the UAV is on the ground.
    """
    alt = uav.position.z
    if alt <= 0.0:
        raise SimulationError("footprint undefined at or below ground level",
                              code="EMPTY_FOOTPRINT")
    if cam.pitch >= 0.0:
        raise SimulationError("camera at or above the horizon has no ground footprint",
                              code="EMPTY_FOOTPRINT")
    az = math.radians(uav.yaw + cam.mount_yaw)
    el = math.radians(cam.pitch)
    # Orthonormal camera basis: boresight, image-right, image-up.
    b = (math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), math.sin(el))
    r = (math.sin(az), -math.cos(az), 0.0)
    u = (r[1] * b[2] - r[2] * b[1], r[2] * b[0] - r[0] * b[2], r[0] * b[1] - r[1] * b[0])
    th = math.tan(math.radians(cam.hfov) / 2.0)
    tv = math.tan(math.radians(cam.vfov) / 2.0)

    ux, uy = uav.position.x, uav.position.y
    corners: list[Point2] = []
    for sh, sv in ((th, tv), (-th, tv), (-th, -tv), (th, -tv)):
        d = (b[0] + sh * r[0] + sv * u[0],
             b[1] + sh * r[1] + sv * u[1],
             b[2] + sh * r[2] + sv * u[2])
        horiz = math.hypot(d[0], d[1])
        if d[2] < -1e-12:
            t = -alt / d[2]
            gx, gy = ux + t * d[0], uy + t * d[1]
            if math.hypot(gx - ux, gy - uy) <= cam.max_range:
                corners.append(Point2(gx, gy))
                continue
        if horiz <= 1e-12:
            corners.append(Point2(ux, uy))
            continue
        # Ray exits the range disk (or points above the horizon): clamp.
        corners.append(Point2(ux + cam.max_range * d[0] / horiz,
                              uy + cam.max_range * d[1] / horiz))
    if signed_area(corners) < 0.0:
        corners.reverse()
    if abs(signed_area(corners)) < 1e-9:
        raise SimulationError("degenerate camera footprint", code="EMPTY_FOOTPRINT")
    return Polygon(corners)
