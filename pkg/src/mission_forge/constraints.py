"""Spatial-temporal constraint semantics: KOZ violations along timed paths,
AOI activation windows, street-denial KOZ construction, and prior lookup.

Entry/exit times are computed analytically from the piecewise-linear path
against polygon edges, which beats the 0.1 s reporting requirement without
dense sampling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import ConstraintError
from .geometry import (
    Point2,
    Polygon,
    TimedPath,
    _segment_crossing_params,
    point_in_polygon,
)
from .scenario import AreaOfInterest, AreaPriorMap, KeepOutZone, TimeWindow

MERGE_TOL = 1e-9


@dataclass(frozen=True)
class Violation:
    koz_id: str
    enter_t: float
    exit_t: float
    witness_point: Point2


def polygon_occupancy_intervals(path: TimedPath, poly: Polygon) -> list[tuple[float, float]]:
    """Maximal time intervals during which the interpolated plan-view
    position lies inside the polygon (boundary-inclusive)."""
    intervals: list[tuple[float, float]] = []
    samples = path.samples
    if len(samples) == 1:
        t, pose = samples[0]
        if point_in_polygon(pose.position.xy, poly):
            intervals.append((t, t))
        return intervals

    for (t0, p0), (t1, p1) in zip(samples, samples[1:]):
        a = p0.position.xy
        b = p1.position.xy
        if a == b:
            cuts = []
        else:
            cuts = _segment_crossing_params(a, b, poly)
        knots = sorted({0.0, 1.0, *cuts})
        for u0, u1 in zip(knots, knots[1:]):
            um = 0.5 * (u0 + u1)
            mid = Point2(a.x + um * (b.x - a.x), a.y + um * (b.y - a.y))
            if point_in_polygon(mid, poly):
                intervals.append((t0 + u0 * (t1 - t0), t0 + u1 * (t1 - t0)))
        # tangential touch: boundary contact without interior dwell
        for u in cuts:
            tc = t0 + u * (t1 - t0)
            pc = Point2(a.x + u * (b.x - a.x), a.y + u * (b.y - a.y))
            if point_in_polygon(pc, poly) and not any(s - MERGE_TOL <= tc <= e + MERGE_TOL
                                                      for s, e in intervals):
                intervals.append((tc, tc))

    intervals.sort()
    merged: list[tuple[float, float]] = []
    for s, e in intervals:
        if merged and s <= merged[-1][1] + MERGE_TOL:
            merged[-1] = (merged[-1][0], max(merged[-1][1], e))
        else:
            merged.append((s, e))
    return merged


def _clip_to_window(intervals: list[tuple[float, float]],
                    window: TimeWindow | None) -> list[tuple[float, float]]:
    if window is None:
        return intervals
    out = []
    for s, e in intervals:
        cs, ce = max(s, window.net), min(e, window.nlt)
        if cs <= ce:
            out.append((cs, ce))
    return out


def koz_violations(path: TimedPath, kozs: Sequence[KeepOutZone]) -> list[Violation]:
    """One violation per maximal interval spent inside an active KOZ.

    A KOZ with no window is always active; a windowed KOZ only counts
    while t lies inside the window (boundary-inclusive). Altitude does not
    exempt the path: the test is plan-view only.
    """
    out: list[Violation] = []
    for koz in kozs:
        intervals = _clip_to_window(polygon_occupancy_intervals(path, koz.polygon), koz.window)
        for s, e in intervals:
            mid = path.pose_at(0.5 * (s + e)).position.xy
            out.append(Violation(koz_id=koz.id, enter_t=s, exit_t=e, witness_point=mid))
    out.sort(key=lambda v: (v.enter_t, v.koz_id))
    return out


def aoi_active(aoi: AreaOfInterest, t: float) -> bool:
    """True iff the AOI has no window or t lies inside it (inclusive)."""
    return aoi.window is None or aoi.window.contains(t)


def street_denial_koz(street: Polygon, traj: TimedPath, pad: float = 0.0,
                      koz_id: str = "street_denial") -> KeepOutZone:
    """Deny the street to the UAV while the entity traverses it.

    The produced KOZ uses the street polygon and a window spanning the
    first entry to the last exit of the trajectory, padded by ``pad``
    seconds and clamped at zero.
    """
    intervals = polygon_occupancy_intervals(traj, street)
    if not intervals:
        raise ConstraintError("trajectory never enters the street polygon",
                              code="NO_INTERSECTION")
    first = intervals[0][0]
    last = intervals[-1][1]
    window = TimeWindow(net=max(0.0, first - pad), nlt=last + pad)
    return KeepOutZone(id=koz_id, polygon=street, window=window)


def inside_active_aoi(aois: Sequence[AreaOfInterest], p: Point2 | Sequence[float],
                      t: float) -> bool:
    """True iff p lies inside any AOI whose window is active at t."""
    return any(aoi_active(a, t) and point_in_polygon(p, a.polygon) for a in aois)


def prior_lookup(priors: AreaPriorMap, p: Point2 | Sequence[float]) -> float:
    """Probability of the cell containing p; boundary ties go to the lowest
    cell index; points outside every cell return 0."""
    for cell in priors.cells:
        if point_in_polygon(p, cell.polygon):
            return cell.prob
    return 0.0
