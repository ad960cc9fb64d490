"""Static SVG rendering of a scenario (and optionally a flown mission).

Output is deterministic: fixed float formatting, fixed layer order, no
timestamps. Layers from bottom to top: obstacles, AOIs, prior cells
(shaded by probability), route band and line, KOZs, entity trajectories,
entity markers, UAV path from the log.
"""

from __future__ import annotations

from .geometry import Polygon
from .scenario import MissionDescription, SimulationConfig, route_band
from .sim import MissionLog

_MARGIN = 25.0


def _f(v: float) -> str:
    return f"{v:.3f}"


def _points(poly: Polygon) -> str:
    return " ".join(f"{_f(p.x)},{_f(p.y)}" for p in poly.vertices)


def _polyline(points) -> str:
    return " ".join(f"{_f(x)},{_f(y)}" for x, y in points)


def render_scene(md: MissionDescription, cfg: SimulationConfig,
                 log: MissionLog | None = None) -> str:
    """Compose the scenario into an SVG document string."""
    xs: list[float] = []
    ys: list[float] = []

    def track(points) -> None:
        for p in points:
            xs.append(p[0])
            ys.append(p[1])

    band = None
    if md.route is not None:
        band = route_band(md.route)
        track(band.vertices)
    for a in md.aois:
        track(a.polygon.vertices)
    for k in md.kozs:
        track(k.polygon.vertices)
    for o in cfg.obstacles:
        track(o.footprint.vertices)
    for e in cfg.entities:
        track([e.initial_pose.position.xy])
        if e.trajectory is not None:
            track([s[1].position.xy for s in e.trajectory.samples])
    track([cfg.uav_start.position.xy])
    if not xs:
        xs, ys = [0.0, 100.0], [0.0, 100.0]

    x0, x1 = min(xs) - _MARGIN, max(xs) + _MARGIN
    y0, y1 = min(ys) - _MARGIN, max(ys) + _MARGIN
    w, h = x1 - x0, y1 - y0

    parts: list[str] = []
    parts.append(f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_f(w)} {_f(h)}" '
                 f'width="{_f(w)}" height="{_f(h)}">')
    parts.append(f'<g transform="translate({_f(-x0)},{_f(y1)}) scale(1,-1)">')
    parts.append(f'<rect x="{_f(x0)}" y="{_f(y0)}" width="{_f(w)}" height="{_f(h)}" '
                 f'fill="#f4f2ec"/>')

    for o in cfg.obstacles:
        parts.append(f'<polygon class="obstacle" points="{_points(o.footprint)}" '
                     f'fill="#b0a79b" stroke="#7d766c" stroke-width="0.5"/>')

    for a in md.aois:
        parts.append(f'<polygon class="aoi" points="{_points(a.polygon)}" fill="#2d7dd2" '
                     f'fill-opacity="0.10" stroke="#2d7dd2" stroke-width="1.2"/>')

    if md.priors is not None:
        max_p = max((c.prob for c in md.priors.cells), default=1.0) or 1.0
        for c in md.priors.cells:
            opacity = 0.05 + 0.45 * (c.prob / max_p)
            parts.append(f'<polygon class="prior-cell" points="{_points(c.polygon)}" '
                         f'fill="#2d7dd2" fill-opacity="{_f(opacity)}" '
                         f'stroke="#1d5a9e" stroke-width="0.4">'
                         f'<title>p={_f(c.prob)}</title></polygon>')

    if md.route is not None and band is not None:
        parts.append(f'<polygon class="route-band" points="{_points(band)}" fill="#43aa8b" '
                     f'fill-opacity="0.15" stroke="#43aa8b" stroke-width="0.8"/>')
        parts.append(f'<polyline class="route-line" '
                     f'points="{_polyline([(p.x, p.y) for p in md.route.polyline])}" '
                     f'fill="none" stroke="#2a7f62" stroke-width="1.5"/>')

    for k in md.kozs:
        parts.append(f'<polygon class="koz" points="{_points(k.polygon)}" fill="#e63946" '
                     f'fill-opacity="0.25" stroke="#e63946" stroke-width="1.2">'
                     f'<title>{k.id}</title></polygon>')

    for e in cfg.entities:
        if e.trajectory is not None:
            pts = [(s[1].position.x, s[1].position.y) for s in e.trajectory.samples]
            parts.append(f'<polyline class="trajectory" points="{_polyline(pts)}" '
                         f'fill="none" stroke="#c1121f" stroke-width="1.0" '
                         f'stroke-dasharray="3,2"/>')

    for e in cfg.entities:
        cls = "entity target" if e.is_target else \
            ("entity confuser" if e.is_confuser else "entity")
        color = "#c1121f" if e.is_target else ("#f77f00" if e.is_confuser else "#3a5a40")
        p = e.initial_pose.position
        parts.append(f'<circle class="{cls}" cx="{_f(p.x)}" cy="{_f(p.y)}" r="2.2" '
                     f'fill="{color}" stroke="#222222" stroke-width="0.4">'
                     f'<title>{e.id}</title></circle>')

    if log is not None:
        pts = [(evt["uav"]["position"]["x"], evt["uav"]["position"]["y"])
               for evt in log.events if evt.get("kind") == "tick"]
        if pts:
            parts.append(f'<polyline class="uav-path" points="{_polyline(pts)}" '
                         f'fill="none" stroke="#5a189a" stroke-width="1.2"/>')

    p = cfg.uav_start.position
    parts.append(f'<circle class="uav-start" cx="{_f(p.x)}" cy="{_f(p.y)}" r="3.0" '
                 f'fill="#5a189a" stroke="#222222" stroke-width="0.5"/>')
    parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
