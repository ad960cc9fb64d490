"""Mission scoring: reduce a mission log to a metrics report.

The report is a pure function of (log, mission description); the protocol
server embeds the same report in its closing message, so offline
recomputation must agree with it bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

from .canonical import content_hash
from .errors import ScoringError
from .scenario import MissionDescription
from .serde import serialize_mission
from .sim import MissionLog


@dataclass
class MetricsReport:
    target_detected: bool
    correct_disambiguation: bool
    time_to_first_detection: float | None
    koz_violation_count: int
    koz_violation_duration: float
    pursuit_in_view_fraction: float
    aoi_dwell_fraction: float
    mission_failed: bool

    def to_dict(self) -> dict:
        return {
            "target_detected": self.target_detected,
            "correct_disambiguation": self.correct_disambiguation,
            "time_to_first_detection": self.time_to_first_detection,
            "koz_violation_count": self.koz_violation_count,
            "koz_violation_duration": self.koz_violation_duration,
            "pursuit_in_view_fraction": self.pursuit_in_view_fraction,
            "aoi_dwell_fraction": self.aoi_dwell_fraction,
            "mission_failed": self.mission_failed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__})  # type: ignore[arg-type]


def score_mission(log: MissionLog, md: MissionDescription) -> MetricsReport:
    """Score a completed mission log against its mission description.

    Raises INCOMPATIBLE_INPUTS when the log was produced from a different
    mission document (hash mismatch).
    """
    if log.meta.get("mission_hash") != content_hash(serialize_mission(md)):
        raise ScoringError("log does not belong to this mission description",
                           code="INCOMPATIBLE_INPUTS")
    target_id = log.meta.get("target_entity_id")
    target_track = log.meta.get("target_track_id")

    detected_times: list[float] = []
    violations: list[tuple[float, float | None]] = []
    open_violations: dict[str, float] = {}
    ticks = 0
    in_view_ticks = 0
    in_aoi_ticks = 0
    last_t = 0.0
    declared: str | None = None

    for evt in log.events:
        kind = evt.get("kind")
        if kind == "tick":
            ticks += 1
            last_t = float(evt["t"])
            if evt.get("target_in_view"):
                in_view_ticks += 1
            if evt.get("uav_in_aoi"):
                in_aoi_ticks += 1
        elif kind == "detection":
            if evt.get("true_entity_id") == target_id:
                detected_times.append(float(evt["t"]))
        elif kind == "perfect_report":
            if evt.get("entity_id") == target_id:
                detected_times.append(float(evt["t"]))
        elif kind == "violation_enter":
            open_violations[evt["koz_id"]] = float(evt["t"])
        elif kind == "violation_exit":
            start = open_violations.pop(evt["koz_id"], None)
            if start is not None:
                violations.append((start, float(evt["t"])))
        elif kind == "declare":
            declared = evt.get("track_id")

    for start in open_violations.values():  # still inside at mission end
        violations.append((start, last_t))

    duration = sum(end - start for start, end in violations)
    detected = bool(detected_times)
    return MetricsReport(
        target_detected=detected,
        correct_disambiguation=(declared is not None and declared == target_track),
        time_to_first_detection=min(detected_times) if detected else None,
        koz_violation_count=len(violations),
        koz_violation_duration=duration,
        pursuit_in_view_fraction=(in_view_ticks / ticks) if ticks else 0.0,
        aoi_dwell_fraction=(in_aoi_ticks / ticks) if ticks else 0.0,
        mission_failed=len(violations) > 0,
    )
