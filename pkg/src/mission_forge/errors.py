"""Exception types shared across the package.

Every error carries a stable ``code`` string so CLI output and protocol
error messages stay machine-readable.
"""

from __future__ import annotations


class MissionForgeError(Exception):
    """Base class; ``code`` identifies the failure kind."""

    default_code = "ERROR"

    def __init__(self, message: str, *, code: str | None = None):
        super().__init__(message)
        self.code = code or self.default_code

    def __str__(self) -> str:
        return f"[{self.code}] {super().__str__()}"


class GeometryError(MissionForgeError):
    default_code = "INVALID_GEOMETRY"


class DocumentError(MissionForgeError):
    """Parse or schema failure; ``path`` points at the offending field."""

    default_code = "PARSE_ERROR"

    def __init__(self, message: str, *, code: str | None = None, path: str = ""):
        super().__init__(message, code=code)
        self.path = path

    def __str__(self) -> str:
        loc = f" at {self.path}" if self.path else ""
        return f"[{self.code}]{loc} {Exception.__str__(self)}"


class RelationError(MissionForgeError):
    default_code = "UNKNOWN_OPERATOR"


class ConstraintError(MissionForgeError):
    default_code = "NO_INTERSECTION"


class PlanningError(MissionForgeError):
    default_code = "NO_PATH"


class SamplingError(MissionForgeError):
    default_code = "SAMPLING_EXHAUSTED"


class SimulationError(MissionForgeError):
    default_code = "SIMULATION_ERROR"


class ScoringError(MissionForgeError):
    default_code = "INCOMPATIBLE_INPUTS"


class ProtocolError(MissionForgeError):
    default_code = "BAD_MESSAGE"
