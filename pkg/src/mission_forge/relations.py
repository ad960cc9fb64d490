"""Symbolic scene relations: the operator vocabulary, evaluation against
geometric ground truth, relation extraction, and candidate disambiguation.

A relation is a [related entity] [operator] [target entity] tuple with
optional related-entity attributes. Directional operators are measured
center-to-center in plan view, counterclockwise from the target's heading:
RIGHT_OF sits at 270 degrees, LEFT_OF at 90, IN_FRONT_OF at 180, and
ORTHOGONAL_TO accepts both 90 and 270.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .errors import GeometryError, RelationError
from .geometry import (
    BoundingBox3,
    ExtrudedObstacle,
    Pose,
    bbox_world,
    circ_diff_deg,
    line_of_sight,
    polygons_overlap,
    relative_bearing,
)

EVENTUALLY_PREFIX = "EVENTUALLY_"

# Anchor bearings, degrees CCW from the target's heading.
DIRECTIONAL_ANCHORS: dict[str, tuple[float, ...]] = {
    "ORTHOGONAL_TO": (90.0, 270.0),
    "IN_FRONT_OF": (180.0,),
    "RIGHT_OF": (270.0,),
    "LEFT_OF": (90.0,),
}

NEGATIONS = {"NEXT_TO": "NOT_NEXT_TO", "ON_TOP_OF": "NOT_ON_TOP_OF"}

SPATIAL_OPERATORS: tuple[str, ...] = (
    "NEXT_TO",
    "NOT_NEXT_TO",
    "ON_TOP_OF",
    "NOT_ON_TOP_OF",
    "ORTHOGONAL_TO",
    "IN_FRONT_OF",
    "RIGHT_OF",
    "LEFT_OF",
)

MEMBERSHIP_OPERATORS: tuple[str, ...] = ("PART_OF",)

# Positive operators enumerated by extract_relations (negations and
# temporal wrappers are derived forms, not extracted).
EXTRACTABLE_OPERATORS: tuple[str, ...] = tuple(
    sorted(("NEXT_TO", "ON_TOP_OF", "ORTHOGONAL_TO", "IN_FRONT_OF", "RIGHT_OF", "LEFT_OF",
            "PART_OF"))
)

ALL_OPERATORS: frozenset[str] = frozenset(SPATIAL_OPERATORS) | frozenset(MEMBERSHIP_OPERATORS) | \
    frozenset(EVENTUALLY_PREFIX + op for op in SPATIAL_OPERATORS)


def is_eventually(operator: str) -> bool:
    return operator.startswith(EVENTUALLY_PREFIX)


def embedded_operator(operator: str) -> str:
    """Spatial operator wrapped by an EVENTUALLY_ form."""
    if not is_eventually(operator):
        raise RelationError(f"{operator} is not a temporal operator", code="INVALID_NESTING")
    inner = operator[len(EVENTUALLY_PREFIX):]
    if inner not in SPATIAL_OPERATORS:
        raise RelationError(f"EVENTUALLY_ must wrap a spatial operator, got {inner!r}",
                            code="INVALID_NESTING")
    return inner


@dataclass
class SymbolicRelation:
    """[related_class] [operator] [target_id] with related-entity attributes."""

    related_class: str
    operator: str
    target_id: str
    related_attributes: dict[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class RelationParams:
    """Tolerances the operator definitions leave open."""

    next_to_max_dist: float = 10.0
    angle_tol: float = 15.0
    on_top_z_tol: float = 0.25

    def __post_init__(self):
        if min(self.next_to_max_dist, self.angle_tol, self.on_top_z_tol) <= 0.0:
            raise RelationError("relation parameters must be positive", code="INVALID_PARAMS")


@dataclass(frozen=True)
class SceneEntity:
    pose: Pose
    bbox: BoundingBox3
    entity_class: str
    attributes: tuple[tuple[str, object], ...] = ()

    def attr_map(self) -> dict[str, object]:
        return dict(self.attributes)


@dataclass
class SceneSnapshot:
    """Geometric ground truth at one instant."""

    time: float
    entities: dict[str, SceneEntity]
    obstacles: tuple[ExtrudedObstacle, ...] = ()


@dataclass
class SceneTimeline:
    snapshots: tuple[SceneSnapshot, ...]

    def __post_init__(self):
        snaps = tuple(self.snapshots)
        if not snaps:
            raise RelationError("timeline needs at least one snapshot", code="EMPTY_TIMELINE")
        for a, b in zip(snaps, snaps[1:]):
            if not b.time > a.time:
                raise RelationError("timeline timestamps must strictly increase",
                                    code="NON_MONOTONIC_TIMELINE")
        self.snapshots = snaps


def make_entity(pose: Pose, bbox: BoundingBox3, entity_class: str,
                attributes: dict[str, object] | None = None,
                body_frame: bool = True) -> SceneEntity:
    """Build a scene entity; by default ``bbox`` is body-frame and gets
    attached to the pose (pass body_frame=False for a world-frame box)."""
    if body_frame:
        bbox = bbox_world(bbox, pose)
    return SceneEntity(pose=pose, bbox=bbox, entity_class=entity_class,
                       attributes=tuple(sorted((attributes or {}).items())))


def _get(scene: SceneSnapshot, entity_id: str) -> SceneEntity:
    try:
        return scene.entities[entity_id]
    except KeyError:
        raise RelationError(f"entity {entity_id!r} not in scene", code="MISSING_ENTITY") from None


def _is_member(target: SceneEntity, related: SceneEntity, related_id: str) -> bool:
    if related.entity_class != "group" and not related.attr_map().get("abstract"):
        return False
    member_of = target.attr_map().get("member_of")
    if isinstance(member_of, (list, tuple)):
        return related_id in member_of
    return member_of == related_id


def eval_relation(rel: SymbolicRelation, related_id: str, scene: SceneSnapshot,
                  params: RelationParams | None = None) -> bool:
    """Evaluate one relation operator against a scene snapshot.

    The caller is responsible for the related entity actually matching
    rel.related_class / rel.related_attributes; this function only applies
    the geometric operator semantics.
    """
    params = params or RelationParams()
    op = rel.operator
    if is_eventually(op):
        raise RelationError("temporal operator requires a timeline (use eval_eventually)",
                            code="TEMPORAL_OPERATOR")
    if op not in ALL_OPERATORS:
        raise RelationError(f"unknown operator {op!r}")
    target = _get(scene, rel.target_id)
    related = _get(scene, related_id)

    if op in ("NEXT_TO", "NOT_NEXT_TO"):
        tc, rc = target.bbox.center, related.bbox.center
        close = math.hypot(tc.x - rc.x, tc.y - rc.y) < params.next_to_max_dist
        result = close and line_of_sight(tc, rc, scene.obstacles)
        return result if op == "NEXT_TO" else not result

    if op in ("ON_TOP_OF", "NOT_ON_TOP_OF"):
        z_match = abs(target.bbox.min_z - related.bbox.max_z) <= params.on_top_z_tol
        result = z_match and polygons_overlap(target.bbox.footprint(), related.bbox.footprint())
        return result if op == "ON_TOP_OF" else not result

    if op in DIRECTIONAL_ANCHORS:
        try:
            bearing = relative_bearing(target.pose, related.bbox.center.xy)
        except GeometryError:
            return False  # coincident plan centers carry no direction
        diff = min(circ_diff_deg(bearing, a) for a in DIRECTIONAL_ANCHORS[op])
        return diff <= params.angle_tol + 1e-9  # guard the inclusive boundary

    if op == "PART_OF":
        return _is_member(target, related, related_id)

    raise RelationError(f"unknown operator {op!r}")


def eval_eventually(rel: SymbolicRelation, related_id: str, timeline: SceneTimeline,
                    params: RelationParams | None = None) -> bool:
    """True iff the wrapped spatial relation holds at any snapshot."""
    inner = replace(rel, operator=embedded_operator(rel.operator))
    return any(eval_relation(inner, related_id, snap, params) for snap in timeline.snapshots)


def extract_relations(target_id: str, scene: SceneSnapshot,
                      params: RelationParams | None = None) -> list[SymbolicRelation]:
    """Every positive relation the target holds to other scene entities.

    Output is ordered by (related entity id, operator name) and each
    relation carries a copy of the related entity's attributes.
    """
    _get(scene, target_id)
    out: list[SymbolicRelation] = []
    for related_id in sorted(scene.entities):
        if related_id == target_id:
            continue
        related = scene.entities[related_id]
        for op in EXTRACTABLE_OPERATORS:
            rel = SymbolicRelation(related_class=related.entity_class, operator=op,
                                   target_id=target_id,
                                   related_attributes=related.attr_map())
            if eval_relation(rel, related_id, scene, params):
                out.append(rel)
    return out


def _attrs_match(entity: SceneEntity, wanted: dict[str, object]) -> bool:
    have = entity.attr_map()
    return all(have.get(k) == v for k, v in wanted.items())


@dataclass
class DisambiguationResult:
    ranking: list[tuple[str, float]]
    vacuous: bool


def disambiguate(candidates: list[tuple[str, dict[str, object]]],
                 relations: list[SymbolicRelation],
                 scene: SceneSnapshot | SceneTimeline,
                 params: RelationParams | None = None) -> DisambiguationResult:
    """Rank candidate entities by the fraction of relations they satisfy.

    Related entities are resolved in the scene by class plus attribute
    match; a relation counts as satisfied if any match makes it true.
    With no relations every candidate scores 1.0 and the result is
    flagged vacuous. Ties break by entity id.
    """
    if not candidates:
        raise RelationError("candidate list must be non-empty", code="EMPTY_CANDIDATES")
    timeline = scene if isinstance(scene, SceneTimeline) else SceneTimeline((scene,))
    snap = timeline.snapshots[0]
    if not relations:
        ranking = sorted((cid, 1.0) for cid, _ in candidates)
        return DisambiguationResult(ranking=ranking, vacuous=True)

    def satisfied(rel: SymbolicRelation, candidate_id: str) -> bool:
        probe = replace(rel, target_id=candidate_id)
        use_timeline = is_eventually(rel.operator)
        for rid, ent in snap.entities.items():
            if rid == candidate_id:
                continue
            if ent.entity_class != rel.related_class:
                continue
            if not _attrs_match(ent, rel.related_attributes):
                continue
            if use_timeline:
                if eval_eventually(probe, rid, timeline, params):
                    return True
            elif eval_relation(probe, rid, snap, params):
                return True
        return False

    scored = []
    for cid, _attrs in candidates:
        hits = sum(1 for rel in relations if satisfied(rel, cid))
        scored.append((cid, hits / len(relations)))
    scored.sort(key=lambda item: (-item[1], item[0]))
    return DisambiguationResult(ranking=scored, vacuous=False)
