"""mission-forge: deterministic scenario generation and mission simulation
for UAV urban-search autonomy."""

from .camera import CameraModel, camera_footprint
from .constraints import (
    Violation,
    aoi_active,
    inside_active_aoi,
    koz_violations,
    polygon_occupancy_intervals,
    prior_lookup,
    street_denial_koz,
)
from .errors import (
    ConstraintError,
    DocumentError,
    GeometryError,
    MissionForgeError,
    PlanningError,
    ProtocolError,
    RelationError,
    SamplingError,
    ScoringError,
    SimulationError,
)
from .geometry import (
    BoundingBox3,
    ExtrudedObstacle,
    Point2,
    Point3,
    Polygon,
    Pose,
    TimedPath,
    line_of_sight,
    point_in_polygon,
    rectangle,
    relative_bearing,
    segment_polygon_overlap,
)
from .planning import (
    FollowStep,
    LookPlan,
    RrtConfig,
    UavKinematics,
    follow_waypoints,
    plan_area_search,
    plan_entity_route,
    plan_look_guarantee_path,
    rrt_plan,
)
from .relations import (
    RelationParams,
    SceneSnapshot,
    SceneTimeline,
    SymbolicRelation,
    disambiguate,
    eval_eventually,
    eval_relation,
    extract_relations,
)
from .scenario import (
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
    TimeWindow,
    route_band,
    validate_config,
    validate_mission,
    validate_pair,
)
from .scoring import MetricsReport, score_mission
from .sim import (
    Detection,
    GroundTruthReport,
    MissionEngine,
    MissionLog,
    PlaybackCommand,
    RunOptions,
    VelocityCommand,
    WaypointCommand,
    WorldState,
    detect,
    init_world,
    perfect_perception_report,
    run_mission,
    scene_at,
    step,
)

__version__ = "0.1.0"
