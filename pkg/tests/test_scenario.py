"""Document model: validation findings, canonical serialization, route band."""

from __future__ import annotations

import copy
import json
import math

import pytest
import shapely

from mission_forge.errors import DocumentError, GeometryError
from mission_forge.geometry import Point2, Point3, Pose, BoundingBox3, TimedPath, rectangle
from mission_forge.camera import CameraModel
from mission_forge.relations import SymbolicRelation
from mission_forge.scenario import (
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
from mission_forge.serde import (
    config_to_dict,
    deserialize_config,
    deserialize_mission,
    mission_to_dict,
    serialize_config,
    serialize_mission,
)


def make_mission(**overrides) -> MissionDescription:
    aoi_poly = rectangle(0, 0, 100, 100)
    base = dict(
        objective=Objective.AREA_SEARCH,
        target_spec=TargetSpec("car", {"color": "red", "model": "sedan"}),
        aois=[AreaOfInterest("aoi_000", aoi_poly)],
        kozs=[KeepOutZone("koz_000", rectangle(40, 40, 60, 60), TimeWindow(0.0, 100.0))],
        priors=AreaPriorMap([
            PriorCell(rectangle(0, 0, 50, 50), 0.4),
            PriorCell(rectangle(50, 0, 100, 50), 0.3),
            PriorCell(rectangle(0, 50, 50, 100), 0.2),
            PriorCell(rectangle(50, 50, 100, 100), 0.1),
        ]),
        relations=[SymbolicRelation("garage", "RIGHT_OF", "car_000", {"color": "white"})],
        mission_duration=300.0,
    )
    base.update(overrides)
    return MissionDescription(**base)


def make_config(**overrides) -> SimulationConfig:
    car = EntitySpec(
        id="car_000", entity_class="car", attributes={"color": "red", "model": "sedan"},
        initial_pose=Pose(Point3(20, 20, 0), 0.0),
        bbox=BoundingBox3(Point3(0, 0, 0.8), (2.4, 1.0, 0.8), 0.0), is_target=True)
    base = dict(
        entities=[car],
        obstacles=[],
        environment=EnvironmentConditions(),
        uav_start=Pose(Point3(0, 0, 60), 0.0),
        cameras=[CameraModel(60.0, 45.0, 250.0)],
        seed=7,
    )
    base.update(overrides)
    return SimulationConfig(**base)


class TestValidateMission:
    def test_well_formed_is_empty(self):
        assert validate_mission(make_mission()).ok

    def test_priors_sum_misses_one(self):
        md = make_mission()
        md.priors.cells[0].prob = 0.3  # sum 0.9
        assert "PRIOR_NOT_NORMALIZED" in validate_mission(md).codes()

    def test_window_inverted(self):
        md = make_mission()
        md.kozs[0].window = TimeWindow(50.0, 10.0)
        assert "WINDOW_INVERTED" in validate_mission(md).codes()

    def test_area_search_needs_aoi(self):
        md = make_mission(aois=[], priors=None)
        assert "AREA_SEARCH_WITHOUT_AOI" in validate_mission(md).codes()

    def test_route_search_needs_route(self):
        md = make_mission(objective=Objective.ROUTE_SEARCH, priors=None)
        assert "ROUTE_SEARCH_WITHOUT_ROUTE" in validate_mission(md).codes()

    def test_mutation_fuzzer_single_invariant_breaks(self):
        """Each mutation violates exactly one invariant and must be reported."""
        mutations = [
            ("PRIOR_NOT_NORMALIZED", lambda m: setattr(m.priors.cells[0], "prob", 0.39)),
            ("PRIOR_PROB_RANGE", lambda m: setattr(m.priors.cells[0], "prob", 1.4)),
            ("WINDOW_INVERTED", lambda m: setattr(m.kozs[0], "window", TimeWindow(9, 1))),
            ("WINDOW_INVERTED", lambda m: setattr(m.kozs[0], "window", TimeWindow(-5, 10))),
            ("DUPLICATE_ID", lambda m: setattr(m.aois[0], "id", "dup") or m.aois.append(
                AreaOfInterest("dup", rectangle(0, 0, 100, 100)))),
            ("MISSION_DURATION_INVALID", lambda m: setattr(m, "mission_duration", -1.0)),
            ("RELATION_BAD_OPERATOR", lambda m: setattr(m.relations[0], "operator", "NEAR")),
            ("RELATION_TARGET_INCONSISTENT", lambda m: m.relations.append(
                SymbolicRelation("shed", "LEFT_OF", "car_999"))),
            ("ROUTE_DEGENERATE", lambda m: setattr(m, "route", RouteOfInterest(
                [Point2(0, 0), Point2(0, 0)], 10.0))),
            ("PRIOR_CELLS_OVERLAP", lambda m: setattr(
                m.priors.cells[1], "polygon", rectangle(10, 10, 60, 40))),
            ("PRIOR_CELL_OUTSIDE_AOI", lambda m: setattr(
                m.priors.cells[1], "polygon", rectangle(50, 0, 120, 50))),
        ]
        for code, mutate in mutations:
            md = make_mission()
            mutate(md)
            codes = validate_mission(md).codes()
            assert code in codes, f"mutation for {code} yielded {codes}"


class TestValidateConfig:
    def test_well_formed(self):
        assert validate_config(make_config()).ok

    def test_exactly_one_target(self):
        cfg = make_config()
        cfg.entities[0].is_target = False
        assert "NO_TARGET" in validate_config(cfg).codes()
        cfg2 = make_config()
        clone = copy.deepcopy(cfg2.entities[0])
        clone.id = "car_001"
        cfg2.entities.append(clone)
        assert "MULTIPLE_TARGETS" in validate_config(cfg2).codes()

    def test_trajectory_must_start_at_initial_pose(self):
        cfg = make_config()
        cfg.entities[0].trajectory = TimedPath([
            (0.0, Pose(Point3(21, 20, 0), 0.0)), (5.0, Pose(Point3(30, 20, 0), 0.0))])
        assert "TRAJECTORY_START_MISMATCH" in validate_config(cfg).codes()

    def test_env_ranges(self):
        cfg = make_config(environment=EnvironmentConditions(snow=1.4))
        assert "ENV_OUT_OF_RANGE" in validate_config(cfg).codes()

    def test_seed_and_tick(self):
        assert "SEED_RANGE" in validate_config(make_config(seed=-1)).codes()
        assert "TICK_DT_INVALID" in validate_config(make_config(tick_dt=0.0)).codes()

    def test_camera_ranges(self):
        cfg = make_config(cameras=[CameraModel(0.0, 45.0, 100.0)])
        assert "CAMERA_INVALID" in validate_config(cfg).codes()

    def test_pair_checks_target_spec(self):
        md = make_mission(target_spec=TargetSpec("car", {"color": "blue"}))
        assert "TARGET_SPEC_MISMATCH" in validate_pair(md, make_config()).codes()


class TestSerde:
    def test_mission_round_trip(self):
        md = make_mission()
        assert deserialize_mission(serialize_mission(md)) == md

    def test_config_round_trip(self):
        cfg = make_config()
        cfg.entities[0].trajectory = TimedPath([
            (0.0, Pose(Point3(20, 20, 0), 0.0)), (5.0, Pose(Point3(60, 20, 0), 0.0))])
        assert deserialize_config(serialize_config(cfg)) == cfg

    def test_byte_stability(self):
        md = make_mission()
        assert serialize_mission(md) == serialize_mission(md)
        cfg = make_config()
        assert serialize_config(cfg) == serialize_config(cfg)

    def test_missing_objective_names_field(self):
        doc = mission_to_dict(make_mission())
        del doc["objective"]
        with pytest.raises(DocumentError) as exc:
            deserialize_mission(json.dumps(doc))
        assert "objective" in exc.value.path

    def test_duplicate_entity_id(self):
        doc = config_to_dict(make_config())
        doc["entities"].append(copy.deepcopy(doc["entities"][0]))
        with pytest.raises(DocumentError) as exc:
            deserialize_config(json.dumps(doc))
        assert exc.value.code == "DUPLICATE_ID"

    def test_unknown_field_rejected(self):
        doc = mission_to_dict(make_mission())
        doc["surprise"] = 1
        with pytest.raises(DocumentError) as exc:
            deserialize_mission(json.dumps(doc))
        assert exc.value.code == "UNKNOWN_FIELD"

    def test_nested_unknown_field_path(self):
        doc = mission_to_dict(make_mission())
        doc["aois"][0]["polygon"]["oops"] = True
        with pytest.raises(DocumentError) as exc:
            deserialize_mission(json.dumps(doc))
        assert "aois[0].polygon" in exc.value.path

    def test_bad_schema_version(self):
        doc = mission_to_dict(make_mission())
        doc["schema_version"] = "2"
        with pytest.raises(DocumentError) as exc:
            deserialize_mission(json.dumps(doc))
        assert exc.value.code == "SCHEMA_VERSION"

    def test_serialize_rejects_invalid_document(self):
        md = make_mission()
        md.priors.cells[0].prob = 0.39
        with pytest.raises(DocumentError) as exc:
            serialize_mission(md)
        assert exc.value.code == "DOCUMENT_INVALID"

    def test_mission_duration_defaults_when_absent(self):
        doc = mission_to_dict(make_mission())
        del doc["mission_duration"]
        md = deserialize_mission(json.dumps(doc))
        assert md.mission_duration == 600.0

    def test_invalid_polygon_parse_error(self):
        doc = mission_to_dict(make_mission())
        doc["aois"][0]["polygon"]["vertices"] = doc["aois"][0]["polygon"]["vertices"][::-1]
        with pytest.raises(DocumentError) as exc:
            deserialize_mission(json.dumps(doc))
        assert exc.value.code == "INVALID_POLYGON"


class TestRouteBand:
    def test_single_segment_area(self, rng):
        """Monte Carlo membership oracle: area of a straight band ~ rect + circle."""
        route = RouteOfInterest([Point2(0, 0), Point2(100, 0)], band_width=30.0)
        band = route_band(route)
        expected = 100.0 * 30.0 + math.pi * 15.0 ** 2
        assert band.area == pytest.approx(expected, rel=0.02)
        # cross-check with point sampling over the bounding region
        n = 20000
        xs = rng.uniform(-20, 120, n)
        ys = rng.uniform(-20, 20, n)
        hits = int(shapely.intersects_xy(band.to_shapely(), xs, ys).sum())
        mc_area = hits / n * (140.0 * 40.0)
        assert mc_area == pytest.approx(expected, rel=0.05)

    def test_zero_width_limit(self):
        areas = []
        for w in (1.0, 0.1, 0.01):
            band = route_band(RouteOfInterest([Point2(0, 0), Point2(100, 0)], w))
            areas.append(band.area)
        assert areas[0] > areas[1] > areas[2]
        assert areas[2] < 1.5  # ~ 100 * 0.01

    def test_l_shape_contains_vertices(self):
        pts = [Point2(0, 0), Point2(50, 0), Point2(50, 50)]
        band = route_band(RouteOfInterest(pts, 12.0))
        from mission_forge.geometry import point_in_polygon
        for p in pts:
            assert point_in_polygon(p, band)

    def test_membership_matches_polyline_distance(self, rng):
        """Inside iff distance <= width/2, up to the arc-polygonization bound."""
        pts = [Point2(0, 0), Point2(40, 10), Point2(60, -20), Point2(90, 5)]
        width = 24.0
        quad_segs = 32
        band = route_band(RouteOfInterest(pts, width), quad_segs=quad_segs)
        line = shapely.LineString([(p.x, p.y) for p in pts])
        shp = band.to_shapely()
        r = width / 2.0
        sagitta = r * (1.0 - math.cos(math.pi / (4.0 * quad_segs)))
        for _ in range(4000):
            p = (float(rng.uniform(-30, 120)), float(rng.uniform(-50, 40)))
            d = line.distance(shapely.Point(p))
            inside = bool(shapely.intersects_xy(shp, p[0], p[1]))
            if d <= r - sagitta:
                assert inside, (p, d)
            elif d >= r + 1e-6:
                assert not inside, (p, d)

    def test_degenerate_polyline_rejected(self):
        with pytest.raises(GeometryError):
            route_band(RouteOfInterest([Point2(0, 0)], 10.0))
        with pytest.raises(GeometryError):
            route_band(RouteOfInterest([Point2(0, 0), Point2(0, 0)], 10.0))
