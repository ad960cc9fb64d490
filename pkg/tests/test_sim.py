"""World stepping, camera footprint, detection, perfect perception, missions."""

from __future__ import annotations

import math
from dataclasses import replace

import pytest

from mission_forge.camera import CameraModel, camera_footprint
from mission_forge.errors import SimulationError
from mission_forge.geometry import (
    BoundingBox3,
    ExtrudedObstacle,
    Point2,
    Point3,
    Pose,
    TimedPath,
    point_in_polygon,
    rectangle,
)
from mission_forge.planning import UavKinematics, timed_path_from_polyline
from mission_forge.scenario import (
    AreaOfInterest,
    EntitySpec,
    EnvironmentConditions,
    KeepOutZone,
    MissionDescription,
    Objective,
    SimulationConfig,
    TargetSpec,
)
from mission_forge.sim import (
    PlaybackCommand,
    RunOptions,
    VelocityCommand,
    WaypointCommand,
    detect,
    init_world,
    perfect_perception_report,
    run_mission,
    scene_at,
    step,
    track_id_for,
)

NADIR = CameraModel(60.0, 60.0, 400.0, pitch=-90.0)


def car(eid="car_000", pos=(50.0, 50.0), yaw=0.0, is_target=True, attrs=None,
        trajectory=None) -> EntitySpec:
    return EntitySpec(id=eid, entity_class="car",
                      attributes=attrs or {"color": "red", "model": "sedan"},
                      initial_pose=Pose(Point3(pos[0], pos[1], 0.0), yaw) if trajectory is None
                      else trajectory.samples[0][1],
                      bbox=BoundingBox3(Point3(0, 0, 0.8), (2.4, 1.0, 0.8), 0.0),
                      trajectory=trajectory, is_target=is_target)


def basic_config(**overrides) -> SimulationConfig:
    base = dict(entities=[car()], obstacles=[], environment=EnvironmentConditions(),
                uav_start=Pose(Point3(0.0, 0.0, 80.0), 0.0), cameras=[NADIR],
                seed=99, tick_dt=0.1)
    base.update(overrides)
    return SimulationConfig(**base)


def basic_mission(**overrides) -> MissionDescription:
    base = dict(objective=Objective.AREA_SEARCH,
                target_spec=TargetSpec("car", {"color": "red", "model": "sedan"}),
                aois=[AreaOfInterest("aoi_000", rectangle(0, 0, 200, 200))],
                mission_duration=30.0)
    base.update(overrides)
    return MissionDescription(**base)


class TestInitWorld:
    def test_initial_poses(self):
        cfg = basic_config()
        world = init_world(cfg)
        assert world.time == 0.0 and world.tick == 0
        assert world.uav == cfg.uav_start
        assert world.entity_poses["car_000"] == cfg.entities[0].initial_pose

    def test_invalid_config_rejected(self):
        traj = TimedPath([(0.0, Pose(Point3(60, 60, 0), 0.0)),
                          (5.0, Pose(Point3(70, 60, 0), 0.0))])
        cfg = basic_config(entities=[car(trajectory=traj)])
        cfg.entities[0].initial_pose = Pose(Point3(0, 0, 0), 0.0)
        with pytest.raises(SimulationError):
            init_world(cfg)

    def test_identical_initial_state(self):
        cfg = basic_config()
        assert init_world(cfg) == init_world(cfg)


class TestStep:
    def test_hover_no_wind_unchanged(self):
        cfg = basic_config()
        world = init_world(cfg)
        world2, events, _ = step(world, None, cfg)
        assert world2.uav.position == world.uav.position
        assert world2.time == pytest.approx(0.1)
        assert events == []

    def test_wind_drift_east(self):
        cfg = basic_config(tick_dt=1.0,
                           environment=EnvironmentConditions(wind_speed_norm=1.0,
                                                             wind_direction=0.0))
        world = init_world(cfg)
        world2, _, _ = step(world, None, cfg)
        assert world2.uav.position.x == pytest.approx(3.0)
        assert world2.uav.position.y == pytest.approx(0.0)

    def test_playback_ignores_wind(self):
        path = timed_path_from_polyline([Point2(0, 0), Point2(100, 0)], speed=10.0,
                                        z_start=80.0)
        cfg = basic_config(tick_dt=1.0,
                           environment=EnvironmentConditions(wind_speed_norm=1.0,
                                                             wind_direction=90.0))
        world = init_world(cfg)
        world2, _, _ = step(world, PlaybackCommand(path), cfg)
        assert world2.uav.position == pytest.approx((10.0, 0.0, 80.0))

    def test_entity_interpolation_midpoint(self):
        traj = TimedPath([(0.0, Pose(Point3(0, 0, 0), 0.0)),
                          (1.0, Pose(Point3(10, 20, 0), 0.0))])
        cfg = basic_config(entities=[car(trajectory=traj)], tick_dt=0.5)
        world = init_world(cfg)
        world2, _, _ = step(world, None, cfg)
        assert world2.entity_poses["car_000"].position == pytest.approx((5.0, 10.0, 0.0))

    def test_velocity_command_clamped(self):
        kin = UavKinematics(max_speed=10.0)
        cfg = basic_config(tick_dt=1.0)
        world = init_world(cfg)
        world2, _, _ = step(world, VelocityCommand((30.0, 0.0, 0.0), kin), cfg)
        assert world2.uav.position.x == pytest.approx(10.0)

    def test_waypoint_command_respects_speed(self):
        kin = UavKinematics(max_speed=10.0, max_yaw_rate=360.0)
        cfg = basic_config(tick_dt=1.0)
        world = init_world(cfg)
        world2, _, follow = step(world, WaypointCommand((Point3(100, 0, 80),), kin), cfg)
        assert world2.uav.position.x == pytest.approx(10.0)
        assert follow is not None

    def test_koz_enter_exit_events(self):
        cfg = basic_config(tick_dt=1.0)
        world = init_world(cfg)
        world = replace(world, kozs=(KeepOutZone("k0", rectangle(5, -10, 25, 10)),))
        kin = UavKinematics(max_speed=10.0, max_yaw_rate=360.0)
        events_seen = []
        cmd = WaypointCommand((Point3(100, 0, 80),), kin)
        for _ in range(5):
            world, events, follow = step(world, cmd, cfg)
            events_seen.extend(events)
            cmd = WaypointCommand(follow.remaining or (Point3(100, 0, 80),), kin)
        kinds = [(e["kind"], e["t"]) for e in events_seen]
        assert ("violation_enter", 1.0) in kinds
        assert ("violation_exit", 3.0) in kinds

    def test_displacement_bounded(self):
        kin = UavKinematics(max_speed=10.0, max_yaw_rate=360.0)
        cfg = basic_config(tick_dt=0.1,
                           environment=EnvironmentConditions(wind_speed_norm=1.0))
        world = init_world(cfg)
        for _ in range(20):
            before = world.uav.position
            world, _, _ = step(world, WaypointCommand((Point3(500, 500, 80),), kin), cfg)
            moved = math.dist(before, world.uav.position)
            assert moved <= kin.max_speed * 0.1 + 3.0 * 0.1 + 1e-9


class TestCameraFootprint:
    def test_nadir_square(self):
        fp = camera_footprint(Pose(Point3(0, 0, 100), 0.0), CameraModel(60, 60, 500))
        half = 100.0 * math.tan(math.radians(30.0))
        x0, y0, x1, y1 = fp.bounds
        assert x1 == pytest.approx(half, abs=1e-9)
        assert y1 == pytest.approx(half, abs=1e-9)
        assert x0 == pytest.approx(-half) and y0 == pytest.approx(-half)

    def test_area_vanishes_at_low_altitude(self):
        a1 = camera_footprint(Pose(Point3(0, 0, 1.0), 0.0), CameraModel(60, 60, 500)).area
        a2 = camera_footprint(Pose(Point3(0, 0, 0.05), 0.0), CameraModel(60, 60, 500)).area
        assert a2 < a1 < 15.0
        assert a2 < 0.01

    def test_horizon_pitch_empty(self):
        with pytest.raises(SimulationError) as exc:
            camera_footprint(Pose(Point3(0, 0, 100), 0.0),
                             CameraModel(60, 60, 500, pitch=0.0))
        assert exc.value.code == "EMPTY_FOOTPRINT"

    def test_range_clamp(self):
        fp = camera_footprint(Pose(Point3(0, 0, 100), 0.0),
                              CameraModel(90, 90, 120, pitch=-60.0))
        for v in fp.vertices:
            assert math.hypot(v.x, v.y) <= 120.0 + 1e-6

    def test_forward_pitch_offsets_footprint(self):
        fp = camera_footprint(Pose(Point3(0, 0, 100), 0.0),
                              CameraModel(40, 30, 1000, pitch=-45.0))
        cx = fp.centroid()
        assert cx.x > 50.0  # looking ahead along +x
        assert abs(cx.y) < 1e-6


class TestDetect:
    def test_clear_environment_true_attributes(self):
        cfg = basic_config()
        world = init_world(cfg)
        world = replace(world, uav=Pose(Point3(50, 50, 80), 0.0))
        dets = detect(world, NADIR, cfg.environment)
        assert len(dets) == 1
        d = dets[0]
        assert d.true_entity_id == "car_000"
        assert d.observed_attributes == {"color": "red", "model": "sedan"}
        assert d.confidence == 1.0
        assert d.track_id == track_id_for(cfg.seed, "car_000")

    def test_fog_shrinks_range(self):
        env = EnvironmentConditions(fog=1.0)
        cam = CameraModel(120.0, 120.0, 200.0, pitch=-90.0)
        cfg = basic_config(environment=env, cameras=[cam])
        world = init_world(cfg)
        # target at plan distance ~94m < footprint, slant ~ sqrt(94^2+80^2) = 123
        # effective range = 0.3 * 200 = 60 -> no detection
        world = replace(world, uav=Pose(Point3(0, 0, 80), 0.0),
                        entity_poses={"car_000": Pose(Point3(94, 0, 0), 0.0)})
        assert detect(world, cam, env) == []
        clear = EnvironmentConditions()
        assert len(detect(world, cam, clear)) == 1

    def test_occlusion_blocks_detection(self):
        tall = ExtrudedObstacle(rectangle(20, -10, 30, 10), 90.0)
        cfg = basic_config(obstacles=[tall])
        world = init_world(cfg)
        world = replace(world, uav=Pose(Point3(0, 0, 80), 0.0),
                        entity_poses={"car_000": Pose(Point3(45, 0, 0), 0.0)})
        assert detect(world, NADIR, cfg.environment) == []

    def test_attribute_corruption_statistics(self):
        env = EnvironmentConditions(camera_noise=1.0, snow=1.0)  # p_corrupt = 0.8
        cfg = basic_config(environment=env,
                           cameras=[CameraModel(120, 120, 4000, pitch=-90.0)])
        corrupted = 0
        total = 0
        world = init_world(cfg)
        world = replace(world, uav=Pose(Point3(50, 50, 80), 0.0))
        for tick in range(300):
            w = replace(world, tick=tick)
            (d,) = detect(w, cfg.cameras[0], env)
            assert d.confidence == pytest.approx(0.2)
            for name, true_value in cfg.entities[0].attributes.items():
                total += 1
                if d.observed_attributes[name] != true_value:
                    corrupted += 1
        assert corrupted / total == pytest.approx(0.8, abs=0.06)

    def test_detection_deterministic_per_tick(self):
        env = EnvironmentConditions(camera_noise=0.8)
        cfg = basic_config(environment=env)
        world = init_world(cfg)
        world = replace(world, uav=Pose(Point3(50, 50, 80), 0.0), tick=17)
        a = detect(world, NADIR, env)
        b = detect(world, NADIR, env)
        assert a == b


class TestPerfectPerception:
    def test_report_on_overflight(self):
        cfg = basic_config()
        world = init_world(cfg)
        world = replace(world, uav=Pose(Point3(50, 50, 80), 0.0))
        rep = perfect_perception_report(world, cfg.cameras)
        assert rep is not None
        assert rep.entity_id == "car_000"
        assert rep.pose == cfg.entities[0].initial_pose

    def test_none_outside_footprint(self):
        cfg = basic_config()
        world = init_world(cfg)  # UAV at origin, car at (50,50): outside 60deg nadir cone
        assert perfect_perception_report(world, cfg.cameras) is None

    def test_never_fires_when_geometrically_excluded(self):
        """Agreement with detect's frustum + LOS predicate across a sweep."""
        from mission_forge.geometry import line_of_sight
        tall = ExtrudedObstacle(rectangle(45, 30, 55, 70), 60.0)
        cfg = basic_config(obstacles=[tall])
        world = init_world(cfg)
        spec = cfg.entities[0]
        for x in range(0, 120, 7):
            for z in (30, 55, 90):
                w = replace(world, uav=Pose(Point3(float(x), 50.0, float(z)), 0.0))
                rep = perfect_perception_report(w, cfg.cameras)
                bbox = spec.bbox_at(w.entity_poses[spec.id])
                try:
                    fp = camera_footprint(w.uav, cfg.cameras[0])
                    in_frame = point_in_polygon(bbox.center.xy, fp)
                except SimulationError:
                    in_frame = False
                los = line_of_sight(w.uav.position,
                                    Point3(bbox.center.x, bbox.center.y, bbox.max_z),
                                    tuple(cfg.obstacles))
                assert (rep is not None) == (in_frame and los)

    def test_occluded_toggle(self):
        tall = ExtrudedObstacle(rectangle(49, 40, 51, 60), 50.0)
        cfg = basic_config(obstacles=[tall])
        world = init_world(cfg)
        world = replace(world, uav=Pose(Point3(30, 50, 45), 0.0))
        in_frame = point_in_polygon(Point2(50, 50), camera_footprint(world.uav, NADIR))
        assert in_frame
        assert perfect_perception_report(world, cfg.cameras, require_los=True) is None
        assert perfect_perception_report(world, cfg.cameras, require_los=False) is not None


class TestRunMission:
    def overflight_path(self) -> TimedPath:
        return timed_path_from_polyline([Point2(0, 0), Point2(50, 50), Point2(120, 120)],
                                        speed=10.0, z_start=80.0)

    def test_scripted_overflight_detects_target(self):
        md = basic_mission()
        cfg = basic_config()
        log = run_mission(md, cfg, self.overflight_path())
        assert any(e["kind"] == "detection" and e["true_entity_id"] == "car_000"
                   for e in log.events)
        assert log.status == "COMPLETED"

    def test_determinism(self):
        md = basic_mission()
        cfg = basic_config()
        h1 = run_mission(md, cfg, self.overflight_path()).log_hash()
        h2 = run_mission(md, cfg, self.overflight_path()).log_hash()
        assert h1 == h2

    def test_koz_crossing_logged_and_fails_mission(self):
        md = basic_mission(kozs=[KeepOutZone("k0", rectangle(20, 20, 40, 40))])
        cfg = basic_config()
        log = run_mission(md, cfg, self.overflight_path())
        assert any(e["kind"] == "violation_enter" for e in log.events)
        assert log.mission_failed is True

    def test_maneuver_thread_emits_perfect_reports(self):
        md = basic_mission()
        cfg = basic_config()
        log = run_mission(md, cfg, self.overflight_path(),
                          RunOptions(thread="maneuver"))
        assert any(e["kind"] == "perfect_report" for e in log.events)
        assert not any(e["kind"] == "detection" for e in log.events)

    def test_detection_soundness_replay(self):
        """Every logged detection satisfies the geometric predicate at its tick."""
        md = basic_mission()
        cfg = basic_config()
        log = run_mission(md, cfg, self.overflight_path())
        uav_at = {e["tick"]: e["uav"] for e in log.events if e["kind"] == "tick"}
        for e in log.events:
            if e["kind"] != "detection":
                continue
            uav = uav_at[e["tick"]]
            pose = Pose(Point3(uav["position"]["x"], uav["position"]["y"],
                               uav["position"]["z"]), uav["yaw"])
            spec = next(s for s in cfg.entities if s.id == e["true_entity_id"])
            t = e["t"]
            center = spec.bbox_at(spec.pose_at(t)).center
            fp = camera_footprint(pose, cfg.cameras[e["camera"]])
            assert point_in_polygon(center.xy, fp)

    def test_tick_count_matches_duration(self):
        md = basic_mission(mission_duration=5.0)
        cfg = basic_config()
        log = run_mission(md, cfg, None)
        ticks = [e for e in log.events if e["kind"] == "tick"]
        assert len(ticks) == 50

    def test_scene_at_interpolates(self):
        traj = TimedPath([(0.0, Pose(Point3(0, 0, 0), 0.0)),
                          (10.0, Pose(Point3(100, 0, 0), 0.0))])
        cfg = basic_config(entities=[car(trajectory=traj)])
        scene = scene_at(cfg, 5.0)
        assert scene.entities["car_000"].pose.position.x == pytest.approx(50.0)
