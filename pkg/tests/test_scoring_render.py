"""Metrics reduction from logs, and SVG rendering."""

from __future__ import annotations

import pytest

from mission_forge.canonical import content_hash
from mission_forge.errors import ScoringError
from mission_forge.geometry import Point2, rectangle
from mission_forge.planning import timed_path_from_polyline
from mission_forge.randomizer import sample_scenario, suburban_grid_template
from mission_forge.render import render_scene
from mission_forge.scenario import KeepOutZone, Objective
from mission_forge.scoring import MetricsReport, score_mission
from mission_forge.serde import serialize_mission
from mission_forge.sim import MissionLog, run_mission

from test_sim import basic_config, basic_mission


def synthetic_log(md, events, target="car_000", seed=99) -> MissionLog:
    meta = {
        "schema_version": "1",
        "mission_hash": content_hash(serialize_mission(md)),
        "config_hash": "x",
        "seed": seed,
        "tick_dt": 0.1,
        "thread": "perception",
        "policy": "scripted",
        "perfect_perception_los": True,
        "target_entity_id": target,
        "target_track_id": "trk_feed",
        "total_ticks": len([e for e in events if e["kind"] == "tick"]),
    }
    return MissionLog(meta=meta, events=events, status="COMPLETED")


def tick_evt(tick, t, in_view=False, in_aoi=False):
    return {"kind": "tick", "tick": tick, "t": t,
            "uav": {"position": {"x": 0.0, "y": 0.0, "z": 80.0}, "yaw": 0.0},
            "target_in_view": in_view, "uav_in_aoi": in_aoi}


class TestScoreMission:
    def test_detection_read_through(self):
        md = basic_mission()
        events = [tick_evt(1, 0.1),
                  {"kind": "detection", "tick": 1200, "t": 120.0, "camera": 0,
                   "track_id": "trk_x", "observed_class": "car",
                   "observed_attributes": {}, "position_estimate": {"x": 0, "y": 0},
                   "confidence": 1.0, "true_entity_id": "car_000"}]
        report = score_mission(synthetic_log(md, events), md)
        assert report.target_detected is True
        assert report.time_to_first_detection == 120.0
        assert report.koz_violation_count == 0
        assert report.mission_failed is False

    def test_violation_interval(self):
        md = basic_mission()
        events = [
            {"kind": "violation_enter", "tick": 100, "t": 10.0, "koz_id": "k"},
            {"kind": "violation_exit", "tick": 140, "t": 14.0, "koz_id": "k"},
        ]
        report = score_mission(synthetic_log(md, events), md)
        assert report.koz_violation_count == 1
        assert report.koz_violation_duration == pytest.approx(4.0)
        assert report.mission_failed is True

    def test_unclosed_violation_clips_to_end(self):
        md = basic_mission()
        events = [tick_evt(1, 0.1),
                  {"kind": "violation_enter", "tick": 10, "t": 1.0, "koz_id": "k"},
                  tick_evt(100, 10.0)]
        report = score_mission(synthetic_log(md, events), md)
        assert report.koz_violation_duration == pytest.approx(9.0)

    def test_pursuit_fraction_recount(self):
        md = basic_mission()
        events = [tick_evt(i, i * 0.1, in_view=(i <= 450)) for i in range(1, 601)]
        report = score_mission(synthetic_log(md, events), md)
        assert report.pursuit_in_view_fraction == pytest.approx(450 / 600)

    def test_no_detection_time_absent(self):
        md = basic_mission()
        report = score_mission(synthetic_log(md, [tick_evt(1, 0.1)]), md)
        assert report.target_detected is False
        assert report.time_to_first_detection is None

    def test_mismatched_mission_rejected(self):
        md = basic_mission()
        other = basic_mission(mission_duration=123.0)
        log = synthetic_log(md, [])
        with pytest.raises(ScoringError):
            score_mission(log, other)

    def test_scoring_is_pure(self):
        md = basic_mission(kozs=[KeepOutZone("k0", rectangle(20, 20, 40, 40))])
        cfg = basic_config()
        path = timed_path_from_polyline([Point2(0, 0), Point2(120, 120)], speed=10.0,
                                        z_start=80.0)
        log = run_mission(md, cfg, path)
        a = score_mission(log, md).to_dict()
        b = score_mission(log, md).to_dict()
        assert a == b

    def test_report_round_trip(self):
        r = MetricsReport(True, False, 12.5, 1, 4.0, 0.5, 0.25, True)
        assert MetricsReport.from_dict(r.to_dict()) == r


class TestLogIO:
    def test_write_read_round_trip(self, tmp_path):
        md = basic_mission()
        cfg = basic_config()
        path = timed_path_from_polyline([Point2(0, 0), Point2(120, 120)], speed=10.0,
                                        z_start=80.0)
        log = run_mission(md, cfg, path)
        f = tmp_path / "mission_log.jsonl"
        log.write(f)
        loaded = MissionLog.read(f)
        assert loaded.meta == log.meta
        assert loaded.events == log.events
        assert loaded.status == log.status
        assert loaded.log_hash() == log.log_hash()


class TestRenderScene:
    def test_prior_cells_rendered(self):
        tpl = suburban_grid_template()
        md, cfg = sample_scenario(tpl, 51)
        svg = render_scene(md, cfg)
        assert svg.count('class="prior-cell"') == len(md.priors.cells)
        assert svg.startswith("<svg")
        assert svg.rstrip().endswith("</svg>")

    def test_route_band_rendered(self):
        tpl = suburban_grid_template(Objective.ROUTE_SEARCH)
        md, cfg = sample_scenario(tpl, 52)
        svg = render_scene(md, cfg)
        assert 'class="route-band"' in svg
        assert 'class="route-line"' in svg
        assert svg.count('class="trajectory"') >= 1

    def test_deterministic_bytes(self):
        tpl = suburban_grid_template()
        md, cfg = sample_scenario(tpl, 53)
        assert render_scene(md, cfg) == render_scene(md, cfg)

    def test_log_overlay(self):
        md = basic_mission()
        cfg = basic_config()
        path = timed_path_from_polyline([Point2(0, 0), Point2(120, 120)], speed=10.0,
                                        z_start=80.0)
        log = run_mission(md, cfg, path)
        svg = render_scene(md, cfg, log)
        assert 'class="uav-path"' in svg

    def test_koz_and_entities_rendered(self):
        md = basic_mission(kozs=[KeepOutZone("k0", rectangle(20, 20, 40, 40))])
        cfg = basic_config()
        svg = render_scene(md, cfg)
        assert svg.count('class="koz"') == 1
        assert 'class="entity target"' in svg
