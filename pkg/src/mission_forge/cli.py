"""mission-forge command line interface.

Verbs: generate, validate, plan, check koz, relations eval, run, serve,
score, render. Exit codes: 0 success, 2 validation findings, 3 runtime
errors.
"""

from __future__ import annotations

import argparse
import asyncio
import dataclasses
import json
import os
import sys
from pathlib import Path

from .canonical import canonical_dumps
from .errors import MissionForgeError
from .planning import plan_area_search, plan_look_guarantee_path, RrtConfig, UavKinematics
from .protocol import ProtocolOptions, serve_client, serve_forever_async
from .randomizer import (
    generate_dataset,
    load_template,
    save_template,
    suburban_grid_template,
)
from .relations import SceneTimeline, eval_eventually, eval_relation, is_eventually
from .render import render_scene
from .scenario import (
    MissionDescription,
    Objective,
    SimulationConfig,
    validate_config,
    validate_mission,
    validate_pair,
)
from .scoring import score_mission
from .serde import (
    deserialize_config,
    deserialize_mission,
    deserialize_scene,
    deserialize_timed_path,
    load_document,
    relations_from_bytes,
    serialize_timed_path,
)
from .sim import MissionLog, RunOptions, run_mission
from .constraints import koz_violations

EXIT_OK = 0
EXIT_FINDINGS = 2
EXIT_RUNTIME = 3

SEED_ENV_VAR = "MISSION_FORGE_SEED"


def _load_mission(path: str) -> MissionDescription:
    return deserialize_mission(Path(path).read_bytes())


def _load_config(path: str) -> SimulationConfig:
    cfg = deserialize_config(Path(path).read_bytes())
    override = os.environ.get(SEED_ENV_VAR)
    if override is not None:
        cfg = dataclasses.replace(cfg, seed=int(override))
        print(f"note: {SEED_ENV_VAR} overrides document seed -> {cfg.seed}", file=sys.stderr)
    return cfg


def _resolve_template(spec: str, objective: str | None):
    if spec == "suburban-grid":
        obj = Objective(objective) if objective else Objective.AREA_SEARCH
        return suburban_grid_template(obj)
    return load_template(spec)


def cmd_generate(args) -> int:
    tpl = _resolve_template(args.template, args.objective)
    manifest = generate_dataset(tpl, args.count, args.seed, args.out, workers=args.workers)
    if args.save_template:
        save_template(tpl, Path(args.out) / "template.json")
    print(f"wrote {len(manifest.entries)} scenario pairs to {args.out}")
    print(f"manifest_hash {manifest.manifest_hash}")
    if manifest.failures:
        print(f"{len(manifest.failures)} sampling failures were replaced by derived seeds")
    return EXIT_OK


def cmd_validate(args) -> int:
    worst = EXIT_OK
    docs = {}
    for path in args.files:
        kind, doc = load_document(path)
        docs[kind] = doc
        report = validate_mission(doc) if kind == "mission" else validate_config(doc)
        for f in report.findings:
            print(f"{path}: {f.code} at {f.path}: {f.message}")
        if not report.ok:
            worst = EXIT_FINDINGS
        else:
            print(f"{path}: ok ({kind})")
    if "mission" in docs and "sim_config" in docs:
        report = validate_pair(docs["mission"], docs["sim_config"])
        for f in report.findings:
            print(f"pair: {f.code} at {f.path}: {f.message}")
        if not report.ok:
            worst = EXIT_FINDINGS
    return worst


def cmd_plan(args) -> int:
    md = _load_mission(args.mission)
    cfg = _load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    kin = UavKinematics()
    if args.kind == "look":
        target = cfg.target_entity()
        if target is None:
            print("config has no unique target entity", file=sys.stderr)
            return EXIT_RUNTIME
        plan = plan_look_guarantee_path(cfg.uav_start, target, cfg.cameras[0],
                                        cfg.obstacles, md.kozs, kin,
                                        RrtConfig(seed=cfg.seed))
        path_file = out / "uav_look_path.json"
        path_file.write_bytes(serialize_timed_path(plan.path))
        print(f"wrote {path_file} (guarantee at t={plan.guarantee_time:.1f}s)")
    else:
        waypoints = plan_area_search(md.aois, md.priors, cfg.cameras[0],
                                     altitude=cfg.uav_start.position.z)
        doc = {"schema_version": "1",
               "waypoints": [{"x": w.x, "y": w.y, "z": w.z} for w in waypoints]}
        path_file = out / "uav_search_waypoints.json"
        path_file.write_text(canonical_dumps(doc) + "\n", encoding="utf-8")
        print(f"wrote {path_file} ({len(waypoints)} waypoints)")
    return EXIT_OK


def cmd_check_koz(args) -> int:
    md = _load_mission(args.mission)
    path = deserialize_timed_path(Path(args.path).read_bytes())
    violations = koz_violations(path, md.kozs)
    for v in violations:
        print(f"{v.koz_id} enter={v.enter_t:.3f}s exit={v.exit_t:.3f}s "
              f"witness=({v.witness_point.x:.2f},{v.witness_point.y:.2f})")
    print(f"{len(violations)} violation(s)")
    return EXIT_OK


def cmd_relations_eval(args) -> int:
    scene = deserialize_scene(Path(args.scene).read_bytes())
    relations = relations_from_bytes(Path(args.relations).read_bytes())
    timeline = SceneTimeline((scene,))
    for i, rel in enumerate(relations):
        related_id = None
        for rid in sorted(scene.entities):
            ent = scene.entities[rid]
            if rid == rel.target_id or ent.entity_class != rel.related_class:
                continue
            if all(ent.attr_map().get(k) == v for k, v in rel.related_attributes.items()):
                related_id = rid
                break
        if related_id is None:
            print(f"[{i}] {rel.related_class} {rel.operator} {rel.target_id} -> "
                  f"no matching related entity")
            continue
        if is_eventually(rel.operator):
            value = eval_eventually(rel, related_id, timeline)
        else:
            value = eval_relation(rel, related_id, scene)
        print(f"[{i}] {rel.related_class}({related_id}) {rel.operator} {rel.target_id} "
              f"-> {str(value).lower()}")
    return EXIT_OK


def _run_options(args) -> RunOptions:
    return RunOptions(thread=args.thread,
                      perfect_perception_los=(args.perfect_perception_los == "on"),
                      baseline_declare=getattr(args, "baseline_declare", False))


def cmd_run(args) -> int:
    md = _load_mission(args.mission)
    cfg = _load_config(args.config)
    options = _run_options(args)
    if args.policy == "scripted":
        policy = deserialize_timed_path(Path(args.path).read_bytes()) if args.path else None
        log = run_mission(md, cfg, policy, options)
    else:
        popts = ProtocolOptions(run=options, lockstep=args.lockstep,
                                tick_interval=args.tick_interval)
        if args.thread == "perception" and args.path:
            popts.scripted_path = deserialize_timed_path(Path(args.path).read_bytes())
        log = serve_client(md, cfg, args.endpoint, popts)
    report = score_mission(log, md)
    summary = {"log_hash": log.log_hash(), "status": log.status, **report.to_dict()}
    # in stdio client mode stdout is the protocol channel; report on stderr
    sink = sys.stderr if (args.policy == "client" and args.endpoint == "-") else sys.stdout
    if args.out:
        log.write(args.out)
        summary_path = Path(args.out).with_suffix(".summary.json")
        summary_path.write_text(canonical_dumps(summary) + "\n", encoding="utf-8")
        print(f"wrote {args.out} and {summary_path}", file=sink)
    print(canonical_dumps(summary), file=sink)
    return EXIT_OK if log.status == "COMPLETED" else EXIT_RUNTIME


def cmd_serve(args) -> int:
    md = _load_mission(args.mission)
    cfg = _load_config(args.config)
    options = ProtocolOptions(run=_run_options(args), lockstep=args.lockstep,
                              tick_interval=args.tick_interval)
    if args.thread == "perception" and args.path:
        options.scripted_path = deserialize_timed_path(Path(args.path).read_bytes())
    counter = {"n": 0}

    def on_log(log: MissionLog) -> None:
        counter["n"] += 1
        if args.log_dir:
            Path(args.log_dir).mkdir(parents=True, exist_ok=True)
            log.write(Path(args.log_dir) / f"session_{counter['n']:04d}.jsonl")

    print(f"serving {args.endpoint} (thread={args.thread}); ctrl-c to stop", file=sys.stderr)
    try:
        asyncio.run(serve_forever_async(md, cfg, args.endpoint, options, on_log=on_log))
    except KeyboardInterrupt:
        pass
    return EXIT_OK


def cmd_score(args) -> int:
    md = _load_mission(args.mission)
    log = MissionLog.read(args.log)
    report = score_mission(log, md)
    print(canonical_dumps(report.to_dict()))
    return EXIT_OK


def cmd_render(args) -> int:
    md = _load_mission(args.mission)
    cfg = _load_config(args.config)
    log = MissionLog.read(args.log) if args.log else None
    svg = render_scene(md, cfg, log)
    Path(args.out).write_text(svg, encoding="utf-8")
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mission-forge",
                                description="Scenario generation and mission simulation "
                                            "for UAV urban search")
    sub = p.add_subparsers(dest="verb", required=True)

    g = sub.add_parser("generate", help="generate a scenario dataset")
    g.add_argument("--template", default="suburban-grid",
                   help="template.json path or builtin name 'suburban-grid'")
    g.add_argument("--objective", choices=[o.value for o in Objective], default=None,
                   help="objective for builtin templates")
    g.add_argument("--count", "-n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--save-template", action="store_true",
                   help="also write the resolved template.json into --out")
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("validate", help="validate documents; exit 2 on findings")
    v.add_argument("files", nargs="+")
    v.set_defaults(func=cmd_validate)

    pl = sub.add_parser("plan", help="plan UAV paths for a scenario")
    pl.add_argument("--mission", required=True)
    pl.add_argument("--config", required=True)
    pl.add_argument("--out", required=True)
    pl.add_argument("--kind", choices=["look", "search"], default="look")
    pl.set_defaults(func=cmd_plan)

    ck = sub.add_parser("check", help="constraint checks")
    cks = ck.add_subparsers(dest="check_verb", required=True)
    koz = cks.add_parser("koz", help="report KOZ violations for a timed path")
    koz.add_argument("--mission", required=True)
    koz.add_argument("--path", required=True, help="TimedPath document")
    koz.set_defaults(func=cmd_check_koz)

    rel = sub.add_parser("relations", help="symbolic relation tools")
    rels = rel.add_subparsers(dest="relations_verb", required=True)
    rev = rels.add_parser("eval", help="evaluate relations against a scene file")
    rev.add_argument("--scene", required=True)
    rev.add_argument("--relations", required=True)
    rev.set_defaults(func=cmd_relations_eval)

    r = sub.add_parser("run", help="run one mission")
    r.add_argument("--mission", required=True)
    r.add_argument("--config", required=True)
    r.add_argument("--thread", choices=["perception", "maneuver"], default="perception")
    r.add_argument("--policy", choices=["scripted", "client"], default="scripted")
    r.add_argument("--path", help="TimedPath document for scripted policy")
    r.add_argument("--endpoint", default="127.0.0.1:0",
                   help="host:port (or '-' for stdio) when --policy client")
    r.add_argument("--out", help="write the mission log here")
    r.add_argument("--lockstep", action="store_true",
                   help="wait for one client message per tick")
    r.add_argument("--tick-interval", type=float, default=0.0,
                   help="wall seconds to sleep between ticks (client policy)")
    r.add_argument("--perfect-perception-los", choices=["on", "off"], default="on")
    r.add_argument("--baseline-declare", action="store_true",
                   help="declare the best disambiguation candidate at mission end")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("serve", help="host mission sessions for protocol clients")
    s.add_argument("--mission", required=True)
    s.add_argument("--config", required=True)
    s.add_argument("--endpoint", required=True, help="host:port")
    s.add_argument("--thread", choices=["perception", "maneuver"], default="maneuver")
    s.add_argument("--path", help="TimedPath document for perception sessions")
    s.add_argument("--lockstep", action="store_true")
    s.add_argument("--tick-interval", type=float, default=0.0,
                   help="wall seconds to sleep between ticks")
    s.add_argument("--perfect-perception-los", choices=["on", "off"], default="on")
    s.add_argument("--log-dir", help="write per-session logs here")
    s.set_defaults(func=cmd_serve)

    sc = sub.add_parser("score", help="score a mission log")
    sc.add_argument("--log", required=True)
    sc.add_argument("--mission", required=True)
    sc.set_defaults(func=cmd_score)

    rd = sub.add_parser("render", help="render a scenario to SVG")
    rd.add_argument("--mission", required=True)
    rd.add_argument("--config", required=True)
    rd.add_argument("--log")
    rd.add_argument("--out", required=True)
    rd.set_defaults(func=cmd_render)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MissionForgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
