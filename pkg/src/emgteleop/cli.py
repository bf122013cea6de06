"""Command-line entry points: the teleoperation daemon and the EMG stream tool.

``teleopd`` drives whole sessions:

  teleopd serve     --config cfg.json [--world w.json] [--rate 1.0]
                    [--emg host:port --left-model l.emgm --right-model r.emgm]
  teleopd simulate  --scenario drink [--config cfg.json] [--log out.jsonl]
  teleopd train     --arm left --out model.emgm [--session-seed 101]
  teleopd evaluate  --scenario drink [--config cfg.json]
  teleopd replay    --log session.jsonl [--world w.json]

``emg-stream`` serves a synthetic 256-channel recording over TCP using the
frame format the ingest side expects.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from .service.config import ConfigError, ServiceConfig, load_config
from .service.scenarios import load_scenario, run_scenario
from .service.sessionlog import audit_log, load_log


def _load_config(args) -> ServiceConfig:
    cfg = load_config(args.config) if args.config else ServiceConfig()
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "emg", None):
        cfg.emg_endpoint = args.emg
    for arm in ("left", "right"):
        path = getattr(args, f"{arm}_model", None)
        if path:
            setattr(cfg, f"{arm}_model", path)
    return cfg


def _load_world(args):
    from .sim.world import World, default_home

    if getattr(args, "world", None):
        return World.load(args.world)
    return default_home()


def _summarize(engine) -> dict:
    held = engine.held_object()
    tasks = []
    for run in engine.tasks:
        tasks.append({
            "name": run.spec.name,
            "completed": run.completed_at_ms is not None,
            "elapsed_s": run.elapsed_s,
            "timed_out": run.timed_out,
        })
    return {
        "duration_ms": engine.t_ms,
        "final_pose": [round(engine.state.x, 4), round(engine.state.y, 4),
                       round(engine.state.theta, 4)],
        "held": held.id if held else None,
        "records": len(engine.log.records),
        "tail_hash": engine.log.tail_hash(),
        "tasks": tasks,
    }


def cmd_serve(args) -> int:
    from .service.console import ConsoleServer
    from .service.pipeline import TeleopEngine

    cfg = _load_config(args)
    engine = TeleopEngine(cfg, world=_load_world(args), log_path=args.log)
    server = None
    if not args.headless:
        server = ConsoleServer(port=cfg.console_port)
        server.attach(engine)
        print(f"console channel on {server.host}:{server.port} "
              f"(NDJSON or WebSocket); Ctrl-C stops", flush=True)
    period = 0.1 / args.rate if args.rate > 0 else 0.0
    try:
        next_due = time.monotonic()
        while args.duration_ms <= 0 or engine.t_ms < args.duration_ms:
            engine.run_ms(100)
            if period > 0.0:
                next_due += period
                delay = next_due - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
    except KeyboardInterrupt:
        pass
    finally:
        engine.finish()
        engine.close()
        if server is not None:
            server.close()
        print(json.dumps(_summarize(engine), indent=2))
    return 0


def cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    cfg = _load_config(args)
    engine = run_scenario(scenario, config=cfg, world=_load_world(args),
                          log_path=args.log)
    engine.close()
    print(json.dumps(_summarize(engine), indent=2))
    return 0


def cmd_evaluate(args) -> int:
    scenario = load_scenario(args.scenario)
    cfg = _load_config(args)
    engine = run_scenario(scenario, config=cfg, world=_load_world(args))
    engine.close()
    summary = _summarize(engine)
    print(json.dumps(summary, indent=2))
    incomplete = [t for t in summary["tasks"] if not t["completed"]]
    return 1 if incomplete else 0


def cmd_replay(args) -> int:
    from .service.pipeline import replay

    records = load_log(args.log)
    report = audit_log(records)
    if not report:
        print(f"log integrity check failed at record {report.first_bad}",
              file=sys.stderr)
        return 1
    engine = replay(records, _load_world(args), log_path=args.out)
    engine.close()
    original_tail = records[-1]["hash"]
    match = engine.log.tail_hash() == original_tail
    print(json.dumps({**_summarize(engine), "reproduced": match}, indent=2))
    return 0 if match else 1


def cmd_train(args) -> int:
    from .ml.data import (
        CueSchedule,
        LEFT_GESTURES,
        RIGHT_GESTURES,
        build_dataset,
        split_dataset,
    )
    from .ml.model import save_model
    from .ml.train import train
    from .stream.synth import SyntheticEmg, default_profiles

    gestures = LEFT_GESTURES if args.arm == "left" else RIGHT_GESTURES
    band = tuple(float(x) for x in args.effort_band.split(","))
    schedule = CueSchedule.standard_session(
        [g for g in gestures if g != "rest"], sets=args.sets, reps=args.reps,
        effort_band=band, seed=args.session_seed)
    gen = SyntheticEmg(default_profiles(), schedule.generator_entries(),
                       seed=args.session_seed)
    print(f"synthesizing {schedule.duration_s:.0f} s session "
          f"({args.arm} arm, seed {args.session_seed})", flush=True)
    ds = build_dataset(gen.frames(), schedule, args.arm)
    split = split_dataset(ds, seed=args.split_seed)
    model, report = train(split, seed=args.seed or 0)
    save_model(model, args.out, ds.gestures, args.arm, meta={
        "session_seed": args.session_seed,
        "val_accuracy": report.val_accuracy,
        "test_accuracy": report.test_accuracy,
    })
    print(json.dumps({
        "arm": args.arm,
        "gestures": list(ds.gestures),
        "windows": int(len(ds)),
        "epochs": [{k: round(v, 4) for k, v in e.items()}
                   for e in report.epochs],
        "selected_epoch": report.selected_epoch,
        "val_accuracy": report.val_accuracy,
        "test_accuracy": report.test_accuracy,
        "model": str(args.out),
    }, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="teleopd",
                                description="EMG teleoperation daemon")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, world=True, seed=True):
        sp.add_argument("--config", help="service config JSON")
        if world:
            sp.add_argument("--world", help="world JSON file")
        if seed:
            sp.add_argument("--seed", type=int, help="override config seed")
        sp.add_argument("--headless", action="store_true",
                        help="no console server (simulate/evaluate are "
                             "always headless)")

    sp = sub.add_parser("serve", help="live session with console channel")
    common(sp)
    sp.add_argument("--log", default="session.jsonl")
    sp.add_argument("--rate", type=float, default=1.0,
                    help="sim-time multiplier (10 = 10x faster than real "
                         "time, 0 = unpaced)")
    sp.add_argument("--duration-ms", type=int, default=0,
                    help="stop after this much sim time (0 = run until ^C)")
    sp.add_argument("--emg", metavar="HOST:PORT",
                    help="classify a live EMG frame stream from this "
                         "endpoint (requires model files)")
    sp.add_argument("--left-model", help="gesture model for the left arm")
    sp.add_argument("--right-model", help="gesture model for the right arm")
    sp.set_defaults(fn=cmd_serve)

    sp = sub.add_parser("simulate", help="run a scripted scenario headless")
    common(sp)
    sp.add_argument("--scenario", required=True,
                    help="builtin name (drink|kitchen|idle) or JSON path")
    sp.add_argument("--log", default="session.jsonl")
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("evaluate", help="run a scenario and report task results")
    common(sp)
    sp.add_argument("--scenario", required=True)
    sp.set_defaults(fn=cmd_evaluate)

    sp = sub.add_parser("replay", help="re-run a recorded session log")
    common(sp, seed=False)
    sp.add_argument("--log", required=True)
    sp.add_argument("--out", help="write the reproduced log here")
    sp.set_defaults(fn=cmd_replay)

    sp = sub.add_parser("train", help="train a gesture classifier on a "
                                      "synthetic recording session")
    sp.add_argument("--arm", choices=("left", "right"), required=True)
    sp.add_argument("--out", required=True, help="model output path")
    sp.add_argument("--session-seed", type=int, default=101)
    sp.add_argument("--split-seed", type=int, default=0)
    sp.add_argument("--seed", type=int, default=0, help="training seed")
    sp.add_argument("--sets", type=int, default=5)
    sp.add_argument("--reps", type=int, default=3)
    sp.add_argument("--effort-band", default="0.15,0.30")
    sp.set_defaults(fn=cmd_train)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def stream_main(argv=None) -> int:
    """Serve a deterministic synthetic EMG recording over TCP."""
    from .stream.net import serve_stream
    from .stream.synth import ScheduleEntry, SyntheticEmg, default_profiles

    p = argparse.ArgumentParser(prog="emg-stream",
                                description="synthetic EMG frame server")
    p.add_argument("--endpoint", default="127.0.0.1:9400")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--schedule", default="rest:5",
                   help="comma list of gesture:seconds[:effort], "
                        "e.g. rest:2,wrist_back:4:0.25")
    p.add_argument("--no-realtime", action="store_true",
                   help="send frames as fast as the socket accepts")
    args = p.parse_args(argv)

    entries = []
    for part in args.schedule.split(","):
        bits = part.strip().split(":")
        if len(bits) not in (2, 3):
            p.error(f"bad schedule entry {part!r}")
        effort = float(bits[2]) if len(bits) == 3 else 0.2
        if bits[0] == "rest":
            effort = 0.0
        entries.append(ScheduleEntry(bits[0], float(bits[1]), effort=effort))

    gen = SyntheticEmg(default_profiles(), entries, seed=args.seed)
    total = sum(e.duration_s for e in entries)
    print(f"serving {total:.1f} s of synthetic EMG on {args.endpoint} "
          f"(seed {args.seed}); waiting for a client", flush=True)
    sent = serve_stream(gen.frames(), args.endpoint,
                        realtime=not args.no_realtime)
    print(f"done: {sent} frames")
    return 0


if __name__ == "__main__":
    sys.exit(main())
