"""Command-line entry points.

    blocktalk gen-tasks --seed 7 --count 5 --objective replicate --out tasks/
    blocktalk serve --port 8700 --tasks tasks/ --logs logs/ --seed 7
    blocktalk replay logs/<session>.jsonl
    blocktalk score logs/<session>.jsonl --averages stats.json
    blocktalk analyze --logs logs/ --out report/
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .analysis import EmptyCorpus, FilterConfig, analyze_directory, load_averages
from .metrics import DEFAULT_WEIGHTS, EffortWeights, score_transcript
from .tasks import (
    DEFAULT_BLOCK_COUNT,
    DEFAULT_HEIGHT,
    DEFAULT_TIME_LIMIT_S,
    DEFAULT_WIDTH,
    InitialLayout,
    Objective,
    PolicyKind,
    Unsatisfiable,
    UnsupportedConfig,
    generate_task,
    load_task_dir,
    validate_task,
    write_task,
)
from .transcript import TranscriptParseError, canonical_json, read_transcript, verify_replay


def _parse_weights(raw: str) -> EffortWeights:
    try:
        w_word, w_gesture = (float(part) for part in raw.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError("weights look like 0.8,0.2") from exc
    return EffortWeights(w_word=w_word, w_gesture=w_gesture)


def cmd_score(args: argparse.Namespace) -> int:
    transcript = read_transcript(args.transcript)
    averages = load_averages(args.averages) if args.averages else None
    row = score_transcript(
        transcript,
        averages=averages,
        weights=args.weights,
        align=not args.no_align,
    )
    print(canonical_json(row.to_obj()))
    return 0


def cmd_gen_tasks(args: argparse.Namespace) -> int:
    layout = {"grid": InitialLayout.GRID, "scattered": InitialLayout.SCATTERED}
    if args.config == "cube":
        raise UnsupportedConfig("cube layouts need a third dimension")
    for i in range(args.count):
        task = generate_task(
            args.seed + i,
            width=args.width,
            height=args.height,
            block_count=args.blocks,
            objective=Objective(args.objective),
            initial_layout=layout[args.config],
            policy_kind=PolicyKind(args.policy),
            time_limit_s=args.time_limit,
        )
        violations = validate_task(task)
        if violations:
            print(f"generated task failed validation: {violations}", file=sys.stderr)
            return 1
        path = write_task(task, args.out)
        print(path)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .server import create_app

    tasks = load_task_dir(args.tasks) if args.tasks else None
    if args.tasks and not tasks:
        print(f"no tasks found under {args.tasks}", file=sys.stderr)
        return 1
    app = create_app(
        tasks=tasks,
        logs_dir=args.logs,
        seed=args.seed,
        static_dir=args.static,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    from .transcript import move_fields
    from .world import apply_flip, apply_move

    transcript = read_transcript(args.transcript)
    world = transcript.initial_world()
    print(f"# session {transcript.session_id} ({transcript.termination})")
    print(canonical_json(world.to_obj()))
    for event in transcript.events:
        if event.kind == "move":
            block_id, _source, dest = move_fields(event)
            world, _record = apply_move(world, block_id, dest)
            print(f"t={event.t} {event.actor} move -> {canonical_json(world.to_obj())}")
        elif event.kind == "flip":
            world = apply_flip(world, int(event.data["block"]))
            print(f"t={event.t} {event.actor} flip -> {canonical_json(world.to_obj())}")
        else:
            print(f"t={event.t} {event.actor} {event.kind} {canonical_json(event.data)}")
    try:
        verify_replay(transcript, file=str(args.transcript))
    except Exception as exc:
        print(f"REPLAY MISMATCH: {exc}", file=sys.stderr)
        return 1
    print("replay OK: final world matches footer")
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    report = analyze_directory(
        args.logs,
        args.out,
        cfg=FilterConfig(min_effort=args.min_effort, min_completion=args.min_completion),
        weights=args.weights,
    )
    summary = {
        "games": len(report.rows),
        "retained": len(report.retained),
        "removed": len(report.removed),
        "problems": len(report.problems),
        "correlations": report.correlations,
        "out": str(Path(args.out).resolve()),
    }
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blocktalk", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score one transcript as a metrics row")
    p.add_argument("transcript", help="path to a .jsonl transcript")
    p.add_argument("--weights", type=_parse_weights, default=DEFAULT_WEIGHTS)
    p.add_argument("--averages", help="stats JSON with avg_words/avg_gestures")
    p.add_argument("--no-align", action="store_true", help="skip centroid alignment")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("gen-tasks", help="generate a deterministic task suite")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument(
        "--objective",
        choices=[o.value for o in Objective],
        default=Objective.REPLICATE.value,
    )
    p.add_argument("--config", choices=["grid", "scattered", "cube"], default="scattered")
    p.add_argument(
        "--policy",
        choices=[k.value for k in PolicyKind],
        default=PolicyKind.ROBOT_ONLY.value,
    )
    p.add_argument("--width", type=int, default=DEFAULT_WIDTH)
    p.add_argument("--height", type=int, default=DEFAULT_HEIGHT)
    p.add_argument("--blocks", type=int, default=DEFAULT_BLOCK_COUNT)
    p.add_argument("--time-limit", type=int, default=DEFAULT_TIME_LIMIT_S)
    p.add_argument("--out", required=True, help="directory for task JSON files")
    p.set_defaults(func=cmd_gen_tasks)

    p = sub.add_parser("serve", help="run the pairing/game websocket server")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8700)
    p.add_argument("--tasks", help="task directory (default: built-in rotation)")
    p.add_argument("--logs", default="logs", help="transcript output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--static", help="serve a built web client from this directory")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("replay", help="print a transcript's state evolution and verify it")
    p.add_argument("transcript")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("analyze", help="score, filter and summarise a transcript corpus")
    p.add_argument("--logs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--min-effort", type=float, default=FilterConfig().min_effort)
    p.add_argument("--min-completion", type=float, default=FilterConfig().min_completion)
    p.add_argument("--weights", type=_parse_weights, default=DEFAULT_WEIGHTS)
    p.set_defaults(func=cmd_analyze)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (Unsatisfiable, UnsupportedConfig, EmptyCorpus, TranscriptParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
