"""Command line entry points: simulate, replay, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .harness import batch_configs_from_json, replay_trace_file, run_batch


def _cmd_simulate(args: argparse.Namespace) -> int:
    config_data = json.loads(Path(args.config).read_text())
    configs = batch_configs_from_json(config_data)
    out_dir = Path(args.out)
    aggregates, episode_rows = run_batch(configs, args.episodes, args.seed, out_dir)

    failures = []
    for row in episode_rows:
        if row["rounds"] > 27:
            failures.append(f"{row['config']}#{row['episode_index']}: more rounds than cards")
        if row["completed"] and len(row["true_hypothesis_posterior_trace"]) != row["rounds"]:
            failures.append(f"{row['config']}#{row['episode_index']}: trace length != rounds")
    for aggregate in aggregates:
        print(
            f"{aggregate['config']}: {aggregate['completed']}/{aggregate['episodes']} completed,"
            f" mean rounds {aggregate['mean_rounds']},"
            f" mean misunderstandings {aggregate['mean_misunderstandings']}"
        )
    for failure in failures:
        print(f"invariant violation: {failure}", file=sys.stderr)
    print(f"wrote {out_dir / 'metrics.csv'}")
    return 1 if failures else 0


def _cmd_replay(args: argparse.Namespace) -> int:
    report = replay_trace_file(Path(args.trace))
    status = "ok" if report["ok"] else "FAILED"
    print(
        f"replay {status}: {report['rounds']} rounds,"
        f" max deviation {report['max_deviation']:.3e}"
    )
    for error in report["errors"]:
        print(f"  {error}", file=sys.stderr)
    return 0 if report["ok"] else 1


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    ui_dir = Path(args.ui_dir) if args.ui_dir else None
    app = create_app(Path(args.data_dir), ui_dir=ui_dir, debug_default=args.debug)
    uvicorn.run(app, host=args.host, port=args.port, log_level="debug" if args.debug else "info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cardsort")
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", help="run a batch of seeded episodes")
    simulate.add_argument("--config", required=True, help="experiment config JSON file")
    simulate.add_argument("--episodes", type=int, required=True, help="episodes per config")
    simulate.add_argument("--seed", type=int, required=True, help="base seed; episode i uses seed+i")
    simulate.add_argument("--out", required=True, help="output directory")
    simulate.set_defaults(func=_cmd_simulate)

    replay = sub.add_parser("replay", help="verify an episode trace replays exactly")
    replay.add_argument("--trace", required=True, help="trace JSONL file")
    replay.set_defaults(func=_cmd_replay)

    serve = sub.add_parser("serve", help="run the live-session HTTP service")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--data-dir", default="sessions", help="session log directory")
    serve.add_argument("--ui-dir", default=None, help="built UI bundle to serve at /")
    serve.add_argument("--debug", action="store_true", help="expose belief diagnostics on every session")
    serve.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
