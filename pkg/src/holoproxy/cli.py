"""Operator command line: serve sessions, run scenarios, replay logs, drive a
headless client.

Exit codes are a stable contract: 0 success, 1 assertion or digest failure,
2 usage or I/O errors.
"""

from __future__ import annotations

import argparse
import asyncio
import os
import sys
from pathlib import Path

from .datacube import load_dataset
from .errors import (
    AssertionFailed,
    CorruptLog,
    DatasetError,
    DigestMismatch,
    HoloproxyError,
    ScenarioError,
    Timeout,
)
from .pose import PoseJitter
from .server import DEFAULT_PORT, PORT_ENV_VAR, HoloproxyServer, replay_log
from .interaction import default_screen

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="holoproxy",
        description="Session server, scenario harness, and replay tools for "
        "smartphone-proxy holographic bar charts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="serve a session over TCP + WebSocket")
    serve.add_argument("--dataset", required=True, help="CSV file (location,year,value)")
    serve.add_argument(
        "--port",
        type=int,
        default=None,
        help=f"listen port (default: ${PORT_ENV_VAR} or {DEFAULT_PORT})",
    )
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--log-dir", default="logs", help="replay log directory")
    serve.add_argument("--session-id", default=None, help="fixed session id (default: random)")
    serve.add_argument("--screen", default="2400x1080", help="proxy screen size WxH")
    serve.add_argument(
        "--seed-noise",
        type=float,
        default=0.0,
        metavar="SIGMA",
        help="gaussian pose-tracking jitter (meters/radians std-dev)",
    )
    serve.add_argument("--seed", type=int, default=0, help="seed for the jitter source")
    serve.add_argument(
        "--ui", nargs="?", const="frontend", default=None, metavar="DIR",
        help="serve emulator static assets from DIR (default: ./frontend)",
    )

    run = sub.add_parser("run", help="run a scenario through the simulation harness")
    run.add_argument("scenario", help="scenario file or bundled name (see `list`)")
    run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    run.add_argument("--out", default=None, metavar="DIR", help="write report files + figure")
    run.add_argument("--format", choices=("text", "json"), default="text")

    replay = sub.add_parser("replay", help="replay a session log and verify its digest")
    replay.add_argument("log", help="log file written by `serve`")
    replay.add_argument(
        "--dataset", default=None, help="CSV fallback when the log has no #cube header"
    )

    client = sub.add_parser("client", help="drive one scenario client against a live server")
    client.add_argument("scenario", help="scenario file or bundled name")
    client.add_argument("--as", dest="client_id", required=True, help="client id from the scenario")
    client.add_argument("--connect", default=None, metavar="HOST:PORT")
    client.add_argument("--session", required=True, help="session id printed by `serve`")
    client.add_argument("--settle-ms", type=float, default=500.0)
    client.add_argument(
        "--time-scale", type=float, default=1.0, help="multiply script delays (0 = as fast as possible)"
    )

    sub.add_parser("list", help="list bundled scenarios")
    return parser


def _resolve_port(port: int | None) -> int:
    if port is not None:
        return port
    env = os.environ.get(PORT_ENV_VAR)
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise ValueError(f"bad {PORT_ENV_VAR}={env!r}") from exc
    return DEFAULT_PORT


def _parse_screen(spec: str):
    try:
        w, h = spec.lower().split("x")
        return default_screen(int(w), int(h))
    except ValueError as exc:
        raise ValueError(f"bad --screen {spec!r}, expected WxH") from exc


def cmd_serve(args: argparse.Namespace) -> int:
    try:
        cube = load_dataset(Path(args.dataset).read_text(encoding="utf-8"))
    except OSError as exc:
        print(f"error: cannot read dataset: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DatasetError as exc:
        print(f"error: invalid dataset: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        port = _resolve_port(args.port)
        screen = _parse_screen(args.screen)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    jitter = PoseJitter(args.seed_noise, seed=args.seed) if args.seed_noise > 0 else None
    ui_dir = None
    if args.ui is not None:
        ui_dir = Path(args.ui)
        if not ui_dir.is_dir():
            print(f"error: --ui directory {ui_dir} not found", file=sys.stderr)
            return EXIT_USAGE

    async def serve() -> int:
        import signal

        server = HoloproxyServer(
            host=args.host,
            port=port,
            log_dir=args.log_dir,
            ui_dir=ui_dir,
            pose_jitter=jitter,
        )
        sid = server.create_session(cube, screen, session_id=args.session_id)
        try:
            await server.start()
        except OSError as exc:
            print(f"error: cannot bind {args.host}:{port}: {exc}", file=sys.stderr)
            return EXIT_USAGE
        print(f"session {sid}", flush=True)
        print(f"listening on {args.host}:{server.port} (TCP frames + ws://.../ws)", flush=True)
        if ui_dir is not None:
            print(f"emulator ui: http://{args.host}:{server.port}/", flush=True)
        print(f"log: {Path(args.log_dir) / (sid + '.log')}", flush=True)

        # Signals become an ordinary loop callback instead of a
        # KeyboardInterrupt mid-callback, so shutdown always runs stop()
        # and the replay logs get their digest trailer.
        shutdown = asyncio.Event()
        loop = asyncio.get_running_loop()
        for signum in (signal.SIGINT, signal.SIGTERM):
            loop.add_signal_handler(signum, shutdown.set)
        try:
            await shutdown.wait()
        except asyncio.CancelledError:
            pass
        finally:
            await server.stop()
            print("server stopped; log closed", flush=True)
        return EXIT_OK

    try:
        return asyncio.run(serve())
    except KeyboardInterrupt:
        return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    from .report import render_json, render_text, write_report
    from .scenarios import load_scenario, run_scenario

    try:
        scenario = load_scenario(args.scenario)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ScenarioError as exc:
        print(f"error: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        report = run_scenario(scenario, seed=args.seed)
    except (AssertionFailed, Timeout) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    out = render_json(report) if args.format == "json" else render_text(report)
    sys.stdout.write(out)
    if args.out is not None:
        paths = write_report(report, args.out)
        print(f"report files: {', '.join(str(p) for p in paths.values())}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_replay(args: argparse.Namespace) -> int:
    dataset = None
    if args.dataset is not None:
        try:
            dataset = load_dataset(Path(args.dataset).read_text(encoding="utf-8"))
        except (OSError, DatasetError) as exc:
            print(f"error: invalid --dataset: {exc}", file=sys.stderr)
            return EXIT_USAGE
    log_path = Path(args.log)
    if not log_path.is_file():
        print(f"error: log file {log_path} not found", file=sys.stderr)
        return EXIT_USAGE
    try:
        result = replay_log(log_path, dataset=dataset)
    except DigestMismatch as exc:
        print(f"digest mismatch: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except CorruptLog as exc:
        print(f"corrupt log: {exc}", file=sys.stderr)
        return EXIT_FAILED
    print(f"applied {result.applied_count} messages")
    print(f"digest {result.final_digest}")
    if result.recorded_digest is not None:
        print("recorded digest matches")
    else:
        print("no recorded digest (log was not closed cleanly)")
    return EXIT_OK


def cmd_client(args: argparse.Namespace) -> int:
    from .client import run_scripted_client
    from .scenarios import load_scenario

    try:
        scenario = load_scenario(args.scenario)
    except (FileNotFoundError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    target = args.connect or f"127.0.0.1:{_resolve_port(None)}"
    try:
        host, port_text = target.rsplit(":", 1)
        port = int(port_text)
    except ValueError:
        print(f"error: bad --connect {target!r}", file=sys.stderr)
        return EXIT_USAGE
    try:
        summary = asyncio.run(
            run_scripted_client(
                scenario,
                client_id=args.client_id,
                host=host,
                port=port,
                session_id=args.session,
                settle_ms=args.settle_ms,
                time_scale=args.time_scale,
            )
        )
    except (ConnectionError, OSError) as exc:
        print(f"error: connection failed: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"client {summary.client_id}: sent {summary.sent}, acked {summary.acked}")
    print(f"snapshot digest {summary.snapshot_digest}")
    print(f"final digest    {summary.final_digest}")
    for err in summary.errors:
        print(f"server error: {err}", file=sys.stderr)
    return EXIT_OK if not summary.errors else EXIT_FAILED


def cmd_list(_: argparse.Namespace) -> int:
    from .scenarios import bundled_scenarios

    for name in bundled_scenarios():
        print(name)
    return EXIT_OK


_COMMANDS = {
    "serve": cmd_serve,
    "run": cmd_run,
    "replay": cmd_replay,
    "client": cmd_client,
    "list": cmd_list,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except HoloproxyError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILED


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
