"""Operator entry points: offline analysis, validation, timeline export, replay, serve.

Exit codes are stable: 0 success, 1 input error (parse/validation), 2
runtime or connection error.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path

from .metrics import aggregate_metrics, compute_metrics, metrics_to_dict, write_csv
from .provenance import ProvenanceConfig, label_session
from .replay import ReplayCursor, ReplayError
from .server import ServerConfig, SessionHub, create_app, stream_log_frames
from .sessionlog import SessionLog, SessionLogError, parse_session
from .timeline import build_timeline, model_to_dict

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_RUNTIME = 2


def _load_provenance(args) -> ProvenanceConfig:
    cfg = ProvenanceConfig.from_file(args.config) if args.config else ProvenanceConfig()
    if getattr(args, "theta", None) is not None:
        cfg.similarity_threshold = args.theta
        cfg.__post_init__()
    return cfg


def _read_log(path: Path) -> SessionLog:
    return parse_session(path.read_bytes())


def _collect_logs(paths: list[str]) -> list[Path]:
    out: list[Path] = []
    for raw in paths:
        path = Path(raw)
        if path.is_dir():
            out.extend(sorted(path.glob("*.json")))
        else:
            out.append(path)
    return out


def _write_out(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def cmd_analyze(args) -> int:
    try:
        cfg = _load_provenance(args)
    except (ValueError, OSError) as exc:
        print(f"error: bad provenance config: {exc}", file=sys.stderr)
        return EXIT_INPUT
    paths = _collect_logs(args.paths)
    if not paths:
        print("error: no input logs found", file=sys.stderr)
        return EXIT_INPUT
    per_session = []
    for path in paths:
        try:
            labeled = label_session(_read_log(path), cfg)
        except (SessionLogError, ReplayError, OSError) as exc:
            print(f"error: {path}: {exc}", file=sys.stderr)
            return EXIT_INPUT
        per_session.append(compute_metrics(labeled))
    if args.format == "csv":
        _write_out(write_csv(per_session, aggregate=args.aggregate), args.out)
    else:
        payload: dict = {"sessions": [metrics_to_dict(m) for m in per_session]}
        if args.aggregate:
            payload["aggregate"] = aggregate_metrics(per_session)
        _write_out(json.dumps(payload, indent=2, ensure_ascii=False), args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    path = Path(args.path)
    try:
        log = _read_log(path)
    except (SessionLogError, OSError) as exc:
        print(f"invalid: {path}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        for file_path in log.file_paths():
            cursor = ReplayCursor(log, file_path)
            cursor.advance_to(max((e.timestamp_ms for e in log.events), default=0))
    except ReplayError as exc:
        print(f"invalid: {path}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(f"ok: {path}: {log.edit_count} edits, {log.chat_count} chats, "
          f"{log.test_run_count} test runs")
    return EXIT_OK


def cmd_export_timeline(args) -> int:
    try:
        cfg = _load_provenance(args)
        labeled = label_session(_read_log(Path(args.path)), cfg)
    except (SessionLogError, ReplayError, ValueError, OSError) as exc:
        print(f"error: {args.path}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    model = build_timeline(labeled, args.file_path)
    _write_out(json.dumps(model_to_dict(model), indent=2, ensure_ascii=False), args.out)
    return EXIT_OK


async def _replay_frames(frames, url: str, speed: float, timestamps) -> list[dict]:
    import websockets

    errors: list[dict] = []

    async def drain(ws) -> None:
        try:
            async for raw in ws:
                frame = json.loads(raw)
                if frame.get("frame_type") == "error":
                    errors.append(frame)
        except Exception:
            pass

    async with websockets.connect(url, max_size=16 * 1024 * 1024) as ws:
        reader = asyncio.create_task(drain(ws))
        prev_t = None
        for frame, t in zip(frames, timestamps):
            if speed > 0 and prev_t is not None and t is not None:
                delay = (t - prev_t) / 1000.0 / speed
                if delay > 0:
                    await asyncio.sleep(delay)
            if t is not None:
                prev_t = t
            await ws.send(json.dumps(frame, ensure_ascii=False))
            if errors:
                break
        await asyncio.sleep(0.2)
        reader.cancel()
    return errors


def cmd_replay(args) -> int:
    try:
        log = _read_log(Path(args.path))
    except (SessionLogError, OSError) as exc:
        print(f"error: {args.path}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    frames = stream_log_frames(log, token=args.token)
    timestamps = [None] + [e.timestamp_ms for e in log.events]
    try:
        errors = asyncio.run(_replay_frames(frames, args.server, args.speed, timestamps))
    except (OSError, RuntimeError) as exc:
        print(f"error: connection to {args.server} failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if errors:
        first = errors[0]["payload"]
        print(f"error: server rejected frame: {first.get('code')}: "
              f"{first.get('message')}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"streamed {len(frames)} frames from {log.session_id} to {args.server}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    try:
        config = (ServerConfig.from_file(args.config) if args.config
                  else ServerConfig())
        config = ServerConfig.from_env(config)
        if args.host:
            config.host = args.host
        if args.port is not None:
            config.port = args.port
        if args.journal_dir:
            config.journal_dir = args.journal_dir
        if args.theta is not None:
            config.provenance.similarity_threshold = args.theta
            config.provenance.__post_init__()
    except (ValueError, OSError) as exc:
        print(f"error: bad server config: {exc}", file=sys.stderr)
        return EXIT_INPUT
    app = create_app(config, SessionHub(config))
    try:
        uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
    except OSError as exc:
        print(f"error: cannot bind {config.host}:{config.port}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edittrace",
        description="Coding-session provenance analysis and live monitoring")
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="compute provenance metrics for logs")
    analyze.add_argument("paths", nargs="+", help="session log files or directories")
    analyze.add_argument("--out", help="output file (default stdout)")
    analyze.add_argument("--format", choices=("json", "csv"), default="json")
    analyze.add_argument("--aggregate", action="store_true",
                         help="append an aggregate row over all sessions")
    analyze.add_argument("--config", help="provenance config file (json or toml)")
    analyze.add_argument("--theta", type=float,
                         help="override the similarity threshold")
    analyze.set_defaults(fn=cmd_analyze)

    validate = sub.add_parser("validate", help="parse and fully replay one log")
    validate.add_argument("path")
    validate.set_defaults(fn=cmd_validate)

    export = sub.add_parser("export-timeline", help="write the timeline model JSON")
    export.add_argument("path")
    export.add_argument("--out", help="output file (default stdout)")
    export.add_argument("--file-path", dest="file_path",
                        help="which file of the session (default: first)")
    export.add_argument("--config", help="provenance config file (json or toml)")
    export.add_argument("--theta", type=float)
    export.set_defaults(fn=cmd_export_timeline)

    replay = sub.add_parser("replay", help="stream a recorded log to a live server")
    replay.add_argument("path")
    replay.add_argument("--server", default="ws://127.0.0.1:8787/stream",
                        help="server stream URL")
    replay.add_argument("--speed", type=float, default=1.0,
                        help="time multiplier; 0 streams as fast as possible")
    replay.add_argument("--token", help="student auth token")
    replay.set_defaults(fn=cmd_replay)

    serve = sub.add_parser("serve", help="run the monitor server")
    serve.add_argument("--config", help="server config file (json)")
    serve.add_argument("--host")
    serve.add_argument("--port", type=int)
    serve.add_argument("--journal-dir", dest="journal_dir")
    serve.add_argument("--theta", type=float)
    serve.set_defaults(fn=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "speed", None) is not None and args.speed < 0:
        print("error: --speed must be >= 0", file=sys.stderr)
        return EXIT_INPUT
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
