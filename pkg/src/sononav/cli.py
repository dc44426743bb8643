"""Command line interface.

Subcommands:
  run     step a scripted scenario through the engine; writes the session
          log, a metrics summary, and optionally an offline audio render
  replay  re-run a recorded session and render it to WAV; verifies that
          the engine reproduces the original phase/event stream
  serve   live engine: OSC pose ingress over UDP, state-stream bridge for
          the steering client, optional OSC egress / static UI hosting
  report  summarize one or more session logs as a per-target table + CSV
"""

from __future__ import annotations

import argparse
import asyncio
import functools
import http.server
import logging
import signal
import sys
import threading
from pathlib import Path

from .bridge import EngineServer
from .config import load_config
from .engine import phase_event_trace, replay_session
from .session import read_session, write_session
from .simulate import (
    load_scenario,
    metrics_from_log,
    report,
    run_scenario,
)
from .synth import WavFileSink, offline_render, write_wav

log = logging.getLogger("sononav")


def _add_config_arg(parser):
    parser.add_argument("--config", metavar="YAML",
                        help="engine configuration file (defaults shipped)")


def _render_wav(session_log, config, path, sample_format):
    block, _ = offline_render(session_log, config.synth, config.mapping)
    write_wav(path, block, sample_format)
    log.info("wrote %s (%.2f s of audio)", path, block.duration_s)


def cmd_run(args) -> int:
    config = load_config(args.config)
    scenario = load_scenario(args.scenario)
    session_log, metrics = run_scenario(scenario, config)

    log_path = args.log or str(
        Path(config.network.log_dir) / f"{scenario.name}.session.jsonl")
    write_session(log_path, session_log)
    log.info("wrote %s (%d records)", log_path, len(session_log.records))

    text, csv_text = report(metrics)
    sys.stdout.write(text)
    if args.metrics:
        Path(args.metrics).write_text(csv_text)
        log.info("wrote %s", args.metrics)
    if args.wav:
        _render_wav(session_log, config, args.wav, args.wav_format)
    return 0


def cmd_replay(args) -> int:
    session_log = read_session(args.session)
    config = load_config(args.config)
    replayed = replay_session(session_log, config if args.config else None)
    matches = phase_event_trace(replayed) == phase_event_trace(session_log)
    print(f"replay: {len(session_log.records)} records, "
          f"{'trace reproduced' if matches else 'TRACE MISMATCH'}")
    if args.wav:
        _render_wav(replayed, config, args.wav, args.wav_format)
    if args.check and not matches:
        return 1
    return 0


def _serve_static(directory: str, port: int) -> threading.Thread:
    handler = functools.partial(http.server.SimpleHTTPRequestHandler,
                                directory=directory)
    httpd = http.server.ThreadingHTTPServer(("127.0.0.1", port), handler)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    log.info("serving UI from %s at http://127.0.0.1:%d", directory, port)
    return thread


def cmd_serve(args) -> int:
    config = load_config(args.config)
    if args.scenario:
        plan = load_scenario(args.scenario).plan
    else:
        from .simulate import demo_scenario
        plan = demo_scenario().plan
        log.info("no scenario given: serving the demo plan")
    if args.static_dir:
        _serve_static(args.static_dir, args.http_port)

    sink = None
    if args.wav:
        sink = WavFileSink(args.wav, config.synth.sample_rate_hz, args.wav_format)

    async def main_async():
        server = EngineServer(plan, config, audio_sink=sink)
        osc_port, bridge_port = await server.start()
        print(f"OSC ingress  udp://{config.network.osc_host}:{osc_port}")
        print(f"state stream ws://{config.network.bridge_host}:{bridge_port}")
        stop = asyncio.Event()
        loop = asyncio.get_running_loop()
        for sig in (signal.SIGINT, signal.SIGTERM):
            loop.add_signal_handler(sig, stop.set)
        try:
            await stop.wait()
        finally:
            await server.stop()
        return server.session_log()

    session_log = asyncio.run(main_async())
    if args.log and session_log.records:
        write_session(args.log, session_log)
        log.info("wrote %s (%d records)", args.log, len(session_log.records))
    return 0


def cmd_summarize(args) -> int:
    import csv

    from .stats import summarize

    with open(args.csv, newline="") as fh:
        rows = []
        for raw in csv.DictReader(fh):
            row = {}
            for key, value in raw.items():
                try:
                    row[key] = float(value)
                except (TypeError, ValueError):
                    row[key] = value
            rows.append(row)
    pairs = [tuple(p.split(":", 1)) for p in args.pairs or []]
    table = summarize(rows, args.group_by, args.values, pairs,
                      exclude_key=args.exclude)
    sys.stdout.write(table.to_text())
    if args.out:
        Path(args.out).write_text(table.to_csv())
        log.info("wrote %s", args.out)
    return 0


def cmd_report(args) -> int:
    config = load_config(args.config)
    rows = []
    labels = []
    for path in args.sessions:
        session_log = read_session(path)
        metrics = metrics_from_log(session_log, config)
        rows.extend(metrics)
        if args.group_by == "file":
            labels.extend([Path(path).stem] * len(metrics))
        else:
            labels.extend([m.target_label for m in metrics])
    text, csv_text = report(rows, labels)
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(csv_text)
        log.info("wrote %s", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sononav",
        description="4-DOF auditory alignment engine: simulate, replay, serve.")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scripted scenario")
    run_p.add_argument("scenario", help="scenario YAML file")
    _add_config_arg(run_p)
    run_p.add_argument("--log", help="session log path (.jsonl)")
    run_p.add_argument("--metrics", help="metrics CSV output path")
    run_p.add_argument("--wav", help="offline audio render output path")
    run_p.add_argument("--wav-format", choices=("float32", "pcm16"),
                       default="float32")
    run_p.set_defaults(func=cmd_run)

    replay_p = sub.add_parser("replay", help="re-run a recorded session")
    replay_p.add_argument("session", help="session log (.jsonl)")
    _add_config_arg(replay_p)
    replay_p.add_argument("--wav", help="audio render output path")
    replay_p.add_argument("--wav-format", choices=("float32", "pcm16"),
                          default="float32")
    replay_p.add_argument("--check", action="store_true",
                          help="exit nonzero when the trace is not reproduced")
    replay_p.set_defaults(func=cmd_replay)

    serve_p = sub.add_parser("serve", help="live engine with network ingress")
    _add_config_arg(serve_p)
    serve_p.add_argument("--scenario", help="scenario YAML supplying the plan")
    serve_p.add_argument("--log", help="write the session on shutdown")
    serve_p.add_argument("--wav", help="render the session on shutdown")
    serve_p.add_argument("--wav-format", choices=("float32", "pcm16"),
                         default="float32")
    serve_p.add_argument("--static-dir", help="serve the steering UI from here")
    serve_p.add_argument("--http-port", type=int, default=8000)
    serve_p.set_defaults(func=cmd_serve)

    report_p = sub.add_parser("report", help="summarize session logs")
    report_p.add_argument("sessions", nargs="+", help="session logs (.jsonl)")
    _add_config_arg(report_p)
    report_p.add_argument("--out", help="CSV output path")
    report_p.add_argument("--group-by", choices=("target", "file"),
                          default="target")
    report_p.set_defaults(func=cmd_report)

    sum_p = sub.add_parser(
        "summarize", help="grouped mean/sd table from a measurement CSV")
    sum_p.add_argument("csv", help="input CSV with one row per measurement")
    sum_p.add_argument("--group-by", nargs="+", required=True,
                       metavar="COLUMN")
    sum_p.add_argument("--values", nargs="+", required=True, metavar="COLUMN")
    sum_p.add_argument("--pairs", nargs="*", metavar="A:B",
                       help="add row-wise difference columns A minus B")
    sum_p.add_argument("--exclude", metavar="COLUMN",
                       help="drop rows where this flag column is truthy")
    sum_p.add_argument("--out", help="CSV output path")
    sum_p.set_defaults(func=cmd_summarize)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
