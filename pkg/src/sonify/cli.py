"""Command-line interface.

`sonify render <config> -o out.wav [--log events.jsonl] [--duration s]
[--sample-rate hz]` renders a session config to a WAV file;
`sonify analyze <wav> [--window n]` prints FFT peaks per window.

Exit codes: 0 ok, 2 config error, 3 dataset error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
import wave
from dataclasses import replace

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATASET = 3
EXIT_IO = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sonify", description="Data sonification renderer")
    sub = parser.add_subparsers(dest="command", required=True)

    render = sub.add_parser("render", help="render a session config to a WAV file")
    render.add_argument("config", help="session config JSON path")
    render.add_argument("-o", "--output", required=True, help="output WAV path")
    render.add_argument("--log", help="write discrete trigger events as JSON lines")
    render.add_argument("--duration", type=float, help="truncate the render after this many seconds")
    render.add_argument("--sample-rate", type=int, help="override the session sample rate")

    analyze = sub.add_parser("analyze", help="print spectral peaks of a WAV file")
    analyze.add_argument("wav", help="input WAV path")
    analyze.add_argument("--window", type=int, default=8192, help="FFT window size in frames")
    return parser


def cmd_render(args) -> int:
    import os

    from .render import render_session, write_event_log, write_wav
    from .session import ValidationError, session_from_dict
    from .data import DatasetError

    try:
        with open(args.config, encoding="utf-8") as fh:
            config = json.load(fh)
    except (FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        session = session_from_dict(config, base_dir=os.path.dirname(os.path.abspath(args.config)))
    except (DatasetError, FileNotFoundError) as exc:
        print(f"dataset error: {exc}", file=sys.stderr)
        return EXIT_DATASET
    except ValidationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.sample_rate:
        session = replace(session, sample_rate=args.sample_rate)
    if session.dataset is None:
        print("dataset error: config names no dataset", file=sys.stderr)
        return EXIT_DATASET
    audio, events, summary = render_session(session, duration=args.duration)
    try:
        write_wav(args.output, audio, session.sample_rate)
        if args.log:
            write_event_log(args.log, events)
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(
        f"wrote {summary.frames} frames ({summary.duration:.3f} s) to {args.output}; "
        f"{summary.triggers} triggers; peak {summary.peak:.4f}"
    )
    return EXIT_OK


def cmd_analyze(args) -> int:
    from .analysis import analyze
    from .render import read_wav

    try:
        audio, rate = read_wav(args.wav)
    except FileNotFoundError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (wave.Error, ValueError, EOFError) as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_IO
    for report in analyze(audio, rate, window=args.window):
        peaks = ", ".join(f"{p.frequency:.1f} Hz @ {p.magnitude_db:.1f} dB" for p in report.peaks)
        print(f"window @ frame {report.start_frame}: {peaks or 'no peaks above -90 dBFS'}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "render":
        return cmd_render(args)
    return cmd_analyze(args)


if __name__ == "__main__":
    sys.exit(main())
