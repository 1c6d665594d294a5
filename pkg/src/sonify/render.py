"""Headless offline rendering: session config -> 16-bit stereo WAV + event log.

The offline path is the live render loop clocked by frame count instead of
wall time, so its output is byte-reproducible.
"""

from __future__ import annotations

import json
import math
import wave
from dataclasses import dataclass, replace

import numpy as np

from .engine import RenderEngine
from .mapping import TransportState
from .session import Session


@dataclass
class RenderSummary:
    frames: int
    triggers: int
    peak: float
    duration: float


def render_session(session: Session, duration: float | None = None) -> tuple[np.ndarray, list[dict], RenderSummary]:
    """Render a session from row 0 to the end of its dataset.

    Returns (stereo float audio, trigger events, summary). `duration`
    truncates the render; rendering always stops at the dataset end.
    """
    if session.dataset is None:
        raise ValueError("session has no dataset")
    playing = replace(
        session, transport=replace(session.transport, state=TransportState.PLAYING, cursor=0.0)
    )
    engine = RenderEngine(playing)
    frame_cap = math.inf if duration is None else math.ceil(duration * session.sample_rate)
    blocks: list[np.ndarray] = []
    events: list[dict] = []
    while engine.playing and engine.frame < frame_cap:
        blocks.append(engine.render_block())
        events.extend(engine.drain_triggers())
    audio = np.vstack(blocks) if blocks else np.zeros((0, 2))
    peak = float(np.abs(audio).max()) if len(audio) else 0.0
    summary = RenderSummary(
        frames=len(audio),
        triggers=len(events),
        peak=peak,
        duration=len(audio) / session.sample_rate,
    )
    return audio, events, summary


def to_int16(audio: np.ndarray) -> np.ndarray:
    """Hard-clip and quantize to 16-bit PCM (no dither, for bit-exact output)."""
    clipped = np.clip(audio, -1.0, 1.0)
    return (np.round(clipped * 32767.0)).astype(np.int16)


def write_wav(path: str, audio: np.ndarray, sample_rate: int) -> None:
    pcm = to_int16(audio)
    with wave.open(path, "wb") as wf:
        wf.setnchannels(2)
        wf.setsampwidth(2)
        wf.setframerate(sample_rate)
        wf.writeframes(pcm.tobytes())


def read_wav(path: str) -> tuple[np.ndarray, int]:
    """Read a 16-bit WAV back into float stereo in [-1, 1]."""
    with wave.open(path, "rb") as wf:
        rate = wf.getframerate()
        channels = wf.getnchannels()
        raw = wf.readframes(wf.getnframes())
    data = np.frombuffer(raw, dtype=np.int16).reshape(-1, channels) / 32767.0
    return data, rate


def write_event_log(path: str, events: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for event in events:
            fh.write(json.dumps(event, sort_keys=True) + "\n")
