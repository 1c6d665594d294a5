"""Wire protocol between the engine host and UI clients.

Text frames carry JSON control messages (one object per frame, with a
`type` tag). Binary frames carry audio: an 8-byte little-endian start
frame index followed by interleaved little-endian 16-bit stereo PCM.
"""

from __future__ import annotations

import json
import struct

import numpy as np


class ProtocolError(Exception):
    """Malformed or schema-violating message frame."""


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _check_track(payload):
    if not isinstance(payload.get("track"), str):
        raise ProtocolError("'track' must be a string")


def _check_source(payload):
    src = payload.get("source")
    if not isinstance(src, dict) or src.get("type") not in ("oscillator", "sample"):
        raise ProtocolError("'source' must be an oscillator or sample object")


def _check_mapping(payload):
    _check_track(payload)
    if payload.get("target") not in ("frequency", "amplitude", "mod_index"):
        raise ProtocolError("'target' must be frequency, amplitude, or mod_index")
    if "mapping" in payload and payload["mapping"] is not None and not isinstance(payload["mapping"], dict):
        raise ProtocolError("'mapping' must be an object or null")


def _check_envelope(payload):
    _check_track(payload)
    env = payload.get("envelope")
    if not isinstance(env, dict):
        raise ProtocolError("'envelope' must be an object")
    for key, v in env.items():
        if key not in ("attack", "decay", "sustain", "release") or not _is_num(v):
            raise ProtocolError(f"bad envelope field {key!r}")


def _check_rule(payload):
    _check_track(payload)
    rule = payload.get("rule")
    if not isinstance(rule, dict) or not _is_num(rule.get("threshold")) or not _is_num(rule.get("increment")):
        raise ProtocolError("'rule' needs numeric threshold and increment")


def _check_link(payload):
    if not isinstance(payload.get("modulator"), str) or not isinstance(payload.get("carrier"), str):
        raise ProtocolError("FM link needs 'modulator' and 'carrier' track ids")


def _check_speaker(payload):
    _check_track(payload)
    if not _is_num(payload.get("x")) or not -1.0 <= payload["x"] <= 1.0:
        raise ProtocolError("'x' must be a number in [-1, 1]")


def _check_interleave(payload):
    if not isinstance(payload.get("enabled"), bool):
        raise ProtocolError("'enabled' must be a boolean")
    tracks = payload.get("tracks", [])
    if not isinstance(tracks, list) or not all(isinstance(t, str) for t in tracks):
        raise ProtocolError("'tracks' must be a list of track ids")


CLIENT_VALIDATORS = {
    "load_dataset": lambda p: isinstance(p.get("path"), str) or _fail("'path' must be a string"),
    "set_normalization": lambda p: p.get("method") in ("minmax", "zscore") or _fail("unknown method"),
    "play": lambda p: True,
    "stop": lambda p: True,
    "reset": lambda p: True,
    "set_rate": lambda p: (_is_num(p.get("rate")) and p["rate"] > 0) or _fail("'rate' must be > 0"),
    "mute": lambda p: (_check_track(p), isinstance(p.get("muted"), bool) or _fail("'muted' must be a boolean")),
    "set_source": lambda p: (_check_track(p), _check_source(p)),
    "set_mapping": _check_mapping,
    "set_envelope": _check_envelope,
    "set_mode": lambda p: (_check_track(p), p.get("mode") in ("continuous", "discrete") or _fail("unknown mode")),
    "set_discrete_rule": _check_rule,
    "add_fm_link": _check_link,
    "remove_fm_link": _check_link,
    "move_speaker": _check_speaker,
    "set_interleave": _check_interleave,
}

SERVER_VALIDATORS = {
    "state_snapshot": lambda p: isinstance(p.get("state"), dict) or _fail("'state' must be an object"),
    "cursor_update": lambda p: _is_num(p.get("cursor")) or _fail("'cursor' must be a number"),
    "trigger_event": lambda p: all(_is_num(p.get(k)) for k in ("time", "row", "value"))
    and isinstance(p.get("track"), str)
    or _fail("trigger_event needs time/track/row/value"),
    "error": lambda p: isinstance(p.get("message"), str) or _fail("'message' must be a string"),
    "level_meters": lambda p: isinstance(p.get("tracks"), dict) and _is_num(p.get("master"))
    or _fail("level_meters needs 'master' and 'tracks'"),
}

MESSAGE_TYPES = set(CLIENT_VALIDATORS) | set(SERVER_VALIDATORS)


def _fail(msg: str):
    raise ProtocolError(msg)


def validate_message(msg: dict) -> dict:
    if not isinstance(msg, dict):
        raise ProtocolError("message must be a JSON object")
    mtype = msg.get("type")
    validator = CLIENT_VALIDATORS.get(mtype) or SERVER_VALIDATORS.get(mtype)
    if validator is None:
        raise ProtocolError(f"unknown message type {mtype!r}")
    validator(msg)
    return msg


def serialize(msg: dict) -> str:
    return json.dumps(validate_message(msg), sort_keys=True, allow_nan=False)


def parse(frame: str) -> dict:
    try:
        msg = json.loads(frame)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"invalid JSON: {exc}") from None
    return validate_message(msg)


# -- binary audio frames -----------------------------------------------------

AUDIO_HEADER = struct.Struct("<Q")


def pack_audio_chunk(start_frame: int, pcm: np.ndarray) -> bytes:
    """start_frame header + interleaved stereo int16 little-endian payload."""
    if pcm.dtype != np.int16:
        raise ValueError("audio chunks carry int16 PCM")
    return AUDIO_HEADER.pack(start_frame) + pcm.astype("<i2").tobytes()


def unpack_audio_chunk(frame: bytes) -> tuple[int, np.ndarray]:
    if len(frame) < AUDIO_HEADER.size or (len(frame) - AUDIO_HEADER.size) % 4 != 0:
        raise ProtocolError("malformed audio frame")
    (start,) = AUDIO_HEADER.unpack_from(frame)
    pcm = np.frombuffer(frame, dtype="<i2", offset=AUDIO_HEADER.size).reshape(-1, 2)
    return start, pcm
