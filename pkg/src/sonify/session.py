"""Session state: track configurations, FM links, and control updates.

A Session is an immutable snapshot of everything the renderer needs. All
mutation flows through apply_update, which returns a new snapshot (or
raises ValidationError leaving the old one untouched) so the render loop
never observes a partially-applied change.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

from .data import Dataset, NormalizationMethod, load_dataset
from .mapping import (
    DiscreteRule,
    FrequencyMapping,
    ModIndexMapping,
    Transport,
    TransportState,
)
from .synth import (
    CONTINUOUS_ENVELOPE,
    DEFAULT_BLOCK_SIZE,
    DEFAULT_SAMPLE_RATE,
    DISCRETE_ENVELOPE,
    Envelope,
    OscillatorKind,
)


class ValidationError(Exception):
    """A control update or session config is invalid; state is unchanged."""


@dataclass(frozen=True)
class OscillatorSource:
    kind: OscillatorKind = OscillatorKind.SINE
    frequency: float = 440.0
    amplitude: float = 0.5

    def __post_init__(self):
        if self.frequency <= 0:
            raise ValidationError("oscillator frequency must be > 0")
        if not 0.0 <= self.amplitude <= 1.0:
            raise ValidationError("oscillator amplitude must be in [0, 1]")


@dataclass(frozen=True)
class SampleSource:
    file: str
    speed: float = 1.0
    amplitude: float = 1.0

    def __post_init__(self):
        if self.speed <= 0:
            raise ValidationError("sample speed must be > 0")
        if not 0.0 <= self.amplitude <= 1.0:
            raise ValidationError("sample amplitude must be in [0, 1]")


@dataclass(frozen=True)
class Modulator:
    """In-track FM modulator oscillator (carrier/modulator pair on one track)."""

    kind: OscillatorKind = OscillatorKind.SINE
    frequency: float = 440.0

    def __post_init__(self):
        if self.frequency <= 0:
            raise ValidationError("modulator frequency must be > 0")


@dataclass(frozen=True)
class FMLink:
    """Directed modulator -> carrier edge between two tracks' oscillators."""

    modulator: str
    carrier: str

    def __post_init__(self):
        if self.modulator == self.carrier:
            raise ValidationError("a track may not modulate itself")


@dataclass(frozen=True)
class TrackConfig:
    track_id: str
    series: str
    source: OscillatorSource | SampleSource = OscillatorSource()
    mode: str = "continuous"  # "continuous" | "discrete"
    frequency_mapping: FrequencyMapping | None = None
    amplitude_mapped: bool = False
    mod_index_mapping: ModIndexMapping | None = None
    modulator: Modulator | None = None
    envelope: Envelope = CONTINUOUS_ENVELOPE
    envelope_edited: bool = False
    pan: float = 0.0
    muted: bool = False
    discrete: DiscreteRule | None = None

    def __post_init__(self):
        if self.mode not in ("continuous", "discrete"):
            raise ValidationError(f"unknown mode {self.mode!r}")
        if not -1.0 <= self.pan <= 1.0:
            raise ValidationError("pan must be in [-1, 1]")


DEFAULT_FREQUENCY_MAPPING = FrequencyMapping(f_min=261.6, f_range=600.0)


@dataclass(frozen=True)
class Session:
    dataset: Dataset | None = None
    dataset_path: str | None = None
    normalization: NormalizationMethod = NormalizationMethod.MIN_MAX
    sample_rate: int = DEFAULT_SAMPLE_RATE
    block_size: int = DEFAULT_BLOCK_SIZE
    transport: Transport = Transport()
    tracks: tuple[TrackConfig, ...] = ()
    fm_links: tuple[FMLink, ...] = ()

    def track(self, track_id: str) -> TrackConfig:
        for t in self.tracks:
            if t.track_id == track_id:
                return t
        raise ValidationError(f"unknown track {track_id!r}")

    def with_track(self, updated: TrackConfig) -> "Session":
        tracks = tuple(updated if t.track_id == updated.track_id else t for t in self.tracks)
        return replace(self, tracks=tracks)


def validate_fm_links(tracks: tuple[TrackConfig, ...], links: tuple[FMLink, ...]) -> None:
    """Check the FM link graph: resolvable ids, oscillator ends, no dupes, a DAG."""
    by_id = {t.track_id: t for t in tracks}
    seen = set()
    for link in links:
        for end in (link.modulator, link.carrier):
            if end not in by_id:
                raise ValidationError(f"FM link references unknown track {end!r}")
            if not isinstance(by_id[end].source, OscillatorSource):
                raise ValidationError(f"FM links require oscillator sources; {end!r} is a sample")
        key = (link.modulator, link.carrier)
        if key in seen:
            raise ValidationError(f"duplicate FM link {key}")
        seen.add(key)
    # cycle check via DFS
    edges: dict[str, list[str]] = {}
    for link in links:
        edges.setdefault(link.modulator, []).append(link.carrier)
    state: dict[str, int] = {}  # 1 = in progress, 2 = done

    def visit(node: str) -> None:
        state[node] = 1
        for nxt in edges.get(node, ()):
            mark = state.get(nxt)
            if mark == 1:
                raise ValidationError("FM links form a cycle")
            if mark is None:
                visit(nxt)
        state[node] = 2

    for node in list(edges):
        if node not in state:
            visit(node)


def fm_topo_order(tracks: tuple[TrackConfig, ...], links: tuple[FMLink, ...]) -> list[str]:
    """Track ids ordered so every modulator precedes its carriers."""
    order: list[str] = []
    incoming: dict[str, set[str]] = {t.track_id: set() for t in tracks}
    for link in links:
        incoming[link.carrier].add(link.modulator)
    pending = [t.track_id for t in tracks]
    while pending:
        ready = [tid for tid in pending if not (incoming[tid] - set(order))]
        if not ready:
            raise ValidationError("FM links form a cycle")
        order.extend(ready)
        pending = [tid for tid in pending if tid not in ready]
    return order


def validate_session(session: Session) -> None:
    if session.sample_rate <= 0 or session.block_size <= 0:
        raise ValidationError("sample_rate and block_size must be > 0")
    ids = [t.track_id for t in session.tracks]
    if len(set(ids)) != len(ids):
        raise ValidationError("duplicate track ids")
    if session.dataset is not None:
        names = set(session.dataset.names)
        for t in session.tracks:
            if t.series not in names:
                raise ValidationError(f"track {t.track_id!r} references unknown series {t.series!r}")
    validate_fm_links(session.tracks, session.fm_links)
    for tid in session.transport.interleave_set:
        session.track(tid)
    if session.transport.interleave_enabled and not session.transport.interleave_set:
        raise ValidationError("interleave enabled with empty track set")


def default_tracks(dataset: Dataset) -> tuple[TrackConfig, ...]:
    """One continuous frequency-mapped sine track per data attribute."""
    return tuple(
        TrackConfig(
            track_id=f"t{i}",
            series=s.name,
            source=OscillatorSource(),
            frequency_mapping=DEFAULT_FREQUENCY_MAPPING,
        )
        for i, s in enumerate(dataset.series)
    )


# ---------------------------------------------------------------------------
# JSON (de)serialization -- session config files and state_snapshot payloads
# ---------------------------------------------------------------------------


def source_to_dict(source: OscillatorSource | SampleSource) -> dict:
    if isinstance(source, OscillatorSource):
        return {
            "type": "oscillator",
            "kind": source.kind.value,
            "frequency": source.frequency,
            "amplitude": source.amplitude,
        }
    return {"type": "sample", "file": source.file, "speed": source.speed, "amplitude": source.amplitude}


def source_from_dict(d: dict) -> OscillatorSource | SampleSource:
    try:
        kind = d["type"]
    except (KeyError, TypeError):
        raise ValidationError("source must be an object with a 'type' field") from None
    try:
        if kind == "oscillator":
            return OscillatorSource(
                kind=OscillatorKind(d.get("kind", "sine")),
                frequency=float(d.get("frequency", 440.0)),
                amplitude=float(d.get("amplitude", 0.5)),
            )
        if kind == "sample":
            return SampleSource(
                file=str(d["file"]),
                speed=float(d.get("speed", 1.0)),
                amplitude=float(d.get("amplitude", 1.0)),
            )
    except (ValueError, KeyError) as exc:
        raise ValidationError(f"bad source: {exc}") from None
    raise ValidationError(f"unknown source type {kind!r}")


def track_to_dict(t: TrackConfig) -> dict:
    mappings: dict = {}
    if t.frequency_mapping is not None:
        mappings["frequency"] = {"min": t.frequency_mapping.f_min, "range": t.frequency_mapping.f_range}
    if t.amplitude_mapped:
        mappings["amplitude"] = True
    if t.mod_index_mapping is not None:
        mappings["mod_index"] = {"min": t.mod_index_mapping.i_min, "range": t.mod_index_mapping.i_range}
    d = {
        "id": t.track_id,
        "series": t.series,
        "source": source_to_dict(t.source),
        "mode": t.mode,
        "mappings": mappings,
        "envelope": {
            "attack": t.envelope.attack,
            "decay": t.envelope.decay,
            "sustain": t.envelope.sustain,
            "release": t.envelope.release,
        },
        "envelope_edited": t.envelope_edited,
        "pan": t.pan,
        "muted": t.muted,
    }
    if t.modulator is not None:
        d["modulator"] = {"kind": t.modulator.kind.value, "frequency": t.modulator.frequency}
    if t.discrete is not None:
        d["discrete"] = {"threshold": t.discrete.threshold, "increment": t.discrete.increment}
    return d


def track_from_dict(d: dict) -> TrackConfig:
    try:
        mappings = d.get("mappings", {})
        freq = mappings.get("frequency")
        mod_index = mappings.get("mod_index")
        env = d.get("envelope", {})
        mode = d.get("mode", "continuous")
        default_env = DISCRETE_ENVELOPE if mode == "discrete" else CONTINUOUS_ENVELOPE
        modul = d.get("modulator")
        disc = d.get("discrete")
        return TrackConfig(
            track_id=str(d["id"]),
            series=str(d["series"]),
            source=source_from_dict(d.get("source", {"type": "oscillator"})),
            mode=mode,
            frequency_mapping=(
                FrequencyMapping(f_min=float(freq["min"]), f_range=float(freq.get("range", 0.0)))
                if freq
                else None
            ),
            amplitude_mapped=bool(mappings.get("amplitude", False)),
            mod_index_mapping=(
                ModIndexMapping(i_min=float(mod_index.get("min", 0.0)), i_range=float(mod_index.get("range", 5.0)))
                if mod_index
                else None
            ),
            modulator=(
                Modulator(kind=OscillatorKind(modul.get("kind", "sine")), frequency=float(modul["frequency"]))
                if modul
                else None
            ),
            envelope=Envelope(
                attack=float(env.get("attack", default_env.attack)),
                decay=float(env.get("decay", default_env.decay)),
                sustain=float(env.get("sustain", default_env.sustain)),
                release=float(env.get("release", default_env.release)),
            ),
            envelope_edited=bool(d.get("envelope_edited", bool(env))),
            pan=float(d.get("pan", 0.0)),
            muted=bool(d.get("muted", False)),
            discrete=(
                DiscreteRule(threshold=float(disc["threshold"]), increment=float(disc["increment"]))
                if disc
                else None
            ),
        )
    except ValidationError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"bad track config: {exc}") from None


def session_to_dict(session: Session, include_data: bool = False) -> dict:
    d = {
        "dataset": session.dataset_path,
        "normalization": session.normalization.value,
        "sample_rate": session.sample_rate,
        "block_size": session.block_size,
        "rate": session.transport.rate,
        "transport_state": session.transport.state.value,
        "cursor": session.transport.cursor,
        "interleave": {
            "enabled": session.transport.interleave_enabled,
            "tracks": list(session.transport.interleave_set),
        },
        "tracks": [track_to_dict(t) for t in session.tracks],
        "fm_links": [{"modulator": l.modulator, "carrier": l.carrier} for l in session.fm_links],
    }
    if include_data and session.dataset is not None:
        d["data"] = {
            "name": session.dataset.name,
            "length": session.dataset.length,
            "series": [
                {
                    "name": s.name,
                    "color": list(s.color),
                    "min": s.min,
                    "max": s.max,
                    "values": s.values.tolist(),
                }
                for s in session.dataset.series
            ],
        }
    return d


def session_from_dict(d: dict, base_dir: str = ".", load_data: bool = True) -> Session:
    """Build a Session from a config dict (see docs/session-config.md)."""
    import os

    try:
        dataset = None
        dataset_path = d.get("dataset")
        if dataset_path and load_data:
            resolved = dataset_path if os.path.isabs(dataset_path) else os.path.join(base_dir, dataset_path)
            dataset = load_dataset(resolved)
        interleave = d.get("interleave", {})
        transport = Transport(
            rate=float(d.get("rate", 0.2)),
            cursor=float(d.get("cursor", 0.0)),
            state=TransportState(d.get("transport_state", "stopped")),
            interleave_enabled=bool(interleave.get("enabled", False)),
            interleave_set=tuple(interleave.get("tracks", ())),
        )
        session = Session(
            dataset=dataset,
            dataset_path=dataset_path,
            normalization=NormalizationMethod(d.get("normalization", "minmax")),
            sample_rate=int(d.get("sample_rate", DEFAULT_SAMPLE_RATE)),
            block_size=int(d.get("block_size", DEFAULT_BLOCK_SIZE)),
            transport=transport,
            tracks=tuple(track_from_dict(td) for td in d.get("tracks", ())),
            fm_links=tuple(
                FMLink(modulator=str(ld["modulator"]), carrier=str(ld["carrier"]))
                for ld in d.get("fm_links", ())
            ),
        )
    except ValidationError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"bad session config: {exc}") from None
    validate_session(session)
    return session


def load_session(path: str) -> Session:
    import os

    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    return session_from_dict(d, base_dir=os.path.dirname(os.path.abspath(path)))


# ---------------------------------------------------------------------------
# Control updates
# ---------------------------------------------------------------------------


def _require(payload: dict, key: str):
    if key not in payload:
        raise ValidationError(f"missing field {key!r}")
    return payload[key]


def apply_update(session: Session, msg: dict) -> Session:
    """Apply one validated control message, returning a new Session snapshot.

    Raises ValidationError (unknown track, out-of-range value, FM cycle,
    malformed payload) without touching the input.
    """
    if not isinstance(msg, dict) or "type" not in msg:
        raise ValidationError("message must be an object with a 'type' field")
    mtype = msg["type"]
    t = session.transport
    try:
        if mtype == "load_dataset":
            path = str(_require(msg, "path"))
            try:
                dataset = load_dataset(path)
            except Exception as exc:
                raise ValidationError(f"cannot load dataset: {exc}") from None
            new = replace(
                session,
                dataset=dataset,
                dataset_path=path,
                tracks=default_tracks(dataset),
                fm_links=(),
                transport=Transport(rate=t.rate),
            )
        elif mtype == "set_normalization":
            method = NormalizationMethod(str(_require(msg, "method")))
            new = replace(session, normalization=method)
        elif mtype == "play":
            if session.dataset is None:
                raise ValidationError("no dataset loaded")
            cursor = t.cursor if t.cursor < session.dataset.length else 0.0
            new = replace(session, transport=replace(t, state=TransportState.PLAYING, cursor=cursor))
        elif mtype == "stop":
            new = replace(session, transport=replace(t, state=TransportState.STOPPED))
        elif mtype == "reset":
            new = replace(session, transport=t.reset())
        elif mtype == "set_rate":
            rate = float(_require(msg, "rate"))
            if rate <= 0:
                raise ValidationError("rate must be > 0")
            new = replace(session, transport=replace(t, rate=rate))
        elif mtype == "mute":
            track = session.track(str(_require(msg, "track")))
            new = session.with_track(replace(track, muted=bool(_require(msg, "muted"))))
        elif mtype == "set_source":
            track = session.track(str(_require(msg, "track")))
            source = source_from_dict(_require(msg, "source"))
            if isinstance(source, SampleSource):
                involved = {l.modulator for l in session.fm_links} | {l.carrier for l in session.fm_links}
                if track.track_id in involved:
                    raise ValidationError("FM-linked tracks require oscillator sources")
            new = session.with_track(replace(track, source=source))
        elif mtype == "set_mapping":
            track = session.track(str(_require(msg, "track")))
            target = str(_require(msg, "target"))
            if target == "frequency":
                mapping = msg.get("mapping")
                fm = (
                    FrequencyMapping(f_min=float(mapping["min"]), f_range=float(mapping.get("range", 0.0)))
                    if mapping
                    else None
                )
                new = session.with_track(replace(track, frequency_mapping=fm))
            elif target == "amplitude":
                new = session.with_track(replace(track, amplitude_mapped=bool(msg.get("enabled", True))))
            elif target == "mod_index":
                mapping = msg.get("mapping")
                mm = (
                    ModIndexMapping(i_min=float(mapping.get("min", 0.0)), i_range=float(mapping.get("range", 5.0)))
                    if mapping
                    else None
                )
                new = session.with_track(replace(track, mod_index_mapping=mm))
            else:
                raise ValidationError(f"unknown mapping target {target!r}")
        elif mtype == "set_envelope":
            track = session.track(str(_require(msg, "track")))
            env = _require(msg, "envelope")
            new_env = Envelope(
                attack=float(env.get("attack", track.envelope.attack)),
                decay=float(env.get("decay", track.envelope.decay)),
                sustain=float(env.get("sustain", track.envelope.sustain)),
                release=float(env.get("release", track.envelope.release)),
            )
            new = session.with_track(replace(track, envelope=new_env, envelope_edited=True))
        elif mtype == "set_mode":
            track = session.track(str(_require(msg, "track")))
            mode = str(_require(msg, "mode"))
            if mode not in ("continuous", "discrete"):
                raise ValidationError(f"unknown mode {mode!r}")
            updated = replace(track, mode=mode)
            if not track.envelope_edited:
                updated = replace(
                    updated, envelope=DISCRETE_ENVELOPE if mode == "discrete" else CONTINUOUS_ENVELOPE
                )
            new = session.with_track(updated)
        elif mtype == "set_discrete_rule":
            track = session.track(str(_require(msg, "track")))
            rule = _require(msg, "rule")
            new = session.with_track(
                replace(
                    track,
                    discrete=DiscreteRule(
                        threshold=float(rule["threshold"]), increment=float(rule["increment"])
                    ),
                )
            )
        elif mtype == "add_fm_link":
            link = FMLink(modulator=str(_require(msg, "modulator")), carrier=str(_require(msg, "carrier")))
            links = session.fm_links + (link,)
            validate_fm_links(session.tracks, links)
            new = replace(session, fm_links=links)
        elif mtype == "remove_fm_link":
            mod, car = str(_require(msg, "modulator")), str(_require(msg, "carrier"))
            links = tuple(l for l in session.fm_links if (l.modulator, l.carrier) != (mod, car))
            if len(links) == len(session.fm_links):
                raise ValidationError(f"no FM link {(mod, car)}")
            new = replace(session, fm_links=links)
        elif mtype == "move_speaker":
            track = session.track(str(_require(msg, "track")))
            x = float(_require(msg, "x"))
            if not -1.0 <= x <= 1.0:
                raise ValidationError("speaker x must be in [-1, 1]")
            new = session.with_track(replace(track, pan=x))
        elif mtype == "set_interleave":
            enabled = bool(_require(msg, "enabled"))
            track_ids = tuple(str(x) for x in msg.get("tracks", ()))
            if enabled and not track_ids:
                raise ValidationError("interleave requires a non-empty track set")
            for tid in track_ids:
                session.track(tid)
            if len(set(track_ids)) != len(track_ids):
                raise ValidationError("duplicate tracks in interleave set")
            new = replace(
                session, transport=replace(t, interleave_enabled=enabled, interleave_set=track_ids)
            )
        else:
            raise ValidationError(f"unknown message type {mtype!r}")
    except ValidationError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"bad {mtype} payload: {exc}") from None
    validate_session(new)
    return new
