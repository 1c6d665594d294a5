"""Block-based render engine.

Renders fixed-size stereo blocks from immutable Session snapshots. The
engine owns the runtime side of playback: the fractional row cursor,
oscillator phases, active discrete voices, and threshold states. Snapshots
are swapped in only between blocks, so no partially-applied parameter
update is ever audible, and rendering is a pure function of (initial
session, message timeline) -- the property the replay tests lean on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .data import normalize_array
from .mapping import TransportState, discrete_step
from .session import (
    OscillatorSource,
    SampleSource,
    Session,
    TrackConfig,
    apply_update,
    fm_topo_order,
    validate_session,
)
from .synth import (
    Envelope,
    LoadedSample,
    adsr_curve,
    load_sample,
    osc_value,
    pan_gains,
    sample_voice,
)

TWO_PI = 2.0 * math.pi


@dataclass
class Voice:
    """One discrete-event note: envelope clock anchored at start_frame."""

    start_frame: int
    envelope: Envelope

    def gate(self) -> float:
        # Note-off immediately after the decay; with the default sustain of 0
        # the voice is a pure attack/decay hit.
        return self.envelope.attack + self.envelope.decay

    def end_time(self) -> float:
        return self.gate() + self.envelope.release


@dataclass
class _TrackRuntime:
    phase: float = 0.0
    mod_phase: float = 0.0
    voices: list = None
    rule: object = None  # DiscreteRule runtime state

    def __post_init__(self):
        if self.voices is None:
            self.voices = []


class RenderEngine:
    def __init__(self, session: Session):
        validate_session(session)
        self.session = session
        self.sample_rate = session.sample_rate
        self.block_size = session.block_size
        self.frame = 0  # absolute frames rendered so far
        self.cursor = session.transport.cursor
        self._playing = False
        self._play_start_frame = 0
        self._next_row = 0
        self._runtimes: dict[str, _TrackRuntime] = {}
        self._norms: dict[str, np.ndarray] = {}
        self._samples: dict[str, LoadedSample] = {}
        self._topo: list[str] = []
        self._incoming: dict[str, list[str]] = {}
        self._trigger_events: list[dict] = []
        self.last_levels: dict = {"master": 0.0, "tracks": {}}
        self.auto_stopped = False
        self._sync_caches(session, fresh=True)
        if session.transport.state is TransportState.PLAYING:
            self._start(session.transport.cursor)

    # -- session / transport management ------------------------------------

    @property
    def playing(self) -> bool:
        return self._playing

    def set_session(self, session: Session) -> None:
        """Swap in a new snapshot; takes effect at the next block."""
        old = self.session
        self._sync_caches(session, fresh=(session.dataset is not old.dataset))
        self.session = session
        want_play = session.transport.state is TransportState.PLAYING
        if want_play and not self._playing:
            self._start(session.transport.cursor)
        elif self._playing and not want_play:
            self._stop()
        elif not self._playing and session.transport.cursor != self.cursor:
            self.cursor = session.transport.cursor

    def reset(self) -> None:
        self.cursor = 0.0
        self._next_row = 0
        for tid, rt in self._runtimes.items():
            rt.voices.clear()
            if rt.rule is not None:
                rt.rule = rt.rule.reset()

    def _start(self, cursor: float) -> None:
        self._playing = True
        self.auto_stopped = False
        self._play_start_frame = self.frame
        self.cursor = cursor
        self._next_row = math.ceil(cursor)

    def _stop(self) -> None:
        self._playing = False
        for rt in self._runtimes.values():
            rt.voices.clear()

    def _sync_caches(self, session: Session, fresh: bool) -> None:
        if fresh:
            self._norms = {}
        dataset = session.dataset
        if dataset is not None:
            for t in session.tracks:
                if t.series not in self._norms:
                    self._norms[t.series] = normalize_array(
                        dataset.series_by_name(t.series), session.normalization
                    )
        if not fresh and session.normalization is not self.session.normalization:
            self._norms = {
                t.series: normalize_array(dataset.series_by_name(t.series), session.normalization)
                for t in session.tracks
            }
        for t in session.tracks:
            if isinstance(t.source, SampleSource) and t.source.file not in self._samples:
                self._samples[t.source.file] = load_sample(t.source.file)
        runtimes: dict[str, _TrackRuntime] = {}
        for t in session.tracks:
            rt = self._runtimes.get(t.track_id, _TrackRuntime())
            old = next((o for o in self.session.tracks if o.track_id == t.track_id), None) if hasattr(self, "session") else None
            if t.discrete is None:
                rt.rule = None
            elif rt.rule is None or old is None or old.discrete is None or (
                old.discrete.threshold,
                old.discrete.increment,
            ) != (t.discrete.threshold, t.discrete.increment):
                rt.rule = t.discrete
            runtimes[t.track_id] = rt
        self._runtimes = runtimes
        self._topo = fm_topo_order(session.tracks, session.fm_links)
        self._incoming = {}
        for link in session.fm_links:
            self._incoming.setdefault(link.carrier, []).append(link.modulator)

    def drain_triggers(self) -> list[dict]:
        events, self._trigger_events = self._trigger_events, []
        return events

    # -- rendering ----------------------------------------------------------

    def render_block(self) -> np.ndarray:
        """Render the next block of frames; always advances the frame clock."""
        block = self.block_size
        out = np.zeros((block, 2))
        session = self.session
        if not self._playing or session.dataset is None:
            self.frame += block
            self.last_levels = {"master": 0.0, "tracks": {t.track_id: {"rms": 0.0, "freq": 0.0} for t in session.tracks}}
            return out

        dataset = session.dataset
        tr = session.transport
        n_slots = max(len(tr.interleave_set), 1) if tr.interleave_enabled else 1
        row_step = 1.0 / (self.sample_rate * tr.rate * n_slots)
        start_cursor = self.cursor
        rows = start_cursor + np.arange(block) * row_step
        end_cursor = start_cursor + block * row_step
        row_idx = np.clip(np.floor(rows).astype(np.int64), 0, dataset.length - 1)

        crossings = self._collect_crossings(start_cursor, row_step, block, dataset.length)
        self._fire_triggers(crossings, dataset)

        if tr.interleave_enabled:
            frac = rows - np.floor(rows)
            slot_of_frame = np.minimum((frac * n_slots).astype(np.int64), n_slots - 1)
        else:
            slot_of_frame = None

        t_play = (self.frame - self._play_start_frame + np.arange(block)) / self.sample_rate
        link_signals: dict[str, np.ndarray] = {}
        levels: dict[str, dict] = {}
        tracks = {t.track_id: t for t in session.tracks}

        for tid in self._topo:
            t = tracks[tid]
            rt = self._runtimes[tid]
            norm = self._norms[t.series][row_idx]
            osc_out = None
            current_freq = 0.0
            if isinstance(t.source, OscillatorSource):
                if t.frequency_mapping is not None:
                    freq = t.frequency_mapping.f_min + norm * t.frequency_mapping.f_range
                    phases = rt.phase + (np.cumsum(freq) - freq) / self.sample_rate
                    rt.phase += float(freq.sum()) / self.sample_rate
                    current_freq = float(freq[-1])
                else:
                    f = t.source.frequency
                    phases = rt.phase + np.arange(block) * (f / self.sample_rate)
                    rt.phase += block * f / self.sample_rate
                    current_freq = f
                mod_sum = None
                if t.modulator is not None:
                    mf = t.modulator.frequency
                    mphases = rt.mod_phase + np.arange(block) * (mf / self.sample_rate)
                    rt.mod_phase += block * mf / self.sample_rate
                    mod_sum = osc_value(t.modulator.kind, mphases)
                for mid in self._incoming.get(tid, ()):
                    sig = link_signals[mid]
                    mod_sum = sig if mod_sum is None else mod_sum + sig
                if mod_sum is not None:
                    if t.mod_index_mapping is not None:
                        index = t.mod_index_mapping.i_min + norm * t.mod_index_mapping.i_range
                    else:
                        index = 0.0
                    phases = phases + index * mod_sum / TWO_PI
                osc_out = osc_value(t.source.kind, phases)
                link_signals[tid] = osc_out

            amp = norm if t.amplitude_mapped else t.source.amplitude

            if t.muted:
                levels[tid] = {"rms": 0.0, "freq": current_freq}
                continue

            if t.mode == "continuous":
                if osc_out is not None:
                    base = osc_out
                else:
                    src = t.source
                    base = sample_voice(self._samples[src.file], t_play, speed=src.speed, amplitude=1.0)
                sig = base * amp * adsr_curve(t.envelope, t_play)
            else:
                sig = np.zeros(block)
                alive = []
                for voice in rt.voices:
                    times = (self.frame - voice.start_frame + np.arange(block)) / self.sample_rate
                    env = adsr_curve(voice.envelope, times, gate=voice.gate())
                    if osc_out is not None:
                        sig += osc_out * env
                    else:
                        src = t.source
                        on = np.maximum(times, 0.0)
                        sig += sample_voice(self._samples[src.file], on, speed=src.speed, amplitude=1.0) * env
                    if times[-1] <= voice.end_time():
                        alive.append(voice)
                rt.voices = alive
                sig = sig * amp

            if slot_of_frame is not None and tid in tr.interleave_set:
                slot = tr.interleave_set.index(tid)
                sig = np.where(slot_of_frame == slot, sig, 0.0)

            levels[tid] = {"rms": float(np.sqrt(np.mean(sig * sig))), "freq": current_freq}
            gl, gr = pan_gains(t.pan)
            out[:, 0] += sig * gl
            out[:, 1] += sig * gr

        np.clip(out, -1.0, 1.0, out=out)
        self.last_levels = {"master": float(np.sqrt(np.mean(out * out))), "tracks": levels}
        self.frame += block
        if end_cursor >= dataset.length:
            self.cursor = float(dataset.length)
            self._playing = False
            self.auto_stopped = True
        else:
            self.cursor = end_cursor
        return out

    def _collect_crossings(self, start_cursor: float, row_step: float, block: int, length: int):
        """Rows whose integer boundary falls inside this block, with frame offsets."""
        crossings = []
        while self._next_row < length:
            offset = math.ceil((self._next_row - start_cursor) / row_step)
            if offset < 0:
                offset = 0
            if offset >= block:
                break
            crossings.append((offset, self._next_row))
            self._next_row += 1
        return crossings

    def _fire_triggers(self, crossings, dataset) -> None:
        if not crossings:
            return
        for offset, row in crossings:
            for t in self.session.tracks:
                if t.mode != "discrete" or t.muted:
                    continue
                rt = self._runtimes[t.track_id]
                if rt.rule is None:
                    continue
                value = float(dataset.series_by_name(t.series).values[row])
                fired, rt.rule = discrete_step(rt.rule, value)
                if fired:
                    frame = self.frame + offset
                    rt.voices.append(Voice(start_frame=frame, envelope=t.envelope))
                    self._trigger_events.append(
                        {
                            "time": frame / self.sample_rate,
                            "track": t.track_id,
                            "row": row,
                            "value": value,
                        }
                    )


class SessionHost:
    """Owns the authoritative Session plus its engine; serializes updates.

    The server and the frame-clocked replay path both drive playback through
    this class, which is what makes a live session reproducible offline.
    """

    def __init__(self, session: Session):
        self.session = session
        self.engine = RenderEngine(session)

    def apply(self, msg: dict) -> Session:
        # Transport decisions (e.g. restart-at-end) need the live cursor.
        synced = replace(
            self.session,
            transport=replace(
                self.session.transport,
                cursor=self.engine.cursor,
                state=TransportState.PLAYING if self.engine.playing else TransportState.STOPPED,
            ),
        )
        new = apply_update(synced, msg)
        self.session = new
        self.engine.set_session(new)
        if msg.get("type") == "reset":
            self.engine.reset()
        return new

    def render_block(self) -> np.ndarray:
        block = self.engine.render_block()
        if self.engine.auto_stopped and self.session.transport.state is TransportState.PLAYING:
            self.session = replace(
                self.session,
                transport=replace(
                    self.session.transport,
                    state=TransportState.STOPPED,
                    cursor=self.engine.cursor,
                ),
            )
            self.engine.set_session(self.session)
        return block


def replay_timeline(session: Session, timeline: list[tuple[int, dict]], max_frames: int) -> np.ndarray:
    """Frame-clocked deterministic replay of a recorded message timeline.

    Each (frame, message) pair is applied at the block boundary whose frame
    counter matches; frames must be multiples of the session block size.
    Returns the concatenated stereo output up to max_frames.
    """
    host = SessionHost(session)
    pending = sorted(timeline, key=lambda fm: fm[0])
    blocks = []
    i = 0
    while host.engine.frame < max_frames:
        while i < len(pending) and pending[i][0] <= host.engine.frame:
            host.apply(pending[i][1])
            i += 1
        blocks.append(host.render_block())
    return np.vstack(blocks) if blocks else np.zeros((0, 2))
