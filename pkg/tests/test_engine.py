import numpy as np
import pytest
from dataclasses import replace

from sonify.engine import RenderEngine, SessionHost, replay_timeline
from sonify.mapping import (
    DiscreteRule,
    FrequencyMapping,
    ModIndexMapping,
    Transport,
    TransportState,
)
from sonify.render import render_session
from sonify.session import Modulator, OscillatorSource, Session, TrackConfig
from sonify.synth import Envelope, OscillatorKind

from conftest import make_dataset

SR = 44100


def session_for(tracks, values=None, rate=0.05, **kw):
    columns = values or {"x": np.linspace(0.0, 1.0, 40)}
    ds = make_dataset(**columns)
    return Session(dataset=ds, transport=Transport(rate=rate), tracks=tuple(tracks), **kw)


def sine_track(track_id="t0", series="x", **kw):
    defaults = dict(source=OscillatorSource(frequency=440.0, amplitude=0.5))
    defaults.update(kw)
    return TrackConfig(track_id=track_id, series=series, **defaults)


def test_all_muted_renders_silence():
    s = session_for([sine_track(muted=True)])
    audio, _, _ = render_session(s)
    assert np.all(audio == 0.0)


def test_center_pan_is_symmetric():
    s = session_for([sine_track(pan=0.0)])
    audio, _, _ = render_session(s)
    assert np.array_equal(audio[:, 0], audio[:, 1])
    assert np.abs(audio).max() > 0.1


def test_far_left_right_channel_isolation():
    cols = {"x": np.linspace(0, 1, 40), "y": np.linspace(1, 0, 40)}
    s = session_for(
        [sine_track("l", "x", pan=-1.0), sine_track("r", "y", pan=1.0)], values=cols
    )
    audio, _, _ = render_session(s)
    left_only, _, _ = render_session(replace(s, tracks=(s.tracks[0],)))
    right_only, _, _ = render_session(replace(s, tracks=(s.tracks[1],)))
    assert np.abs(left_only[:, 1]).max() == 0.0
    assert np.abs(right_only[:, 0]).max() == 0.0
    assert np.abs(audio[:, 0]).max() > 0.0 and np.abs(audio[:, 1]).max() > 0.0


def test_render_is_deterministic():
    s = session_for(
        [sine_track(frequency_mapping=FrequencyMapping(261.6, 600.0), amplitude_mapped=True)]
    )
    a1, _, _ = render_session(s)
    a2, _, _ = render_session(s)
    assert np.array_equal(a1, a2)


def test_fm_zero_index_degenerates_to_plain_oscillator():
    plain = session_for([sine_track()])
    with_mod = session_for(
        [
            sine_track(
                modulator=Modulator(frequency=3000.0),
                mod_index_mapping=ModIndexMapping(i_min=0.0, i_range=0.0),
            )
        ]
    )
    a1, _, _ = render_session(plain)
    a2, _, _ = render_session(with_mod)
    assert np.array_equal(a1, a2)


def test_cross_track_fm_link_changes_carrier():
    cols = {"x": np.full(40, 3.0), "y": np.full(40, 7.0)}
    base = [
        sine_track("car", "x", source=OscillatorSource(frequency=750.0, amplitude=1.0),
                   mod_index_mapping=ModIndexMapping(i_min=1.0, i_range=0.0)),
        sine_track("mod", "y", source=OscillatorSource(frequency=3000.0, amplitude=0.5), muted=True),
    ]
    unlinked = session_for(base, values=cols)
    linked = replace(unlinked, fm_links=(__import__("sonify.session", fromlist=["FMLink"]).FMLink("mod", "car"),))
    a1, _, _ = render_session(unlinked)
    a2, _, _ = render_session(linked)
    assert not np.array_equal(a1, a2)
    # linked carrier shows sidebands at 750 +/- 3000
    from sonify.analysis import band_magnitude

    mono = a2[:, 0]
    assert band_magnitude(mono[: 2**15], SR, 3750.0) > 0.05


def test_discrete_track_triggers_and_logs():
    values = {"x": np.arange(0.0, 10.1, 0.1)}
    track = sine_track(
        mode="discrete",
        envelope=Envelope(0.01, 0.2, 0.0, 0.05),
        discrete=DiscreteRule(threshold=1.0, increment=2.0),
    )
    s = session_for([track], values=values, rate=0.3)
    audio, events, summary = render_session(s)
    assert [e["row"] for e in events] == [10, 30, 50, 70, 90]
    assert summary.triggers == 5
    assert np.abs(audio).max() > 0.0


def test_discrete_trigger_timing_sample_accurate():
    values = {"x": np.array([0.0, 5.0, 0.0, 0.0])}
    track = sine_track(
        mode="discrete",
        envelope=Envelope(0.01, 0.2, 0.0, 0.05),
        discrete=DiscreteRule(threshold=5.0, increment=100.0),
    )
    s = session_for([track], values=values, rate=0.5)
    audio, events, _ = render_session(s)
    assert len(events) == 1
    trigger_frame = round(events[0]["time"] * SR)
    # row 1 is crossed after exactly one row period
    assert abs(trigger_frame - round(0.5 * SR)) <= 1
    # silence before the trigger, sound after, silence again past attack+decay
    assert np.abs(audio[: trigger_frame - 1]).max() == 0.0
    assert np.abs(audio[trigger_frame : trigger_frame + int(0.2 * SR)]).max() > 0.1
    tail = trigger_frame + int(0.21 * SR) + 2
    assert np.abs(audio[tail:]).max() < 1e-10


def test_interleave_gates_tracks_into_slots():
    cols = {"x": np.full(6, 1.0), "y": np.full(6, 1.0)}
    tracks = [sine_track("a", "x", pan=-1.0), sine_track("b", "y", pan=1.0)]
    transport = Transport(rate=0.1, interleave_enabled=True, interleave_set=("a", "b"))
    s = Session(dataset=make_dataset(**cols), transport=transport, tracks=tuple(tracks))
    audio, _, summary = render_session(s)
    # row period stretches to n_tracks * rate
    assert summary.duration == pytest.approx(6 * 2 * 0.1, abs=0.01)
    slot = int(0.1 * SR)
    # first slot: only track a (left); second slot: only track b (right)
    assert np.abs(audio[: slot - 1, 1]).max() == 0.0
    assert np.abs(audio[slot + 1 : 2 * slot - 1, 0]).max() == 0.0
    assert np.abs(audio[: slot - 1, 0]).max() > 0.1
    assert np.abs(audio[slot + 1 : 2 * slot - 1, 1]).max() > 0.1


def test_duration_matches_rate_times_rows():
    s = session_for([sine_track()], values={"x": np.zeros(100)}, rate=0.01)
    audio, _, summary = render_session(s)
    expected = 100 * 0.01 * SR
    assert abs(len(audio) - expected) <= s.block_size


def test_engine_stops_at_dataset_end():
    s = session_for([sine_track()], values={"x": np.zeros(10)}, rate=0.01)
    playing = replace(s, transport=replace(s.transport, state=TransportState.PLAYING))
    engine = RenderEngine(playing)
    while engine.playing:
        engine.render_block()
    assert engine.cursor == 10.0
    assert engine.auto_stopped


def test_session_host_play_stop_reset():
    s = session_for(
        [
            sine_track(
                mode="discrete",
                envelope=Envelope(0.01, 0.05, 0.0, 0.01),
                discrete=DiscreteRule(threshold=0.5, increment=0.5),
            )
        ],
        values={"x": np.linspace(0, 1, 20)},
        rate=0.02,
    )
    host = SessionHost(s)
    host.apply({"type": "play"})
    for _ in range(100):
        host.render_block()
    assert host.engine.cursor > 0
    host.apply({"type": "stop"})
    cursor = host.engine.cursor
    block = host.render_block()
    assert np.all(block == 0.0) and host.engine.cursor == cursor
    host.apply({"type": "reset"})
    assert host.engine.cursor == 0.0


def test_replay_timeline_reproducible():
    s = session_for([sine_track(amplitude_mapped=True)], values={"x": np.linspace(0, 1, 50)}, rate=0.01)
    timeline = [(0, {"type": "play"}), (12800, {"type": "mute", "track": "t0", "muted": True})]
    a1 = replay_timeline(s, timeline, max_frames=25600)
    a2 = replay_timeline(s, timeline, max_frames=25600)
    assert np.array_equal(a1, a2)
    assert np.abs(a1[:12800]).max() > 0.0
    assert np.all(a1[12800:] == 0.0)


def test_snapshot_swap_never_partial():
    # a snapshot handed to the engine mid-run applies atomically at a block edge
    s = session_for([sine_track()], values={"x": np.zeros(50)}, rate=0.01)
    host = SessionHost(s)
    host.apply({"type": "play"})
    before = host.render_block()
    host.apply({"type": "move_speaker", "track": "t0", "x": -1.0})
    after = host.render_block()
    assert np.abs(before[:, 1]).max() > 0.0  # centered before
    assert np.abs(after[:, 1]).max() == 0.0  # hard left immediately after
