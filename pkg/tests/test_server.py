import asyncio
import json

import numpy as np
import pytest
from websockets.asyncio.client import connect

from sonify.engine import replay_timeline
from sonify.mapping import Transport
from sonify.protocol import unpack_audio_chunk
from sonify.server import SonifyServer
from sonify.session import OscillatorSource, Session, TrackConfig

from conftest import make_dataset

SR = 44100


def small_session(rows=30, rate=0.01, **track_kw):
    ds = make_dataset(x=np.linspace(0.0, 1.0, rows))
    defaults = dict(source=OscillatorSource(frequency=440.0, amplitude=0.5))
    defaults.update(track_kw)
    return Session(
        dataset=ds,
        transport=Transport(rate=rate),
        tracks=(TrackConfig(track_id="t0", series="x", **defaults),),
    )


def run(coro, timeout=30.0):
    return asyncio.run(asyncio.wait_for(coro, timeout))


async def with_server(session, fn, **server_kw):
    server = SonifyServer(session, port=0, realtime=False, **server_kw)
    ws_server, render = await server.start()
    try:
        return await fn(server)
    finally:
        render.cancel()
        ws_server.close()
        await ws_server.wait_closed()


class Collector:
    """Splits a websocket stream into chunks and JSON messages."""

    def __init__(self, ws):
        self.ws = ws
        self.chunks = []
        self.messages = []

    async def next_message(self, mtype=None):
        while True:
            frame = await self.ws.recv()
            if isinstance(frame, (bytes, bytearray)):
                self.chunks.append(unpack_audio_chunk(bytes(frame)))
                continue
            msg = json.loads(frame)
            self.messages.append(msg)
            if mtype is None or msg["type"] == mtype:
                return msg

    async def drain_until_stopped(self):
        while True:
            msg = await self.next_message()
            if msg["type"] == "state_snapshot" and msg["state"]["transport_state"] == "stopped":
                return msg


def test_connect_receives_snapshot_with_data():
    async def scenario(server):
        async with connect(f"ws://127.0.0.1:{server.port}") as ws:
            col = Collector(ws)
            snap = await col.next_message("state_snapshot")
            assert snap["state"]["tracks"][0]["id"] == "t0"
            assert snap["state"]["data"]["length"] == 30
            assert snap["state"]["data"]["series"][0]["name"] == "x"

    run(with_server(small_session(), scenario))


def test_play_streams_gapless_chunks_and_matches_replay():
    initial = small_session()

    async def scenario(server):
        async with connect(f"ws://127.0.0.1:{server.port}") as ws:
            col = Collector(ws)
            await col.next_message("state_snapshot")
            await ws.send(json.dumps({"type": "play"}))
            ack = await col.next_message("state_snapshot")
            play_frame = ack["frame"]
            await col.drain_until_stopped()
            return play_frame, col.chunks

    play_frame, chunks = run(with_server(initial, scenario))
    # gapless + monotone
    for (s1, pcm1), (s2, _) in zip(chunks, chunks[1:]):
        assert s2 == s1 + len(pcm1)
    assert chunks[0][0] == 0
    received = np.vstack([pcm for _, pcm in chunks])
    # frame-clocked replay of the recorded timeline is sample-identical
    from sonify.render import to_int16

    replayed = to_int16(replay_timeline(initial, [(play_frame, {"type": "play"})], len(received)))
    assert np.array_equal(received, replayed)


def test_two_clients_receive_identical_chunks():
    async def scenario(server):
        async with connect(f"ws://127.0.0.1:{server.port}") as a, connect(
            f"ws://127.0.0.1:{server.port}"
        ) as b:
            ca, cb = Collector(a), Collector(b)
            await ca.next_message("state_snapshot")
            await cb.next_message("state_snapshot")
            await a.send(json.dumps({"type": "play"}))
            await asyncio.gather(ca.drain_until_stopped(), cb.drain_until_stopped())
            return ca.chunks, cb.chunks

    chunks_a, chunks_b = run(with_server(small_session(rows=15), scenario))
    frames_a = {start: pcm.tobytes() for start, pcm in chunks_a}
    frames_b = {start: pcm.tobytes() for start, pcm in chunks_b}
    shared = sorted(set(frames_a) & set(frames_b))
    assert shared, "clients shared no chunk window"
    for start in shared:
        assert frames_a[start] == frames_b[start]


def test_malformed_frame_gets_in_band_error_and_state_unchanged():
    async def scenario(server):
        async with connect(f"ws://127.0.0.1:{server.port}") as ws:
            col = Collector(ws)
            before = (await col.next_message("state_snapshot"))["state"]
            await ws.send("this is not json")
            err = await col.next_message("error")
            assert err["code"] == "protocol"
            await ws.send(json.dumps({"type": "mute", "track": "ghost", "muted": True}))
            err = await col.next_message("error")
            assert err["code"] == "validation"
            # binary frames from clients are also rejected in-band
            await ws.send(b"\x00" * 12)
            err = await col.next_message("error")
            assert err["code"] == "protocol"
            # connection still alive; state unchanged
            await ws.send(json.dumps({"type": "stop"}))
            after = (await col.next_message("state_snapshot"))["state"]
            before.pop("cursor"), after.pop("cursor")
            before.pop("data", None), after.pop("data", None)
            assert before == after

    run(with_server(small_session(), scenario))


def test_move_speaker_far_left_isolates_channel():
    async def scenario(server):
        async with connect(f"ws://127.0.0.1:{server.port}") as ws:
            col = Collector(ws)
            await col.next_message("state_snapshot")
            await ws.send(json.dumps({"type": "move_speaker", "track": "t0", "x": -1.0}))
            await col.next_message("state_snapshot")
            col.chunks.clear()
            await ws.send(json.dumps({"type": "play"}))
            await col.drain_until_stopped()
            return col.chunks

    chunks = run(with_server(small_session(rows=20), scenario))
    audio = np.vstack([pcm for _, pcm in chunks])
    assert np.abs(audio[:, 0]).max() > 0
    assert np.abs(audio[:, 1]).max() == 0


def test_level_meters_and_cursor_updates_flow():
    async def scenario(server):
        async with connect(f"ws://127.0.0.1:{server.port}") as ws:
            col = Collector(ws)
            await col.next_message("state_snapshot")
            meters = await col.next_message("level_meters")
            assert meters["master"] == 0.0  # stopped transport
            await ws.send(json.dumps({"type": "play"}))
            await col.drain_until_stopped()
            updates = [m for m in col.messages if m["type"] == "cursor_update"]
            playing_meters = [
                m for m in col.messages if m["type"] == "level_meters" and m["master"] > 0
            ]
            assert updates and playing_meters
            assert any(m["playing"] for m in updates)
            cursors = [m["cursor"] for m in updates]
            assert cursors == sorted(cursors)
            t0 = playing_meters[-1]["tracks"]["t0"]
            assert t0["rms"] > 0 and t0["freq"] == 440.0

    run(with_server(small_session(rows=40), scenario))


def test_muted_track_has_zero_rms():
    async def scenario(server):
        async with connect(f"ws://127.0.0.1:{server.port}") as ws:
            col = Collector(ws)
            await col.next_message("state_snapshot")
            await ws.send(json.dumps({"type": "mute", "track": "t0", "muted": True}))
            await col.next_message("state_snapshot")
            await ws.send(json.dumps({"type": "play"}))
            await col.drain_until_stopped()
            metered = [m for m in col.messages if m["type"] == "level_meters"]
            assert metered
            assert all(m["tracks"].get("t0", {"rms": 0})["rms"] == 0.0 for m in metered)

    run(with_server(small_session(rows=20), scenario))


def test_mid_playback_edit_matches_replay():
    initial = small_session(rows=200, rate=0.005)

    async def scenario(server):
        timeline = []
        async with connect(f"ws://127.0.0.1:{server.port}") as ws:
            col = Collector(ws)
            await col.next_message("state_snapshot")
            await ws.send(json.dumps({"type": "play"}))
            ack = await col.next_message("state_snapshot")
            timeline.append((ack["frame"], {"type": "play"}))
            # wait for some audio, then mute mid-playback
            while len(col.chunks) < 5:
                await col.next_message()
            msg = {"type": "mute", "track": "t0", "muted": True}
            await ws.send(json.dumps(msg))
            ack = await col.next_message("state_snapshot")
            timeline.append((ack["frame"], msg))
            await col.drain_until_stopped()
            return timeline, col.chunks

    timeline, chunks = run(with_server(initial, scenario))
    received = np.vstack([pcm for _, pcm in chunks])
    from sonify.render import to_int16

    replayed = to_int16(replay_timeline(initial, timeline, len(received)))
    assert np.array_equal(received, replayed)
