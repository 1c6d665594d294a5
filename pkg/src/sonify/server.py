"""Live session host: WebSocket control + PCM audio streaming.

One full-duplex connection per client carries JSON control frames and
binary audio frames. The server owns the authoritative session state; all
mutation is serialized through the message handler, and the render loop
only ever sees immutable snapshots at block boundaries.
"""

from __future__ import annotations

import argparse
import asyncio
import time

import numpy as np

from websockets.asyncio.server import serve
from websockets.exceptions import ConnectionClosed

from .engine import SessionHost
from .protocol import CLIENT_VALIDATORS, ProtocolError, pack_audio_chunk, parse, serialize
from .render import to_int16
from .session import Session, ValidationError, load_session, session_to_dict

DEFAULT_PORT = 8765
CHUNK_FRAMES = 1024
METER_WINDOW_SECONDS = 0.1
LAG_LIMIT_SECONDS = 1.0


class _Client:
    def __init__(self, maxsize: int):
        self.queue: asyncio.Queue = asyncio.Queue(maxsize=maxsize)
        self.needs_resync = False

    def offer(self, item) -> None:
        """Enqueue; under back-pressure drop the oldest item instead of blocking."""
        while True:
            try:
                self.queue.put_nowait(item)
                return
            except asyncio.QueueFull:
                try:
                    self.queue.get_nowait()
                except asyncio.QueueEmpty:
                    pass
                self.needs_resync = True


class SonifyServer:
    def __init__(
        self,
        session: Session,
        host: str = "127.0.0.1",
        port: int = DEFAULT_PORT,
        realtime: bool = True,
        chunk_frames: int = CHUNK_FRAMES,
    ):
        self.session_host = SessionHost(session)
        self.host = host
        self.port = port
        self.realtime = realtime
        self.chunk_frames = chunk_frames
        queue_size = max(2, int(LAG_LIMIT_SECONDS * session.sample_rate / chunk_frames)) + 8
        self._queue_size = queue_size
        self.clients: set[_Client] = set()
        self._meter_history: list[tuple[int, dict, float]] = []  # (frames, per-track ms, master ms)
        self._server = None

    # -- broadcasting --------------------------------------------------------

    def _broadcast(self, item) -> None:
        for client in self.clients:
            client.offer(item)
            if client.needs_resync and isinstance(item, (bytes, bytearray)):
                client.needs_resync = False
                client.offer(serialize({"type": "error", "code": "resync", "message": "audio stream resynced after lag"}))

    def _snapshot_message(self, include_data: bool = False) -> str:
        return serialize(
            {
                "type": "state_snapshot",
                "state": session_to_dict(self.session_host.session, include_data=include_data),
                "frame": self.session_host.engine.frame,
            }
        )

    # -- client connections ----------------------------------------------------

    async def _writer(self, ws, client: _Client) -> None:
        while True:
            item = await client.queue.get()
            await ws.send(item)

    async def _handler(self, ws) -> None:
        client = _Client(self._queue_size)
        self.clients.add(client)
        writer = asyncio.create_task(self._writer(ws, client))
        try:
            client.offer(self._snapshot_message(include_data=True))
            async for frame in ws:
                if isinstance(frame, (bytes, bytearray)):
                    client.offer(serialize({"type": "error", "code": "protocol", "message": "unexpected binary frame"}))
                    continue
                try:
                    msg = parse(frame)
                    if msg["type"] not in CLIENT_VALIDATORS:
                        raise ProtocolError(f"{msg['type']} is a server-to-client message")
                except ProtocolError as exc:
                    client.offer(serialize({"type": "error", "code": "protocol", "message": str(exc)}))
                    continue
                try:
                    self.session_host.apply(msg)
                except ValidationError as exc:
                    client.offer(serialize({"type": "error", "code": "validation", "message": str(exc)}))
                    continue
                self._broadcast(self._snapshot_message(include_data=msg["type"] == "load_dataset"))
        except ConnectionClosed:
            pass
        finally:
            self.clients.discard(client)
            writer.cancel()

    # -- render loop -------------------------------------------------------------

    def _update_meters(self, levels: dict, block_frames: int) -> dict:
        per_track = {tid: lv["rms"] ** 2 for tid, lv in levels["tracks"].items()}
        self._meter_history.append((block_frames, per_track, levels["master"] ** 2))
        window = METER_WINDOW_SECONDS * self.session_host.session.sample_rate
        total = sum(n for n, _, _ in self._meter_history)
        while self._meter_history and total - self._meter_history[0][0] >= window:
            total -= self._meter_history[0][0]
            self._meter_history.pop(0)
        tracks: dict = {}
        master_ms = 0.0
        for n, per, master in self._meter_history:
            master_ms += n * master
            for tid, ms in per.items():
                tracks[tid] = tracks.get(tid, 0.0) + n * ms
        freqs = {tid: lv["freq"] for tid, lv in levels["tracks"].items()}
        return {
            "master": (master_ms / total) ** 0.5 if total else 0.0,
            "tracks": {
                tid: {"rms": (ms / total) ** 0.5 if total else 0.0, "freq": freqs.get(tid, 0.0)}
                for tid, ms in tracks.items()
            },
        }

    async def _render_loop(self) -> None:
        host = self.session_host
        engine = host.engine
        sr = host.session.sample_rate
        wall_anchor = time.monotonic()
        frames_at_anchor = engine.frame
        while True:
            if not self.clients:
                await asyncio.sleep(0.02)
                wall_anchor = time.monotonic()
                frames_at_anchor = engine.frame
                continue
            if not self.realtime and not engine.playing:
                # avoid spinning at CPU speed on silence in frame-clocked mode
                await asyncio.sleep(0.02)
            chunk_start = engine.frame
            was_playing = engine.playing
            blocks = []
            while engine.frame - chunk_start < self.chunk_frames:
                blocks.append(host.render_block())
                for event in engine.drain_triggers():
                    self._broadcast(serialize({"type": "trigger_event", **event}))
            if was_playing and not engine.playing:
                self._broadcast(self._snapshot_message())
            audio = np.vstack(blocks)
            self._broadcast(pack_audio_chunk(chunk_start, to_int16(audio)))
            self._broadcast(
                serialize(
                    {
                        "type": "cursor_update",
                        "cursor": engine.cursor,
                        "frame": engine.frame,
                        "playing": engine.playing,
                    }
                )
            )
            meters = self._update_meters(engine.last_levels, len(audio))
            self._broadcast(serialize({"type": "level_meters", "frame": engine.frame, **meters}))
            if self.realtime:
                target = wall_anchor + (engine.frame - frames_at_anchor) / sr
                delay = target - time.monotonic()
                if delay > 0:
                    await asyncio.sleep(delay)
                elif delay < -1.0:
                    # fell badly behind (e.g. suspended); re-anchor instead of bursting
                    wall_anchor = time.monotonic()
                    frames_at_anchor = engine.frame
            else:
                await asyncio.sleep(0)

    # -- lifecycle ------------------------------------------------------------------

    async def serve_forever(self) -> None:
        async with serve(self._handler, self.host, self.port) as server:
            self._server = server
            self.port = server.sockets[0].getsockname()[1]
            print(f"listening on ws://{self.host}:{self.port}", flush=True)
            render = asyncio.create_task(self._render_loop())
            try:
                await asyncio.Future()
            finally:
                render.cancel()

    async def start(self):
        """Start serving in the running loop; returns (server, render task)."""
        server = await serve(self._handler, self.host, self.port)
        self._server = server
        self.port = server.sockets[0].getsockname()[1]
        render = asyncio.create_task(self._render_loop())
        return server, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sonify-server", description="Live sonification session host")
    parser.add_argument("--config", help="session config JSON to preload")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=DEFAULT_PORT)
    args = parser.parse_args(argv)
    session = load_session(args.config) if args.config else Session()
    server = SonifyServer(session, host=args.host, port=args.port)
    try:
        asyncio.run(server.serve_forever())
    except KeyboardInterrupt:
        pass
    return 0


if __name__ == "__main__":
    import sys

    sys.exit(main())
