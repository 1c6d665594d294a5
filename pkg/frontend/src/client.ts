/**
 * Session client: one full-duplex socket carrying JSON control frames and
 * binary PCM frames, feeding the state store and the audio scheduler.
 *
 * The socket is injected behind a minimal interface so the same client runs
 * on the browser WebSocket and on node's `ws` package in tests.
 */
import type { ClientMessage, ServerMessage } from "./protocol.js";
import { decodeAudioChunk, parseServerMessage, serializeClientMessage } from "./protocol.js";
import { SessionStore } from "./store.js";
import type { ChunkScheduler } from "./audio.js";

export interface SocketLike {
  send(data: string | ArrayBuffer): void;
  close(): void;
  onMessage(handler: (data: string | ArrayBuffer) => void): void;
  onClose(handler: () => void): void;
}

export interface ClientOptions {
  scheduler?: ChunkScheduler;
  /** Called for frames that fail to parse; the connection stays up. */
  onBadFrame?: (error: unknown) => void;
  onServerMessage?: (msg: ServerMessage) => void;
}

export class SessionClient {
  readonly store = new SessionStore();
  private closed = false;

  constructor(
    private readonly socket: SocketLike,
    private readonly options: ClientOptions = {},
  ) {
    socket.onMessage((data) => this.handleFrame(data));
    socket.onClose(() => {
      this.closed = true;
      this.options.scheduler?.reset();
    });
  }

  get isClosed(): boolean {
    return this.closed;
  }

  send(msg: ClientMessage): void {
    this.socket.send(serializeClientMessage(msg));
  }

  close(): void {
    this.socket.close();
  }

  private handleFrame(data: string | ArrayBuffer): void {
    try {
      if (typeof data === "string") {
        const msg = parseServerMessage(data);
        if (msg.type === "error" && msg.code === "resync") {
          // the server dropped chunks for us; restart the playback clock
          this.options.scheduler?.reset();
        }
        this.store.apply(msg);
        this.options.onServerMessage?.(msg);
      } else {
        this.options.scheduler?.enqueue(decodeAudioChunk(data));
      }
    } catch (error) {
      this.options.onBadFrame?.(error);
    }
  }
}

/** Adapt a standard browser/`ws` WebSocket to SocketLike. */
export function wrapWebSocket(ws: {
  binaryType: string;
  send(data: string | ArrayBuffer): void;
  close(): void;
  addEventListener(type: string, listener: (event: any) => void): void;
}): SocketLike {
  ws.binaryType = "arraybuffer";
  return {
    send: (data) => ws.send(data),
    close: () => ws.close(),
    onMessage: (handler) =>
      ws.addEventListener("message", (event) => {
        const data = event.data;
        if (typeof data === "string") {
          handler(data);
        } else if (data instanceof ArrayBuffer) {
          handler(data);
        } else {
          // node's ws delivers Buffer; normalize to a standalone ArrayBuffer
          handler(new Uint8Array(data).slice().buffer);
        }
      }),
    onClose: (handler) => ws.addEventListener("close", handler),
  };
}
