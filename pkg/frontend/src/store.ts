/**
 * Client-side session state, driven entirely by server messages.
 *
 * The server is authoritative: every accepted edit comes back as a full
 * state_snapshot, so the store never mutates tracks locally — it swaps in
 * whole snapshots and keeps fast-changing playback data (cursor, meters,
 * recent triggers) alongside.
 */
import type { ServerMessage, SessionState } from "./protocol.js";

export interface TriggerMarker {
  time: number;
  track: string;
  row: number;
  value: number;
}

export interface LevelState {
  master: number;
  tracks: Record<string, { rms: number; freq: number }>;
}

export type StoreListener = (store: SessionStore) => void;

const MAX_TRIGGER_MARKERS = 256;

export class SessionStore {
  state: SessionState | null = null;
  /** Fractional data row of the playhead. */
  cursor = 0;
  playing = false;
  /** Audio frame stamp of the latest snapshot ack. */
  ackFrame = 0;
  levels: LevelState = { master: 0, tracks: {} };
  triggers: TriggerMarker[] = [];
  lastError: { code: string; message: string } | null = null;

  private listeners = new Set<StoreListener>();

  subscribe(listener: StoreListener): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  apply(msg: ServerMessage): void {
    switch (msg.type) {
      case "state_snapshot": {
        // The dataset payload only rides on connect/load snapshots; keep the
        // last one we saw so plots survive ordinary edit acks.
        const data = msg.state.data ?? this.state?.data;
        this.state = data ? { ...msg.state, data } : msg.state;
        this.cursor = msg.state.cursor;
        this.playing = msg.state.transport_state === "playing";
        this.ackFrame = msg.frame;
        break;
      }
      case "cursor_update":
        this.cursor = msg.cursor;
        this.playing = msg.playing;
        break;
      case "trigger_event":
        this.triggers.push(msg);
        if (this.triggers.length > MAX_TRIGGER_MARKERS) {
          this.triggers.splice(0, this.triggers.length - MAX_TRIGGER_MARKERS);
        }
        break;
      case "level_meters":
        this.levels = { master: msg.master, tracks: msg.tracks };
        break;
      case "error":
        this.lastError = { code: msg.code, message: msg.message };
        break;
    }
    for (const listener of this.listeners) listener(this);
  }

  track(id: string) {
    return this.state?.tracks.find((t) => t.id === id);
  }

  /** Series payload for a track's plot, if the dataset snapshot carried it. */
  seriesFor(trackId: string) {
    const t = this.track(trackId);
    if (!t || !this.state?.data) return undefined;
    return this.state.data.series.find((s) => s.name === t.series);
  }
}
