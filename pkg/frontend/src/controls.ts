/**
 * Widget events -> control messages.
 *
 * Every committed edit maps to exactly one schema-valid message. Continuous
 * widgets (sliders, speaker drags) are rate-limited so a drag gesture emits
 * at most `maxPerSecond` messages, always ending with the final value.
 */
import type { ClientMessage, Envelope, Source } from "./protocol.js";
import { clientMessageSchema } from "./protocol.js";

export type WidgetEvent =
  | { widget: "play" }
  | { widget: "stop" }
  | { widget: "reset" }
  | { widget: "rate-input"; rate: number }
  | { widget: "normalization-select"; method: "minmax" | "zscore" }
  | { widget: "mute-button"; track: string; muted: boolean }
  | { widget: "source-select"; track: string; source: Source }
  | { widget: "mode-toggle"; track: string; mode: "continuous" | "discrete" }
  | { widget: "frequency-sliders"; track: string; min: number; range: number }
  | { widget: "frequency-unmap"; track: string }
  | { widget: "amplitude-toggle"; track: string; enabled: boolean }
  | { widget: "mod-index-sliders"; track: string; min: number; range: number }
  | { widget: "mod-index-unmap"; track: string }
  | { widget: "envelope-sliders"; track: string; envelope: Partial<Envelope> }
  | { widget: "threshold-fields"; track: string; threshold: number; increment: number }
  | { widget: "fm-link-add"; modulator: string; carrier: string }
  | { widget: "fm-link-remove"; modulator: string; carrier: string }
  | { widget: "speaker-drag"; track: string; x: number }
  | { widget: "interleave-toggle"; enabled: boolean; tracks: string[] };

export function clamp(value: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, value));
}

/** Translate one committed widget event into its wire message. */
export function messageForEvent(event: WidgetEvent): ClientMessage {
  switch (event.widget) {
    case "play":
      return { type: "play" };
    case "stop":
      return { type: "stop" };
    case "reset":
      return { type: "reset" };
    case "rate-input":
      return { type: "set_rate", rate: event.rate };
    case "normalization-select":
      return { type: "set_normalization", method: event.method };
    case "mute-button":
      return { type: "mute", track: event.track, muted: event.muted };
    case "source-select":
      return { type: "set_source", track: event.track, source: event.source };
    case "mode-toggle":
      return { type: "set_mode", track: event.track, mode: event.mode };
    case "frequency-sliders":
      return {
        type: "set_mapping",
        track: event.track,
        target: "frequency",
        mapping: { min: event.min, range: event.range },
      };
    case "frequency-unmap":
      return { type: "set_mapping", track: event.track, target: "frequency", mapping: null };
    case "amplitude-toggle":
      return { type: "set_mapping", track: event.track, target: "amplitude", enabled: event.enabled };
    case "mod-index-sliders":
      return {
        type: "set_mapping",
        track: event.track,
        target: "mod_index",
        mapping: { min: event.min, range: event.range },
      };
    case "mod-index-unmap":
      return { type: "set_mapping", track: event.track, target: "mod_index", mapping: null };
    case "envelope-sliders":
      return { type: "set_envelope", track: event.track, envelope: event.envelope };
    case "threshold-fields":
      return {
        type: "set_discrete_rule",
        track: event.track,
        rule: { threshold: event.threshold, increment: event.increment },
      };
    case "fm-link-add":
      return { type: "add_fm_link", modulator: event.modulator, carrier: event.carrier };
    case "fm-link-remove":
      return { type: "remove_fm_link", modulator: event.modulator, carrier: event.carrier };
    case "speaker-drag":
      // drags can overshoot the stage; the protocol only accepts [-1, 1]
      return { type: "move_speaker", track: event.track, x: clamp(event.x, -1, 1) };
    case "interleave-toggle":
      return { type: "set_interleave", enabled: event.enabled, tracks: event.tracks };
  }
}

/** Validate-and-emit wrapper; throws if a widget produced a bad message. */
export function emitEvent(event: WidgetEvent, send: (msg: ClientMessage) => void): void {
  send(clientMessageSchema.parse(messageForEvent(event)));
}

/**
 * Trailing-edge rate limiter for continuous widgets.
 *
 * The first value in a burst goes out immediately; later values are coalesced
 * so at most `maxPerSecond` messages leave per second, and the last value of
 * the gesture is always delivered.
 */
export class SliderThrottle<T> {
  private lastSent = -Infinity;
  private pending: T | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private readonly intervalMs: number;

  constructor(
    private readonly send: (value: T) => void,
    maxPerSecond = 30,
    private readonly now: () => number = () => Date.now(),
    private readonly schedule: (fn: () => void, ms: number) => ReturnType<typeof setTimeout> = setTimeout,
  ) {
    this.intervalMs = 1000 / maxPerSecond;
  }

  push(value: T): void {
    const elapsed = this.now() - this.lastSent;
    if (elapsed >= this.intervalMs) {
      this.lastSent = this.now();
      this.send(value);
      return;
    }
    this.pending = value;
    if (this.timer === null) {
      this.timer = this.schedule(() => this.flush(), this.intervalMs - elapsed);
    }
  }

  /** Deliver any coalesced value now (end of a drag gesture). */
  flush(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    if (this.pending !== null) {
      const value = this.pending;
      this.pending = null;
      this.lastSent = this.now();
      this.send(value);
    }
  }
}

/**
 * Speaker-stage drag model: pixel position -> pan x in [-1, 1].
 * The stage maps its left edge to -1 and right edge to +1.
 */
export function speakerXFromPixels(pixelX: number, stageLeft: number, stageWidth: number): number {
  return clamp(((pixelX - stageLeft) / stageWidth) * 2 - 1, -1, 1);
}
