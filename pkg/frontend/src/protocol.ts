/**
 * Wire protocol types for the sonify session server.
 *
 * One WebSocket connection carries JSON text frames (control traffic, typed
 * below) and binary frames (PCM audio chunks). Every schema here mirrors the
 * server's validators; messages that fail to parse must never be sent.
 */
import { z } from "zod";

const finite = z.number().finite();

export const oscillatorKind = z.enum(["sine", "square", "saw", "triangle"]);
export type OscillatorKind = z.infer<typeof oscillatorKind>;

export const sourceSchema = z.discriminatedUnion("type", [
  z.object({
    type: z.literal("oscillator"),
    kind: oscillatorKind,
    frequency: finite.positive(),
    amplitude: finite.min(0).max(1),
  }),
  z.object({
    type: z.literal("sample"),
    file: z.string(),
    speed: finite.positive(),
    amplitude: finite.min(0).max(1),
  }),
]);
export type Source = z.infer<typeof sourceSchema>;

export const envelopeSchema = z.object({
  attack: finite.min(0),
  decay: finite.min(0),
  sustain: finite.min(0).max(1),
  release: finite.min(0),
});
export type Envelope = z.infer<typeof envelopeSchema>;

export const rangeMappingSchema = z.object({ min: finite, range: finite });

export const trackSchema = z.object({
  id: z.string(),
  series: z.string(),
  source: sourceSchema,
  mode: z.enum(["continuous", "discrete"]),
  mappings: z.object({
    frequency: rangeMappingSchema.optional(),
    amplitude: z.literal(true).optional(),
    mod_index: rangeMappingSchema.optional(),
  }),
  envelope: envelopeSchema,
  envelope_edited: z.boolean(),
  pan: finite.min(-1).max(1),
  muted: z.boolean(),
  modulator: z
    .object({ kind: oscillatorKind, frequency: finite.positive() })
    .optional(),
  discrete: z.object({ threshold: finite, increment: finite }).optional(),
});
export type Track = z.infer<typeof trackSchema>;

export const seriesDataSchema = z.object({
  name: z.string(),
  color: z.tuple([finite, finite, finite]),
  min: finite,
  max: finite,
  values: z.array(finite),
});
export type SeriesData = z.infer<typeof seriesDataSchema>;

export const sessionStateSchema = z.object({
  dataset: z.string().nullable(),
  normalization: z.enum(["minmax", "zscore"]),
  sample_rate: z.number().int().positive(),
  block_size: z.number().int().positive(),
  rate: finite.positive(),
  transport_state: z.enum(["stopped", "playing"]),
  cursor: finite,
  interleave: z.object({ enabled: z.boolean(), tracks: z.array(z.string()) }),
  tracks: z.array(trackSchema),
  fm_links: z.array(z.object({ modulator: z.string(), carrier: z.string() })),
  data: z
    .object({
      name: z.string(),
      length: z.number().int().min(0),
      series: z.array(seriesDataSchema),
    })
    .optional(),
});
export type SessionState = z.infer<typeof sessionStateSchema>;

// ---------------------------------------------------------------------------
// Client -> server
// ---------------------------------------------------------------------------

const track = z.string();

export const clientMessageSchema = z.discriminatedUnion("type", [
  z.object({ type: z.literal("load_dataset"), path: z.string() }),
  z.object({ type: z.literal("set_normalization"), method: z.enum(["minmax", "zscore"]) }),
  z.object({ type: z.literal("play") }),
  z.object({ type: z.literal("stop") }),
  z.object({ type: z.literal("reset") }),
  z.object({ type: z.literal("set_rate"), rate: finite.positive() }),
  z.object({ type: z.literal("mute"), track, muted: z.boolean() }),
  z.object({ type: z.literal("set_source"), track, source: sourceSchema }),
  z.object({
    type: z.literal("set_mapping"),
    track,
    target: z.enum(["frequency", "amplitude", "mod_index"]),
    // frequency/mod_index carry a range mapping (null unmaps); amplitude
    // mapping is a plain on/off flag
    mapping: rangeMappingSchema.nullable().optional(),
    enabled: z.boolean().optional(),
  }),
  z.object({ type: z.literal("set_envelope"), track, envelope: envelopeSchema.partial() }),
  z.object({ type: z.literal("set_mode"), track, mode: z.enum(["continuous", "discrete"]) }),
  z.object({
    type: z.literal("set_discrete_rule"),
    track,
    rule: z.object({ threshold: finite, increment: finite }),
  }),
  z.object({ type: z.literal("add_fm_link"), modulator: track, carrier: track }),
  z.object({ type: z.literal("remove_fm_link"), modulator: track, carrier: track }),
  z.object({ type: z.literal("move_speaker"), track, x: finite.min(-1).max(1) }),
  z.object({ type: z.literal("set_interleave"), enabled: z.boolean(), tracks: z.array(track) }),
]);
export type ClientMessage = z.infer<typeof clientMessageSchema>;

// ---------------------------------------------------------------------------
// Server -> client
// ---------------------------------------------------------------------------

export const serverMessageSchema = z.discriminatedUnion("type", [
  z.object({
    type: z.literal("state_snapshot"),
    state: sessionStateSchema,
    frame: z.number().int().min(0),
  }),
  z.object({
    type: z.literal("cursor_update"),
    cursor: finite,
    frame: z.number().int().min(0),
    playing: z.boolean(),
  }),
  z.object({
    type: z.literal("trigger_event"),
    time: finite,
    track: z.string(),
    row: z.number().int().min(0),
    value: finite,
  }),
  z.object({
    type: z.literal("level_meters"),
    frame: z.number().int().min(0),
    master: finite.min(0),
    tracks: z.record(z.object({ rms: finite.min(0), freq: finite.min(0) })),
  }),
  z.object({ type: z.literal("error"), code: z.string(), message: z.string() }),
]);
export type ServerMessage = z.infer<typeof serverMessageSchema>;

/** Parse an incoming text frame; throws ZodError/SyntaxError on bad input. */
export function parseServerMessage(frame: string): ServerMessage {
  return serverMessageSchema.parse(JSON.parse(frame));
}

/** Validate and serialize an outgoing control message. */
export function serializeClientMessage(msg: ClientMessage): string {
  return JSON.stringify(clientMessageSchema.parse(msg));
}

// ---------------------------------------------------------------------------
// Binary audio frames: 8-byte little-endian uint64 start frame, then
// interleaved stereo int16 little-endian PCM.
// ---------------------------------------------------------------------------

export interface AudioChunk {
  /** Absolute frame index of the first sample pair. */
  startFrame: number;
  /** Interleaved stereo samples: [L0, R0, L1, R1, ...]. */
  pcm: Int16Array;
}

export function decodeAudioChunk(buffer: ArrayBuffer): AudioChunk {
  if (buffer.byteLength < 8 || (buffer.byteLength - 8) % 4 !== 0) {
    throw new Error(`bad audio frame length ${buffer.byteLength}`);
  }
  const view = new DataView(buffer);
  const startFrame = Number(view.getBigUint64(0, true));
  if (!Number.isSafeInteger(startFrame)) {
    throw new Error(`start frame ${startFrame} exceeds safe integer range`);
  }
  const pcm = new Int16Array(buffer.byteLength / 2 - 4);
  for (let i = 0; i < pcm.length; i++) {
    pcm[i] = view.getInt16(8 + 2 * i, true);
  }
  return { startFrame, pcm };
}

export function encodeAudioChunk(chunk: AudioChunk): ArrayBuffer {
  const buffer = new ArrayBuffer(8 + chunk.pcm.length * 2);
  const view = new DataView(buffer);
  view.setBigUint64(0, BigInt(chunk.startFrame), true);
  for (let i = 0; i < chunk.pcm.length; i++) {
    view.setInt16(8 + 2 * i, chunk.pcm[i]!, true);
  }
  return buffer;
}
