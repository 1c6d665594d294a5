/**
 * Gapless playback scheduling for streamed PCM chunks.
 *
 * The server stamps every chunk with its absolute start frame. The scheduler
 * anchors the first chunk at `leadTime` seconds of output-clock headroom and
 * places each subsequent chunk at anchor + (startFrame - anchorFrame) /
 * sampleRate, so back-to-back chunks are sample-contiguous regardless of
 * network jitter. Discontinuities (dropped chunks, server resync) re-anchor
 * the clock and are counted, which is what the gap-per-minute budget in the
 * UI is measured against.
 *
 * The audio sink is injected so the scheduling math is testable without a
 * browser; `WebAudioSink` adapts it to an AudioContext.
 */
import type { AudioChunk } from "./protocol.js";

export interface AudioSink {
  /** Current output-clock time in seconds. */
  currentTime(): number;
  /** Queue a stereo buffer to start playing at `when` (output-clock time). */
  play(left: Float32Array<ArrayBuffer>, right: Float32Array<ArrayBuffer>, when: number): void;
}

export interface SchedulerStats {
  chunksScheduled: number;
  /** Stream discontinuities observed (missing frames forced a re-anchor). */
  gaps: number;
  /** Chunks that arrived too late to play on time (also re-anchor). */
  lateChunks: number;
}

export class ChunkScheduler {
  private anchorTime = 0;
  private anchorFrame = 0;
  private nextFrame: number | null = null;
  readonly stats: SchedulerStats = { chunksScheduled: 0, gaps: 0, lateChunks: 0 };

  constructor(
    private readonly sink: AudioSink,
    private readonly sampleRate: number,
    /** Headroom between arrival and playback; >= 2 chunk periods is safe. */
    private readonly leadTime = 0.1,
  ) {}

  /** Forget the stream position (stop, seek, or server resync marker). */
  reset(): void {
    this.nextFrame = null;
  }

  enqueue(chunk: AudioChunk): void {
    const frames = chunk.pcm.length / 2;
    if (frames === 0) return;

    if (this.nextFrame !== null && chunk.startFrame !== this.nextFrame) {
      this.stats.gaps++;
      this.nextFrame = null;
    }
    if (this.nextFrame === null) {
      this.anchorTime = this.sink.currentTime() + this.leadTime;
      this.anchorFrame = chunk.startFrame;
    }

    let when = this.anchorTime + (chunk.startFrame - this.anchorFrame) / this.sampleRate;
    if (when < this.sink.currentTime()) {
      // buffer underrun: play as soon as possible and re-anchor on this chunk
      this.stats.lateChunks++;
      this.anchorTime = this.sink.currentTime() + this.leadTime;
      this.anchorFrame = chunk.startFrame;
      when = this.anchorTime;
    }

    const left = new Float32Array(frames);
    const right = new Float32Array(frames);
    for (let i = 0; i < frames; i++) {
      left[i] = chunk.pcm[2 * i]! / 32768;
      right[i] = chunk.pcm[2 * i + 1]! / 32768;
    }
    this.sink.play(left, right, when);
    this.stats.chunksScheduled++;
    this.nextFrame = chunk.startFrame + frames;
  }
}

/** AudioContext-backed sink for the browser build. */
export class WebAudioSink implements AudioSink {
  constructor(private readonly context: AudioContext) {}

  currentTime(): number {
    return this.context.currentTime;
  }

  play(left: Float32Array<ArrayBuffer>, right: Float32Array<ArrayBuffer>, when: number): void {
    const buffer = this.context.createBuffer(2, left.length, this.context.sampleRate);
    buffer.copyToChannel(left, 0);
    buffer.copyToChannel(right, 1);
    const node = this.context.createBufferSource();
    node.buffer = buffer;
    node.connect(this.context.destination);
    node.start(when);
  }
}
